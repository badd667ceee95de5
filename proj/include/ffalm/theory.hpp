#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "ffalm/engine.hpp"

namespace ffalm {

// Scalar minimax testbed. Client i contributes
//   F_i(w, l) = base_i(w) + l * c_i * w - (rho/2) * l^2
// with base_i either a_i*((w-s_i)^2 + 3 sin^2(w-s_i))  (PL, nonconvex)
// or a_i*(w-s_i)^2. Each F_i(w, .) is rho-strongly concave, so the
// inner maximum and the primal risk have closed forms.
enum class TestbedBase { pl_sin, quadratic };

struct TestbedClient {
  double a = 1.0;      // base scale, > 0
  double c = 0.0;      // bilinear coupling
  double shift = 0.0;  // base minimizer location
};

struct TestbedProblem {
  std::vector<TestbedClient> clients;
  std::vector<double> p;
  double rho = 1.0;
  TestbedBase base = TestbedBase::pl_sin;
};

void validate_problem(const TestbedProblem& pb);

// Single-client view (p = [1]) of client i.
TestbedProblem client_problem(const TestbedProblem& pb, std::size_t i);

double testbed_value(const TestbedProblem& pb, double w, double lambda);
double testbed_grad_w(const TestbedClient& cl, TestbedBase base, double w,
                      double lambda);
double testbed_grad_lambda(const TestbedClient& cl, double rho, double w,
                           double lambda);

// R_S(w) = max_lambda of the weighted objective, in closed form.
double primal_risk(const TestbedProblem& pb, double w);

// Dense grid over [-10, 10] plus golden-section refinement.
struct PrimalStar {
  double w_star = 0.0;
  double risk_star = 0.0;
};
PrimalStar solve_primal_star(const TestbedProblem& pb);

// Heterogeneity gap: global saddle value minus the p-weighted client
// saddle values. Zero for identical clients, never negative.
double gamma(const TestbedProblem& pb);

// Infimum over a grid of 0.5*f'(w)^2 / (f(w) - f_min); points within
// 1e-9 of the minimum are excluded. f' falls back to central
// differences when no derivative is supplied.
double estimate_pl_constant(const std::function<double(double)>& f, double lo,
                            double hi, double step,
                            const std::function<double(double)>& df = nullptr);

struct RateConfig {
  std::size_t rounds = 5000;
  std::size_t repetitions = 20;
  std::size_t local_iters = 1;
  std::size_t n_clients_override = 4;  // testbed size for the CLI default
  double sigma_w = 0.5;       // gradient noise scale, primal
  double sigma_lambda = 0.5;  // gradient noise scale, dual
  double w0 = 2.5;
  double lambda0 = 0.0;
  double theory_cw = 0.5;
  double theory_clambda = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> checkpoints{100, 200, 500, 1000, 2000, 5000};
};

struct GapPoint {
  std::size_t t = 0;
  double gap_mean = 0.0;
  double gap_std = 0.0;
};

// Federated rounds on the testbed with theory-mode schedules and
// additive Gaussian gradient noise; records R_S(w_t) - R_S* at each
// checkpoint, averaged over repetitions in ascending seed order.
std::vector<GapPoint> run_rate_experiment(const TestbedProblem& pb,
                                          const RateConfig& cfg);

// Least-squares slope of log(gap) against log(t). Requires >= 4
// checkpoints with positive gaps.
double fit_rate(const std::vector<GapPoint>& gaps);

// Joint distribution over (Y, S, predicted Y); probe[y][s][yhat].
using JointTable = std::array<std::array<std::array<double, 2>, 2>, 2>;

struct ProbeReport {
  std::array<double, 2> ap_gaps{0.0, 0.0};  // per-label error-rate gaps
  double dpd = 0.0;
  double eod = 0.0;
};

ProbeReport implication_probe(const JointTable& joint);

// Measured constants for a problem instance; dissimilarity comes from
// regressing sum_i p_i |grad_i|^2 on |sum_i p_i grad_i|^2 over a grid.
struct TheoryConstants {
  double smoothness_L = 0.0;
  double pl_mu = 0.0;
  double rho = 0.0;
  double b_w = 0.0;
  double b_lambda = 0.0;
  double dissimilarity_beta = 1.0;
  double kappa = 0.0;
  double gamma = 0.0;
};

TheoryConstants estimate_constants(const TestbedProblem& pb, const RateConfig& cfg);

// Heterogeneous default instance used by the rate experiment.
TestbedProblem default_testbed(std::size_t n_clients = 4);

}  // namespace ffalm
