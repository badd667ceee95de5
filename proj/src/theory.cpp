#include "ffalm/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ffalm/error.hpp"
#include "ffalm/rng.hpp"

namespace ffalm {

namespace {

double base_value(const TestbedClient& cl, TestbedBase base, double w) {
  const double u = w - cl.shift;
  if (base == TestbedBase::quadratic) return cl.a * u * u;
  const double s = std::sin(u);
  return cl.a * (u * u + 3.0 * s * s);
}

double base_grad(const TestbedClient& cl, TestbedBase base, double w) {
  const double u = w - cl.shift;
  if (base == TestbedBase::quadratic) return 2.0 * cl.a * u;
  return cl.a * (2.0 * u + 3.0 * std::sin(2.0 * u));
}

double coupling_mean(const TestbedProblem& pb) {
  double c = 0.0;
  for (std::size_t i = 0; i < pb.clients.size(); ++i) c += pb.p[i] * pb.clients[i].c;
  return c;
}

// Golden-section minimization on [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi,
                  double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

void validate_problem(const TestbedProblem& pb) {
  if (pb.clients.empty()) fail("testbed needs at least one client");
  if (pb.clients.size() != pb.p.size()) fail("testbed p/client size mismatch");
  if (!(pb.rho > 0.0)) fail("testbed rho must be > 0");
  double sum = 0.0;
  for (double v : pb.p) {
    if (!(v >= 0.0)) fail("testbed p must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail("testbed p must sum to 1");
  for (const auto& cl : pb.clients) {
    if (!(cl.a > 0.0)) fail("testbed a_i must be > 0");
  }
}

TestbedProblem client_problem(const TestbedProblem& pb, std::size_t i) {
  TestbedProblem single;
  single.clients = {pb.clients.at(i)};
  single.p = {1.0};
  single.rho = pb.rho;
  single.base = pb.base;
  return single;
}

double testbed_value(const TestbedProblem& pb, double w, double lambda) {
  double v = 0.0;
  for (std::size_t i = 0; i < pb.clients.size(); ++i) {
    const auto& cl = pb.clients[i];
    v += pb.p[i] * (base_value(cl, pb.base, w) + lambda * cl.c * w -
                    0.5 * pb.rho * lambda * lambda);
  }
  return v;
}

double testbed_grad_w(const TestbedClient& cl, TestbedBase base, double w,
                      double lambda) {
  return base_grad(cl, base, w) + lambda * cl.c;
}

double testbed_grad_lambda(const TestbedClient& cl, double rho, double w,
                           double lambda) {
  return cl.c * w - rho * lambda;
}

double primal_risk(const TestbedProblem& pb, double w) {
  validate_problem(pb);
  double v = 0.0;
  for (std::size_t i = 0; i < pb.clients.size(); ++i) {
    v += pb.p[i] * base_value(pb.clients[i], pb.base, w);
  }
  const double cw = coupling_mean(pb) * w;
  return v + cw * cw / (2.0 * pb.rho);
}

PrimalStar solve_primal_star(const TestbedProblem& pb) {
  validate_problem(pb);
  auto f = [&](double w) { return primal_risk(pb, w); };
  constexpr double lo = -10.0, hi = 10.0, step = 1e-3;
  double best_w = lo;
  double best_f = f(lo);
  for (double w = lo + step; w <= hi + 0.5 * step; w += step) {
    const double v = f(w);
    if (v < best_f) {
      best_f = v;
      best_w = w;
    }
  }
  const double w_star =
      golden_min(f, std::max(lo, best_w - step), std::min(hi, best_w + step), 1e-10);
  return {w_star, f(w_star)};
}

double gamma(const TestbedProblem& pb) {
  validate_problem(pb);
  const double global_star = solve_primal_star(pb).risk_star;
  double weighted = 0.0;
  for (std::size_t i = 0; i < pb.clients.size(); ++i) {
    weighted += pb.p[i] * solve_primal_star(client_problem(pb, i)).risk_star;
  }
  return global_star - weighted;
}

double estimate_pl_constant(const std::function<double(double)>& f, double lo,
                            double hi, double step,
                            const std::function<double(double)>& df) {
  if (!(step > 0.0) || !(hi > lo)) fail("bad PL estimation domain");
  std::vector<double> ws, fs;
  for (double w = lo; w <= hi + 0.5 * step; w += step) {
    ws.push_back(w);
    fs.push_back(f(w));
  }
  const double fmin = *std::min_element(fs.begin(), fs.end());
  const double h = 1e-6;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const double gap = fs[i] - fmin;
    if (gap < 1e-9) continue;
    const double g = df ? df(ws[i]) : (f(ws[i] + h) - f(ws[i] - h)) / (2.0 * h);
    best = std::min(best, 0.5 * g * g / gap);
  }
  if (!std::isfinite(best))
    fail("PL estimation failed: function is constant on the domain");
  return best;
}

std::vector<GapPoint> run_rate_experiment(const TestbedProblem& pb,
                                          const RateConfig& cfg) {
  validate_problem(pb);
  if (cfg.checkpoints.empty()) fail("rate experiment needs checkpoints");
  for (std::size_t cp : cfg.checkpoints) {
    if (cp < 1 || cp > cfg.rounds)
      fail("checkpoint " + std::to_string(cp) + " outside [1, T]");
  }
  if (cfg.repetitions < 1) fail("rate experiment needs repetitions >= 1");

  FederationConfig sched;
  sched.scheduler = SchedulerMode::theory;
  sched.theory_cw = cfg.theory_cw;
  sched.theory_clambda = cfg.theory_clambda;
  sched.arch = {ArchKind::linear, 1, 0};  // placeholder; only schedules are used

  const double risk_star = solve_primal_star(pb).risk_star;
  const std::size_t n = pb.clients.size();

  std::vector<std::vector<double>> gaps(cfg.checkpoints.size());
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    double w = cfg.w0;
    double lambda = cfg.lambda0;
    std::size_t next_cp = 0;
    for (std::size_t t = 1; t <= cfg.rounds && next_cp < cfg.checkpoints.size(); ++t) {
      const auto [eta_w, eta_l] = scheduler_step(sched, t);
      double w_agg = 0.0, l_agg = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        auto rng = substream(cfg.seed, {rng_tag::kRateNoise, rep, t, i});
        std::normal_distribution<double> gauss(0.0, 1.0);
        double wi = w;
        for (std::size_t k = 0; k < cfg.local_iters; ++k) {
          const double g =
              testbed_grad_w(pb.clients[i], pb.base, wi, lambda) +
              cfg.sigma_w * gauss(rng);
          wi -= eta_w * g;
        }
        const double gl = testbed_grad_lambda(pb.clients[i], pb.rho, wi, lambda) +
                          cfg.sigma_lambda * gauss(rng);
        const double li = lambda + eta_l * gl;
        w_agg += pb.p[i] * wi;
        l_agg += pb.p[i] * li;
      }
      w = w_agg;
      lambda = l_agg;
      if (t == cfg.checkpoints[next_cp]) {
        gaps[next_cp].push_back(primal_risk(pb, w) - risk_star);
        ++next_cp;
      }
    }
  }

  std::vector<GapPoint> out(cfg.checkpoints.size());
  for (std::size_t j = 0; j < cfg.checkpoints.size(); ++j) {
    double mean = 0.0, k = 0.0;
    for (double v : gaps[j]) {
      k += 1.0;
      mean += (v - mean) / k;
    }
    double var = 0.0;
    for (double v : gaps[j]) var += (v - mean) * (v - mean);
    var /= std::max(1.0, k - 1.0);
    out[j] = {cfg.checkpoints[j], mean, std::sqrt(var)};
  }
  return out;
}

double fit_rate(const std::vector<GapPoint>& gaps) {
  if (gaps.size() < 4) fail("rate fit needs at least 4 checkpoints");
  for (const auto& g : gaps) {
    if (!(g.gap_mean > 0.0))
      fail("converged below measurement floor at t=" + std::to_string(g.t));
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(gaps.size());
  for (const auto& g : gaps) {
    const double x = std::log(static_cast<double>(g.t));
    const double y = std::log(g.gap_mean);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ProbeReport implication_probe(const JointTable& joint) {
  double total = 0.0;
  for (int y = 0; y < 2; ++y)
    for (int s = 0; s < 2; ++s)
      for (int q = 0; q < 2; ++q) {
        if (!(joint[y][s][q] >= 0.0)) fail("probe table entries must be >= 0");
        total += joint[y][s][q];
      }
  if (std::abs(total - 1.0) > 1e-9) fail("probe table must sum to 1");

  auto mass_s = [&](int s) {
    return joint[0][s][0] + joint[0][s][1] + joint[1][s][0] + joint[1][s][1];
  };
  for (int s = 0; s < 2; ++s) {
    if (mass_s(s) <= 0.0)
      fail("probe table degenerate: P(S=" + std::to_string(s) + ") = 0");
  }

  ProbeReport rep;
  for (int y = 0; y < 2; ++y) {
    double err[2];
    for (int s = 0; s < 2; ++s) {
      const double mass = joint[y][s][0] + joint[y][s][1];
      if (mass <= 0.0)
        fail("probe table degenerate: P(Y=" + std::to_string(y) +
             ",S=" + std::to_string(s) + ") = 0");
      err[s] = joint[y][s][1 - y] / mass;
    }
    rep.ap_gaps[y] = std::abs(err[0] - err[1]);
  }
  const double pos0 = (joint[0][0][1] + joint[1][0][1]) / mass_s(0);
  const double pos1 = (joint[0][1][1] + joint[1][1][1]) / mass_s(1);
  rep.dpd = std::abs(pos0 - pos1);
  const double tpr0 = joint[1][0][1] / (joint[1][0][0] + joint[1][0][1]);
  const double tpr1 = joint[1][1][1] / (joint[1][1][0] + joint[1][1][1]);
  rep.eod = std::abs(tpr0 - tpr1);
  return rep;
}

TheoryConstants estimate_constants(const TestbedProblem& pb, const RateConfig& cfg) {
  validate_problem(pb);
  TheoryConstants tc;
  tc.rho = pb.rho;
  tc.b_w = cfg.sigma_w;
  tc.b_lambda = cfg.sigma_lambda;
  tc.gamma = gamma(pb);
  tc.pl_mu = estimate_pl_constant([&](double w) { return primal_risk(pb, w); },
                                  -10.0, 10.0, 1e-2);

  // Smoothness: largest 2x2 Hessian spectral norm over the grid. Only
  // the ww entry varies with w; wl and ll entries are constant.
  const double c_mean = coupling_mean(pb);
  double max_l = 0.0;
  for (double w = -10.0; w <= 10.0; w += 1e-2) {
    double hww = 0.0;
    for (std::size_t i = 0; i < pb.clients.size(); ++i) {
      const auto& cl = pb.clients[i];
      const double u = w - cl.shift;
      hww += pb.p[i] * (pb.base == TestbedBase::quadratic
                            ? 2.0 * cl.a
                            : cl.a * (2.0 + 6.0 * std::cos(2.0 * u)));
    }
    const double tr = hww - pb.rho;
    const double det = hww * (-pb.rho) - c_mean * c_mean;
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    max_l = std::max({max_l, std::abs(0.5 * (tr + disc)), std::abs(0.5 * (tr - disc))});
  }
  tc.smoothness_L = max_l;

  // Dissimilarity: least-squares fit of sum_i p_i g_i^2 = beta^2 x + kappa^2.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, cnt = 0.0;
  for (double w = -3.0; w <= 3.0; w += 0.25) {
    for (double l = -3.0; l <= 3.0; l += 0.25) {
      double mean_g = 0.0, mean_sq = 0.0;
      for (std::size_t i = 0; i < pb.clients.size(); ++i) {
        const double g = testbed_grad_w(pb.clients[i], pb.base, w, l);
        mean_g += pb.p[i] * g;
        mean_sq += pb.p[i] * g * g;
      }
      const double x = mean_g * mean_g;
      sx += x;
      sy += mean_sq;
      sxx += x * x;
      sxy += x * mean_sq;
      cnt += 1.0;
    }
  }
  const double denom = cnt * sxx - sx * sx;
  double slope = denom != 0.0 ? (cnt * sxy - sx * sy) / denom : 1.0;
  double intercept = (sy - slope * sx) / cnt;
  tc.dissimilarity_beta = std::sqrt(std::max(1.0, slope));
  tc.kappa = std::sqrt(std::max(0.0, intercept));
  return tc;
}

TestbedProblem default_testbed(std::size_t n_clients) {
  if (n_clients < 1) fail("testbed needs at least one client");
  TestbedProblem pb;
  pb.rho = 1.0;
  pb.base = TestbedBase::pl_sin;
  const std::vector<TestbedClient> pool{
      {0.8, 1.5, 0.0}, {1.1, -0.5, 0.0}, {1.3, 1.0, 0.0}, {0.6, 2.0, 0.0}};
  const std::vector<double> weight_pool{0.1, 0.2, 0.3, 0.4};
  double total = 0.0;
  for (std::size_t i = 0; i < n_clients; ++i) {
    pb.clients.push_back(pool[i % pool.size()]);
    pb.p.push_back(weight_pool[i % weight_pool.size()]);
    total += pb.p.back();
  }
  for (auto& v : pb.p) v /= total;
  return pb;
}

}  // namespace ffalm
