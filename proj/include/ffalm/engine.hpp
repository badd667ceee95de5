#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ffalm/dataset.hpp"
#include "ffalm/model.hpp"
#include "ffalm/partition.hpp"

namespace ffalm {

enum class Algorithm { fedavg, ffalm, fpfl, fairfed };
enum class SchedulerMode { empirical, theory };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct FederationConfig {
  std::size_t n_clients = 10;
  std::size_t local_iters = 1;   // E
  std::size_t rounds = 70;       // T
  std::size_t batch_size = 128;

  double eta_w0 = 0.05;
  std::size_t lr_decay_step = 50;
  double lr_decay_factor = 0.5;
  double eta_lambda0 = 2.0;   // FPFL default 0.5, see config loader
  double dual_growth = 1.05;  // b; FPFL uses 1.0 (constant dual rate)
  double penalty_beta = 2.0;  // FPFL default 5.0
  double clip_norm = 1.0;
  double fairfed_beta = 0.5;

  Algorithm algorithm = Algorithm::fedavg;
  SchedulerMode scheduler = SchedulerMode::empirical;
  double theory_cw = 0.5;       // eta_w = cw / t
  double theory_clambda = 1.0;  // eta_lambda = clambda / t^(2/3)

  Arch arch{ArchKind::linear, 0, 0};
  CeMode ce = CeMode::sigmoid;
  GroupPolicy group_policy = GroupPolicy::lenient;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

// Throws if any invariant is violated (N,E >= 1, eta_w0 > 0,
// eta_lambda0 >= 0, beta >= 0, b >= 1, clip_norm > 0).
void validate_config(const FederationConfig& cfg);

// Scalar multiplier for FFALM; non-negative pair for FPFL.
struct DualState {
  double lambda = 0.0;
  std::array<double, 2> hinge{0.0, 0.0};
};

struct RoundRecord {
  std::size_t round = 0;
  double eta_w = 0.0;
  double eta_lambda = 0.0;
  double lambda = 0.0;  // FPFL logs lambda0 + lambda1
  double train_loss = 0.0;
  double acc = 0.0;
  double dpd = 0.0;
  double eod = 0.0;
};

struct MetricsLog {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::vector<RoundRecord> rounds;
  std::size_t single_group_batches = 0;  // lenient gradient fallbacks
  std::size_t single_group_shards = 0;   // dual updates skipped, one-group clients
};

struct TrainResult {
  MetricsLog log;
  ModelParams model;
  DualState dual;
};

// (eta_w, eta_lambda) for communication round t >= 1.
std::pair<double, double> scheduler_step(const FederationConfig& cfg, std::size_t t);

// lambda + eta_lambda * delta_mu. Inputs must be finite.
double dual_update(double lambda, double eta_lambda, double delta_mu);

struct ClientUpdate {
  ModelParams model;
  double lambda = 0.0;
  std::array<double, 2> hinge{0.0, 0.0};
};

// One client's round of Algorithm FFALM: E clipped SGD steps on the
// augmented objective with the broadcast lambda held fixed, then a
// local dual ascent step on the full shard. A one-group shard leaves
// lambda unchanged and bumps *shard_fallbacks.
ClientUpdate local_train_ffalm(const ModelParams& global, double lambda_global,
                               const LabeledDataset& shard,
                               const FederationConfig& cfg, std::size_t t,
                               std::size_t client,
                               std::size_t* batch_fallbacks = nullptr,
                               std::size_t* shard_fallbacks = nullptr);

// E clipped SGD steps on the plain task gradient.
ModelParams local_train_fedavg(const ModelParams& global,
                               const LabeledDataset& shard,
                               const FederationConfig& cfg, std::size_t t,
                               std::size_t client);

// FPFL: hinged per-group constraints with projected dual ascent.
ClientUpdate local_train_fpfl(const ModelParams& global,
                              const std::array<double, 2>& duals,
                              const LabeledDataset& shard,
                              const FederationConfig& cfg, std::size_t t,
                              std::size_t client,
                              std::size_t* shard_fallbacks = nullptr);

// p-weighted average of client updates, reduced in ascending client
// order. Throws unless |sum p - 1| <= 1e-9 and dimensions agree.
std::pair<ModelParams, double> aggregate(std::span<const ClientUpdate> updates,
                                         std::span<const double> p);

// FairFed reweighting: p_i <- max(0, p_i - beta*|dpd_i - weighted mean|),
// renormalized; falls back to the previous weights if all vanish.
std::vector<double> fairfed_reweight(std::span<const double> p_prev,
                                     std::span<const double> client_dpds,
                                     double fairfed_beta);

// Full federated run: round 0 logs the initial model, then T rounds of
// broadcast / local training / aggregation, each evaluated on eval_ds.
TrainResult run_training(const FederationConfig& cfg, const PartitionPlan& plan,
                         const LabeledDataset& parent_ds,
                         const LabeledDataset& eval_ds);

}  // namespace ffalm
