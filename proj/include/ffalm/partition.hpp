#pragma once

#include <cstdint>
#include <vector>

#include "ffalm/dataset.hpp"

namespace ffalm {

// Synthetic biased tabular data: class means separated along axis 0,
// sensitive-group means shifted along axis 1 (axis 0 when d == 1), with
// configurable label-group correlation.
struct SynthConfig {
  std::size_t n_samples = 10000;
  std::size_t d = 10;
  double group_balance = 0.5;   // P(S=1)
  double pos_rate_s0 = 0.7;     // P(Y=1 | S=0)
  double pos_rate_s1 = 0.3;     // P(Y=1 | S=1)
  double separation = 2.0;      // class-mean distance along axis 0
  double group_shift = 1.0;     // group-mean distance along axis 1
  double noise = 1.0;           // Gaussian feature scale
};

LabeledDataset generate_biased(const SynthConfig& cfg, std::uint64_t seed);

// Client shards of a parent dataset with aggregation coefficients
// p_i = |D_i| / |D|.
struct PartitionPlan {
  std::vector<std::vector<std::uint32_t>> client_indices;
  std::vector<double> p;
};

// Per-class Dirichlet(alpha) allocation of samples to clients; every
// client is guaranteed at least one sample by redistribution from the
// largest client.
PartitionPlan dirichlet_partition(const LabeledDataset& ds, std::size_t n_clients,
                                  double alpha, std::uint64_t seed);

// Mean total-variation distance between each client's (label x group)
// distribution and the global one.
double heterogeneity_report(const PartitionPlan& plan, const LabeledDataset& ds);

// Deterministic held-out split: (train, eval), carved before partitioning.
std::pair<LabeledDataset, LabeledDataset> split_eval(const LabeledDataset& ds,
                                                     double eval_fraction,
                                                     std::uint64_t seed);

}  // namespace ffalm
