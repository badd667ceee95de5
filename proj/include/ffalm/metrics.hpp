#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ffalm/dataset.hpp"
#include "ffalm/model.hpp"

namespace ffalm {

struct FairnessReport {
  double dpd = 0.0;
  double eod = 0.0;
  double accuracy = 0.0;
  std::pair<double, double> group_positive_rates{0.0, 0.0};
  std::pair<double, double> group_tprs{0.0, 0.0};
};

// Signed mean-cross-entropy gap between the two sensitive groups.
// delta_mu keeps its sign; reports take |.| separately.
struct SurrogateGap {
  double mu_s0 = 0.0;
  double mu_s1 = 0.0;
  double delta_mu = 0.0;
};

// |P(pred=1 | S=0) - P(pred=1 | S=1)|. Throws if either group is empty.
double dpd(std::span<const std::uint8_t> predictions,
           std::span<const std::uint8_t> sensitive);

// |TPR_s0 - TPR_s1| over Y=1 samples. Throws if a group has no positives.
double eod(std::span<const std::uint8_t> predictions,
           std::span<const std::uint8_t> labels,
           std::span<const std::uint8_t> sensitive);

double accuracy(std::span<const std::uint8_t> predictions,
                std::span<const std::uint8_t> labels);

// Mean cross-entropy of the true class over the given sample indices.
double group_ce_mu(const ModelParams& model, const LabeledDataset& ds,
                   std::span<const std::uint32_t> indices,
                   CeMode ce = CeMode::sigmoid);

// mu(s0) - mu(s1) over the full dataset. Throws if a group is empty.
SurrogateGap surrogate_gap(const ModelParams& model, const LabeledDataset& ds,
                           CeMode ce = CeMode::sigmoid);

std::vector<std::uint8_t> predict_labels(const ModelParams& model,
                                         const LabeledDataset& ds);

FairnessReport fairness_report(std::span<const std::uint8_t> predictions,
                               const LabeledDataset& ds);
FairnessReport fairness_report(const ModelParams& model, const LabeledDataset& ds);

}  // namespace ffalm
