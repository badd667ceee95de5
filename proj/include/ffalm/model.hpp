#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ffalm/dataset.hpp"

namespace ffalm {

enum class ArchKind { linear, mlp };

// Two-logit classifier architecture. Parameter layout of the flat vector:
//   linear: [w_class0 (d), b0, w_class1 (d), b1]
//   mlp:    [W1 (h x d, row-major), b1 (h), W2 (2 x h, row-major), b2 (2)]
// with a tanh hidden layer for the mlp.
struct Arch {
  ArchKind kind = ArchKind::linear;
  std::size_t d = 0;
  std::size_t h = 0;  // hidden width, mlp only

  std::size_t dim() const {
    return kind == ArchKind::linear ? 2 * (d + 1) : h * (d + 1) + 2 * (h + 1);
  }
  bool operator==(const Arch&) const = default;
};

struct ModelParams {
  Arch arch;
  std::vector<double> w;
};

// Cross-entropy variant. `sigmoid` applies the logistic sigmoid to the
// true-class logit only; `softmax` normalizes over both logits.
enum class CeMode { sigmoid, softmax };

enum class GroupPolicy { lenient, strict };

using GradVector = std::vector<double>;

// Zero weights for linear, symmetric uniform +-1/sqrt(fan_in) for mlp.
ModelParams init_model(const Arch& arch, std::uint64_t master_seed);

std::array<double, 2> predict_logits(const ModelParams& m, const double* x);

// argmax of the logits; ties resolve to label 0.
std::uint8_t predict_label(const ModelParams& m, const double* x);

// Cross-entropy of one sample.
double sample_ce(const ModelParams& m, const double* x, std::uint8_t y,
                 CeMode ce = CeMode::sigmoid);

// Mean cross-entropy over the batch. Throws on an empty batch.
double task_loss(const ModelParams& m, const LabeledDataset& ds,
                 std::span<const std::uint32_t> batch,
                 CeMode ce = CeMode::sigmoid);

// Mean task-loss gradient over the batch.
GradVector grad_task(const ModelParams& m, const LabeledDataset& ds,
                     std::span<const std::uint32_t> batch,
                     CeMode ce = CeMode::sigmoid);

// Gradient of  L + lambda*delta_mu + (beta/2)*delta_mu^2  on the batch,
// i.e. grad_task + (lambda + beta*delta_mu) * grad(delta_mu).
// A batch containing only one sensitive group either throws (strict) or
// falls back to the plain task gradient (lenient); the lenient fallback
// increments *single_group_count when provided.
GradVector grad_augmented(const ModelParams& m, double lambda, double beta,
                          const LabeledDataset& ds,
                          std::span<const std::uint32_t> batch,
                          CeMode ce = CeMode::sigmoid,
                          GroupPolicy policy = GroupPolicy::lenient,
                          std::size_t* single_group_count = nullptr);

// Gradient of the per-group hinge objective
//   L + sum_g lambda_g*delta_g + (beta/2)*sum_g delta_g^2,
// delta_g = max(0, L - mu_g); the hinge subgradient at 0 is 0. Groups
// absent from the batch contribute nothing.
GradVector grad_hinge_penalty(const ModelParams& m,
                              const std::array<double, 2>& lambdas, double beta,
                              const LabeledDataset& ds,
                              std::span<const std::uint32_t> batch,
                              CeMode ce = CeMode::sigmoid);

// Rescales g to max_norm when ||g|| exceeds it; otherwise returns g
// unchanged. Bitwise idempotent.
GradVector clip_gradient(GradVector g, double max_norm);

ModelParams sgd_step(const ModelParams& m, const GradVector& g, double lr);

std::string arch_to_string(const Arch& a);
Arch arch_from_string(const std::string& s);

}  // namespace ffalm
