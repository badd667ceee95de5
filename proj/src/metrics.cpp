#include "ffalm/metrics.hpp"

#include <string>

#include "ffalm/error.hpp"

namespace ffalm {

namespace {

struct GroupCounts {
  std::size_t n[2] = {0, 0};
  std::size_t pos_pred[2] = {0, 0};      // pred = 1
  std::size_t pos_label[2] = {0, 0};     // y = 1
  std::size_t true_pos[2] = {0, 0};      // pred = 1 and y = 1
};

GroupCounts count_groups(std::span<const std::uint8_t> pred,
                         std::span<const std::uint8_t> labels,
                         std::span<const std::uint8_t> sensitive) {
  GroupCounts c;
  for (std::size_t i = 0; i < sensitive.size(); ++i) {
    const int g = sensitive[i];
    c.n[g]++;
    if (pred[i] == 1) c.pos_pred[g]++;
    if (!labels.empty() && labels[i] == 1) {
      c.pos_label[g]++;
      if (pred[i] == 1) c.true_pos[g]++;
    }
  }
  return c;
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    fail(std::string("length mismatch between predictions and ") + what);
}

}  // namespace

double dpd(std::span<const std::uint8_t> predictions,
           std::span<const std::uint8_t> sensitive) {
  require_same_size(predictions.size(), sensitive.size(), "sensitive");
  const GroupCounts c = count_groups(predictions, {}, sensitive);
  for (int g = 0; g < 2; ++g) {
    if (c.n[g] == 0)
      fail("demographic parity undefined: sensitive group " +
           std::to_string(g) + " empty");
  }
  const double r0 = static_cast<double>(c.pos_pred[0]) / static_cast<double>(c.n[0]);
  const double r1 = static_cast<double>(c.pos_pred[1]) / static_cast<double>(c.n[1]);
  return std::abs(r0 - r1);
}

double eod(std::span<const std::uint8_t> predictions,
           std::span<const std::uint8_t> labels,
           std::span<const std::uint8_t> sensitive) {
  require_same_size(predictions.size(), labels.size(), "labels");
  require_same_size(predictions.size(), sensitive.size(), "sensitive");
  const GroupCounts c = count_groups(predictions, labels, sensitive);
  for (int g = 0; g < 2; ++g) {
    if (c.pos_label[g] == 0)
      fail("equal opportunity undefined: sensitive group " + std::to_string(g) +
           " has no positive labels");
  }
  const double t0 =
      static_cast<double>(c.true_pos[0]) / static_cast<double>(c.pos_label[0]);
  const double t1 =
      static_cast<double>(c.true_pos[1]) / static_cast<double>(c.pos_label[1]);
  return std::abs(t0 - t1);
}

double accuracy(std::span<const std::uint8_t> predictions,
                std::span<const std::uint8_t> labels) {
  require_same_size(predictions.size(), labels.size(), "labels");
  if (predictions.empty()) fail("accuracy over an empty set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(predictions.size());
}

double group_ce_mu(const ModelParams& model, const LabeledDataset& ds,
                   std::span<const std::uint32_t> indices, CeMode ce) {
  if (indices.empty()) fail("group cross-entropy over an empty group");
  double mean = 0.0, k = 0.0;
  for (std::uint32_t i : indices) {
    k += 1.0;
    mean += (sample_ce(model, ds.row(i), ds.labels[i], ce) - mean) / k;
  }
  return mean;
}

SurrogateGap surrogate_gap(const ModelParams& model, const LabeledDataset& ds,
                           CeMode ce) {
  const GroupView g = split_by_group(ds);
  if (g.s0.empty()) fail("surrogate gap undefined: sensitive group 0 empty");
  if (g.s1.empty()) fail("surrogate gap undefined: sensitive group 1 empty");
  SurrogateGap out;
  out.mu_s0 = group_ce_mu(model, ds, g.s0, ce);
  out.mu_s1 = group_ce_mu(model, ds, g.s1, ce);
  out.delta_mu = out.mu_s0 - out.mu_s1;
  return out;
}

std::vector<std::uint8_t> predict_labels(const ModelParams& model,
                                         const LabeledDataset& ds) {
  if (ds.d != model.arch.d)
    fail("dimension mismatch: model expects d=" + std::to_string(model.arch.d) +
         ", dataset has d=" + std::to_string(ds.d));
  std::vector<std::uint8_t> out(ds.n);
  for (std::size_t i = 0; i < ds.n; ++i) out[i] = predict_label(model, ds.row(i));
  return out;
}

FairnessReport fairness_report(std::span<const std::uint8_t> predictions,
                               const LabeledDataset& ds) {
  FairnessReport r;
  r.dpd = dpd(predictions, ds.sensitive);
  r.eod = eod(predictions, ds.labels, ds.sensitive);
  r.accuracy = accuracy(predictions, ds.labels);
  const GroupCounts c = count_groups(predictions, ds.labels, ds.sensitive);
  r.group_positive_rates = {
      static_cast<double>(c.pos_pred[0]) / static_cast<double>(c.n[0]),
      static_cast<double>(c.pos_pred[1]) / static_cast<double>(c.n[1])};
  r.group_tprs = {
      static_cast<double>(c.true_pos[0]) / static_cast<double>(c.pos_label[0]),
      static_cast<double>(c.true_pos[1]) / static_cast<double>(c.pos_label[1])};
  return r;
}

FairnessReport fairness_report(const ModelParams& model, const LabeledDataset& ds) {
  return fairness_report(predict_labels(model, ds), ds);
}

}  // namespace ffalm
