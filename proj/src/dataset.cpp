#include "ffalm/dataset.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ffalm/error.hpp"

namespace ffalm {

LabeledDataset validate_dataset(std::vector<double> features, std::size_t d,
                                std::vector<std::uint8_t> labels,
                                std::vector<std::uint8_t> sensitive) {
  if (d == 0) fail("feature dimension must be >= 1");
  if (features.size() % d != 0)
    fail("feature array size " + std::to_string(features.size()) +
         " is not a multiple of dimension " + std::to_string(d));
  const std::size_t n = features.size() / d;
  if (n == 0) fail("dataset must contain at least one sample");
  if (labels.size() != n || sensitive.size() != n)
    fail("length mismatch: " + std::to_string(n) + " feature rows, " +
         std::to_string(labels.size()) + " labels, " +
         std::to_string(sensitive.size()) + " sensitive values");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] > 1)
      fail("non-binary label at row " + std::to_string(i));
    if (sensitive[i] > 1)
      fail("non-binary sensitive value at row " + std::to_string(i));
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!std::isfinite(features[i]))
      fail("non-finite feature at row " + std::to_string(i / d) + ", column " +
           std::to_string(i % d));
  }
  LabeledDataset ds;
  ds.n = n;
  ds.d = d;
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.sensitive = std::move(sensitive);
  return ds;
}

GroupView split_by_group(const LabeledDataset& ds) {
  GroupView g;
  for (std::size_t i = 0; i < ds.n; ++i) {
    (ds.sensitive[i] == 0 ? g.s0 : g.s1).push_back(static_cast<std::uint32_t>(i));
  }
  return g;
}

Batch sample_batch(const LabeledDataset& ds, std::size_t batch_size,
                   std::mt19937_64& rng) {
  if (batch_size == 0) fail("batch_size must be >= 1");
  const std::size_t k = std::min(batch_size, ds.n);
  std::vector<std::uint32_t> pool(ds.n);
  std::iota(pool.begin(), pool.end(), 0u);
  // Partial Fisher-Yates: first k entries form the draw.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ds.n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return Batch{std::move(pool)};
}

LabeledDataset subset(const LabeledDataset& ds, std::span<const std::uint32_t> idx) {
  LabeledDataset out;
  out.n = idx.size();
  out.d = ds.d;
  out.features.reserve(idx.size() * ds.d);
  out.labels.reserve(idx.size());
  out.sensitive.reserve(idx.size());
  for (std::uint32_t i : idx) {
    const double* r = ds.row(i);
    out.features.insert(out.features.end(), r, r + ds.d);
    out.labels.push_back(ds.labels[i]);
    out.sensitive.push_back(ds.sensitive[i]);
  }
  return out;
}

}  // namespace ffalm
