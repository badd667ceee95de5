#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ffalm {

// Binary-classification dataset with a binary sensitive attribute.
// Immutable after validation; safe to share across threads.
struct LabeledDataset {
  std::size_t n = 0;  // samples
  std::size_t d = 0;  // feature dimension
  std::vector<double> features;   // row-major n*d
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> sensitive;

  const double* row(std::size_t i) const { return features.data() + i * d; }
};

// Index sets per sensitive attribute; either side may be empty.
struct GroupView {
  std::vector<std::uint32_t> s0;
  std::vector<std::uint32_t> s1;
};

struct Batch {
  std::vector<std::uint32_t> indices;
};

// Validates raw arrays into a dataset. Throws Error on length mismatch,
// non-binary label/sensitive entries, or non-finite features.
LabeledDataset validate_dataset(std::vector<double> features, std::size_t d,
                                std::vector<std::uint8_t> labels,
                                std::vector<std::uint8_t> sensitive);

GroupView split_by_group(const LabeledDataset& ds);

// Uniform draw of min(batch_size, n) indices without replacement.
// batch_size == 0 is an error.
Batch sample_batch(const LabeledDataset& ds, std::size_t batch_size,
                   std::mt19937_64& rng);

// Row-subset copy (used to materialize per-client shards).
LabeledDataset subset(const LabeledDataset& ds, std::span<const std::uint32_t> idx);

}  // namespace ffalm
