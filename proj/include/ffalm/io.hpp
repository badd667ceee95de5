#pragma once

#include <string>
#include <vector>

#include "ffalm/dataset.hpp"
#include "ffalm/engine.hpp"
#include "ffalm/model.hpp"
#include "ffalm/partition.hpp"
#include "ffalm/theory.hpp"

namespace ffalm {

// Shortest round-trip decimal form of a double.
std::string fmt_double(double v);

// Dataset CSV: header f0,...,f{d-1},label,sensitive; one sample per row.
LabeledDataset load_csv_dataset(const std::string& path);
void write_csv_dataset(const std::string& path, const LabeledDataset& ds);

// Per-round metrics CSV:
// round,algorithm,seed,eta_w,eta_lambda,lambda,train_loss,acc,dpd,eod
void write_metrics_csv(const std::string& path, const MetricsLog& log);
MetricsLog read_metrics_csv(const std::string& path);

// Partition plan: one line per client listing its sample indices.
void write_partition_file(const std::string& path, const PartitionPlan& plan);
PartitionPlan read_partition_file(const std::string& path, std::size_t n_samples);

// Model checkpoint: one architecture descriptor line, then the flat
// parameter vector as little-endian 64-bit floats.
void write_checkpoint(const std::string& path, const ModelParams& m);
ModelParams read_checkpoint(const std::string& path);

// Rate experiment CSV: t,gap_mean,gap_std,repetitions
void write_rate_csv(const std::string& path, const std::vector<GapPoint>& gaps,
                    std::size_t repetitions);
std::vector<GapPoint> read_rate_csv(const std::string& path);

// One row per algorithm; metric columns are percent, median over seeds
// with interquartile range.
struct ComparisonRow {
  std::string algorithm;
  double acc_median = 0.0, acc_iqr = 0.0;
  double dpd_median = 0.0, dpd_iqr = 0.0;
  double eod_median = 0.0, eod_iqr = 0.0;
};

void write_comparison_csv(const std::string& path,
                          const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> read_comparison_csv(const std::string& path);
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

// Sorted-sample quantile with linear interpolation; q in [0,1].
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

}  // namespace ffalm
