#include "ffalm/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ffalm/error.hpp"

namespace ffalm {

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col,
                  const std::string& path) {
  double v = 0.0;
  const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (r.ec != std::errc() || r.ptr != cell.data() + cell.size())
    fail(path + ": unparsable cell '" + cell + "' at row " + std::to_string(row) +
         ", column " + std::to_string(col));
  return v;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out.good()) fail("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in.good()) fail("cannot open '" + path + "'");
  return in;
}

}  // namespace

LabeledDataset load_csv_dataset(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(path + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 3)
    fail(path + ": header needs at least f0,label,sensitive");
  const std::size_t d = header.size() - 2;
  for (std::size_t j = 0; j < d; ++j) {
    const std::string want = "f" + std::to_string(j);
    if (header[j] != want)
      fail(path + ": header mismatch at column " + std::to_string(j) +
           ": expected " + want + ", got '" + header[j] + "'");
  }
  if (header[d] != "label")
    fail(path + ": header mismatch: expected label, got '" + header[d] + "'");
  if (header[d + 1] != "sensitive")
    fail(path + ": header mismatch: expected sensitive, got '" + header[d + 1] + "'");

  std::vector<double> features;
  std::vector<std::uint8_t> labels, sensitive;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != d + 2)
      fail(path + ": row " + std::to_string(row) + " has " +
           std::to_string(cells.size()) + " cells, expected " +
           std::to_string(d + 2));
    for (std::size_t j = 0; j < d; ++j)
      features.push_back(parse_cell(cells[j], row, j, path));
    const double y = parse_cell(cells[d], row, d, path);
    const double s = parse_cell(cells[d + 1], row, d + 1, path);
    if (y != 0.0 && y != 1.0)
      fail(path + ": non-binary label at row " + std::to_string(row));
    if (s != 0.0 && s != 1.0)
      fail(path + ": non-binary sensitive value at row " + std::to_string(row));
    labels.push_back(static_cast<std::uint8_t>(y));
    sensitive.push_back(static_cast<std::uint8_t>(s));
  }
  return validate_dataset(std::move(features), d, std::move(labels),
                          std::move(sensitive));
}

void write_csv_dataset(const std::string& path, const LabeledDataset& ds) {
  auto out = open_out(path);
  for (std::size_t j = 0; j < ds.d; ++j) out << "f" << j << ",";
  out << "label,sensitive\n";
  for (std::size_t i = 0; i < ds.n; ++i) {
    const double* r = ds.row(i);
    for (std::size_t j = 0; j < ds.d; ++j) out << fmt_double(r[j]) << ",";
    out << int(ds.labels[i]) << "," << int(ds.sensitive[i]) << "\n";
  }
}

void write_metrics_csv(const std::string& path, const MetricsLog& log) {
  auto out = open_out(path);
  out << "round,algorithm,seed,eta_w,eta_lambda,lambda,train_loss,acc,dpd,eod\n";
  for (const auto& r : log.rounds) {
    out << r.round << "," << log.algorithm << "," << log.seed << ","
        << fmt_double(r.eta_w) << "," << fmt_double(r.eta_lambda) << ","
        << fmt_double(r.lambda) << "," << fmt_double(r.train_loss) << ","
        << fmt_double(r.acc) << "," << fmt_double(r.dpd) << ","
        << fmt_double(r.eod) << "\n";
  }
}

MetricsLog read_metrics_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(path + ": empty file");
  if (split_csv_line(line) !=
      std::vector<std::string>{"round", "algorithm", "seed", "eta_w", "eta_lambda",
                               "lambda", "train_loss", "acc", "dpd", "eod"})
    fail(path + ": unexpected metrics header");
  MetricsLog log;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 10)
      fail(path + ": row " + std::to_string(row) + " has wrong cell count");
    RoundRecord r;
    r.round = static_cast<std::size_t>(parse_cell(cells[0], row, 0, path));
    log.algorithm = cells[1];
    log.seed = static_cast<std::uint64_t>(parse_cell(cells[2], row, 2, path));
    r.eta_w = parse_cell(cells[3], row, 3, path);
    r.eta_lambda = parse_cell(cells[4], row, 4, path);
    r.lambda = parse_cell(cells[5], row, 5, path);
    r.train_loss = parse_cell(cells[6], row, 6, path);
    r.acc = parse_cell(cells[7], row, 7, path);
    r.dpd = parse_cell(cells[8], row, 8, path);
    r.eod = parse_cell(cells[9], row, 9, path);
    log.rounds.push_back(r);
  }
  return log;
}

void write_partition_file(const std::string& path, const PartitionPlan& plan) {
  auto out = open_out(path);
  for (const auto& client : plan.client_indices) {
    for (std::size_t k = 0; k < client.size(); ++k) {
      if (k) out << " ";
      out << client[k];
    }
    out << "\n";
  }
}

PartitionPlan read_partition_file(const std::string& path, std::size_t n_samples) {
  auto in = open_in(path);
  PartitionPlan plan;
  std::string line;
  std::size_t total = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::uint32_t> idx;
    std::uint64_t v;
    while (ls >> v) {
      if (v >= n_samples)
        fail(path + ": index " + std::to_string(v) + " out of range");
      idx.push_back(static_cast<std::uint32_t>(v));
    }
    if (idx.empty()) fail(path + ": empty client line");
    total += idx.size();
    plan.client_indices.push_back(std::move(idx));
  }
  if (total != n_samples)
    fail(path + ": plan covers " + std::to_string(total) + " of " +
         std::to_string(n_samples) + " samples");
  plan.p.resize(plan.client_indices.size());
  for (std::size_t i = 0; i < plan.p.size(); ++i) {
    plan.p[i] = static_cast<double>(plan.client_indices[i].size()) /
                static_cast<double>(n_samples);
  }
  return plan;
}

void write_checkpoint(const std::string& path, const ModelParams& m) {
  auto out = open_out(path, true);
  out << arch_to_string(m.arch) << "\n";
  for (double v : m.w) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int b = 0; b < 8; ++b)
      bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    out.write(bytes, 8);
  }
}

ModelParams read_checkpoint(const std::string& path) {
  auto in = open_in(path, true);
  std::string header;
  if (!std::getline(in, header)) fail(path + ": missing checkpoint header");
  ModelParams m;
  m.arch = arch_from_string(header);
  const std::size_t dim = m.arch.dim();
  m.w.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    char bytes[8];
    if (!in.read(bytes, 8))
      fail(path + ": truncated checkpoint (expected " + std::to_string(dim) +
           " parameters)");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[b]))
              << (8 * b);
    m.w[i] = std::bit_cast<double>(bits);
  }
  char extra;
  if (in.read(&extra, 1)) fail(path + ": trailing bytes after checkpoint");
  return m;
}

void write_rate_csv(const std::string& path, const std::vector<GapPoint>& gaps,
                    std::size_t repetitions) {
  auto out = open_out(path);
  out << "t,gap_mean,gap_std,repetitions\n";
  for (const auto& g : gaps) {
    out << g.t << "," << fmt_double(g.gap_mean) << "," << fmt_double(g.gap_std)
        << "," << repetitions << "\n";
  }
}

std::vector<GapPoint> read_rate_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) ||
      split_csv_line(line) !=
          std::vector<std::string>{"t", "gap_mean", "gap_std", "repetitions"})
    fail(path + ": unexpected rate header");
  std::vector<GapPoint> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4) fail(path + ": bad rate row " + std::to_string(row));
    GapPoint g;
    g.t = static_cast<std::size_t>(parse_cell(cells[0], row, 0, path));
    g.gap_mean = parse_cell(cells[1], row, 1, path);
    g.gap_std = parse_cell(cells[2], row, 2, path);
    out.push_back(g);
  }
  return out;
}

namespace {

std::string pct2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void write_comparison_csv(const std::string& path,
                          const std::vector<ComparisonRow>& rows) {
  auto out = open_out(path);
  out << "# statistic: median over seeds; spread: interquartile range; "
         "values in percent\n";
  out << "algorithm,acc_median,acc_iqr,dpd_median,dpd_iqr,eod_median,eod_iqr\n";
  for (const auto& r : rows) {
    out << r.algorithm << "," << pct2(r.acc_median) << "," << pct2(r.acc_iqr) << ","
        << pct2(r.dpd_median) << "," << pct2(r.dpd_iqr) << ","
        << pct2(r.eod_median) << "," << pct2(r.eod_iqr) << "\n";
  }
}

std::vector<ComparisonRow> read_comparison_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::vector<ComparisonRow> rows;
  bool header_seen = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (split_csv_line(line) !=
          std::vector<std::string>{"algorithm", "acc_median", "acc_iqr",
                                   "dpd_median", "dpd_iqr", "eod_median",
                                   "eod_iqr"})
        fail(path + ": unexpected comparison header");
      header_seen = true;
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) fail(path + ": bad comparison row " + std::to_string(row));
    ComparisonRow r;
    r.algorithm = cells[0];
    r.acc_median = parse_cell(cells[1], row, 1, path);
    r.acc_iqr = parse_cell(cells[2], row, 2, path);
    r.dpd_median = parse_cell(cells[3], row, 3, path);
    r.dpd_iqr = parse_cell(cells[4], row, 4, path);
    r.eod_median = parse_cell(cells[5], row, 5, path);
    r.eod_iqr = parse_cell(cells[6], row, 6, path);
    rows.push_back(r);
  }
  if (!header_seen) fail(path + ": missing comparison header");
  return rows;
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %14s %14s %14s\n", "algorithm",
                "acc % (IQR)", "dpd % (IQR)", "eod % (IQR)");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-10s %7.2f (%4.2f) %7.2f (%4.2f) %7.2f (%4.2f)\n",
                  r.algorithm.c_str(), r.acc_median, r.acc_iqr, r.dpd_median,
                  r.dpd_iqr, r.eod_median, r.eod_iqr);
    os << buf;
  }
  return os.str();
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) fail("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) fail("quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - w) + values[hi] * w;
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

}  // namespace ffalm
