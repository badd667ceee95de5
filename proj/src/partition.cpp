#include "ffalm/partition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "ffalm/error.hpp"
#include "ffalm/rng.hpp"

namespace ffalm {

LabeledDataset generate_biased(const SynthConfig& cfg, std::uint64_t seed) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(cfg.group_balance) || !in_unit(cfg.pos_rate_s0) ||
      !in_unit(cfg.pos_rate_s1))
    fail("synthetic config: probabilities must lie in [0,1]");
  if (cfg.n_samples < 4) fail("synthetic config: n_samples must be >= 4");
  if (cfg.d < 1) fail("synthetic config: d must be >= 1");
  if (!(cfg.noise >= 0.0)) fail("synthetic config: noise must be >= 0");

  auto rng = substream(seed, {rng_tag::kSynth});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t group_axis = cfg.d > 1 ? 1 : 0;
  std::vector<double> x(cfg.n_samples * cfg.d);
  std::vector<std::uint8_t> y(cfg.n_samples), s(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    s[i] = unif(rng) < cfg.group_balance ? 1 : 0;
    const double pos_rate = s[i] == 0 ? cfg.pos_rate_s0 : cfg.pos_rate_s1;
    y[i] = unif(rng) < pos_rate ? 1 : 0;
    double* row = x.data() + i * cfg.d;
    for (std::size_t j = 0; j < cfg.d; ++j) row[j] = cfg.noise * gauss(rng);
    row[0] += (y[i] == 1 ? 0.5 : -0.5) * cfg.separation;
    row[group_axis] += (s[i] == 1 ? 0.5 : -0.5) * cfg.group_shift;
  }
  return validate_dataset(std::move(x), cfg.d, std::move(y), std::move(s));
}

PartitionPlan dirichlet_partition(const LabeledDataset& ds, std::size_t n_clients,
                                  double alpha, std::uint64_t seed) {
  if (n_clients < 1) fail("n_clients must be >= 1");
  if (!(alpha > 0.0)) fail("alpha must be > 0");
  if (n_clients > ds.n)
    fail("cannot partition " + std::to_string(ds.n) + " samples across " +
         std::to_string(n_clients) + " clients");

  PartitionPlan plan;
  plan.client_indices.resize(n_clients);

  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < ds.n; ++i) {
      if (ds.labels[i] == cls) members.push_back(static_cast<std::uint32_t>(i));
    }
    if (members.empty()) continue;
    auto rng = substream(seed, {rng_tag::kPartition, static_cast<std::uint64_t>(cls)});
    std::shuffle(members.begin(), members.end(), rng);

    std::vector<double> q(n_clients);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    double total = 0.0;
    for (auto& v : q) total += (v = gamma(rng));
    if (total <= 0.0) {
      std::fill(q.begin(), q.end(), 1.0);
      total = static_cast<double>(n_clients);
    }

    // Largest-remainder rounding of q * |class| into integer counts.
    const double m = static_cast<double>(members.size());
    std::vector<std::size_t> counts(n_clients);
    std::vector<std::pair<double, std::size_t>> frac(n_clients);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n_clients; ++i) {
      const double share = q[i] / total * m;
      counts[i] = static_cast<std::size_t>(std::floor(share));
      frac[i] = {share - static_cast<double>(counts[i]), i};
      assigned += counts[i];
    }
    std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
      return a.first > b.first;
    });
    for (std::size_t r = 0; assigned < members.size(); ++r, ++assigned) {
      counts[frac[r % n_clients].second]++;
    }

    std::size_t cursor = 0;
    for (std::size_t i = 0; i < n_clients; ++i) {
      for (std::size_t k = 0; k < counts[i]; ++k) {
        plan.client_indices[i].push_back(members[cursor++]);
      }
    }
  }

  // No client may end up empty: move samples over from the largest one.
  for (std::size_t i = 0; i < n_clients; ++i) {
    while (plan.client_indices[i].empty()) {
      std::size_t donor = 0;
      for (std::size_t j = 1; j < n_clients; ++j) {
        if (plan.client_indices[j].size() > plan.client_indices[donor].size())
          donor = j;
      }
      if (plan.client_indices[donor].size() <= 1)
        fail("partition redistribution failed: no donor client");
      plan.client_indices[i].push_back(plan.client_indices[donor].back());
      plan.client_indices[donor].pop_back();
    }
  }

  plan.p.resize(n_clients);
  for (std::size_t i = 0; i < n_clients; ++i) {
    plan.p[i] = static_cast<double>(plan.client_indices[i].size()) /
                static_cast<double>(ds.n);
  }
  return plan;
}

double heterogeneity_report(const PartitionPlan& plan, const LabeledDataset& ds) {
  auto joint = [&](std::span<const std::uint32_t> idx) {
    std::array<double, 4> cells{0.0, 0.0, 0.0, 0.0};
    for (std::uint32_t i : idx) {
      cells[static_cast<std::size_t>(ds.labels[i]) * 2 + ds.sensitive[i]] += 1.0;
    }
    for (auto& c : cells) c /= static_cast<double>(idx.size());
    return cells;
  };
  std::vector<std::uint32_t> all(ds.n);
  std::iota(all.begin(), all.end(), 0u);
  const auto global = joint(all);

  double mean_tv = 0.0;
  for (const auto& client : plan.client_indices) {
    const auto local = joint(client);
    double tv = 0.0;
    for (int c = 0; c < 4; ++c) tv += std::abs(local[c] - global[c]);
    mean_tv += 0.5 * tv;
  }
  return mean_tv / static_cast<double>(plan.client_indices.size());
}

std::pair<LabeledDataset, LabeledDataset> split_eval(const LabeledDataset& ds,
                                                     double eval_fraction,
                                                     std::uint64_t seed) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
    fail("eval fraction must lie in (0,1)");
  std::vector<std::uint32_t> order(ds.n);
  std::iota(order.begin(), order.end(), 0u);
  auto rng = substream(seed, {rng_tag::kEvalSplit});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_eval = static_cast<std::size_t>(
      std::llround(eval_fraction * static_cast<double>(ds.n)));
  if (n_eval == 0 || n_eval >= ds.n)
    fail("eval fraction leaves an empty split");
  std::span<const std::uint32_t> eval_idx(order.data(), n_eval);
  std::span<const std::uint32_t> train_idx(order.data() + n_eval, ds.n - n_eval);
  return {subset(ds, train_idx), subset(ds, eval_idx)};
}

}  // namespace ffalm
