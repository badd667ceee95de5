#include "ffalm/engine.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "ffalm/error.hpp"
#include "ffalm/kernels.hpp"
#include "ffalm/metrics.hpp"
#include "ffalm/rng.hpp"

namespace ffalm {

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::fedavg: return "fedavg";
    case Algorithm::ffalm: return "ffalm";
    case Algorithm::fpfl: return "fpfl";
    case Algorithm::fairfed: return "fairfed";
  }
  fail("unreachable algorithm value");
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "fedavg") return Algorithm::fedavg;
  if (s == "ffalm") return Algorithm::ffalm;
  if (s == "fpfl") return Algorithm::fpfl;
  if (s == "fairfed") return Algorithm::fairfed;
  fail("unknown algorithm '" + s + "'");
}

void validate_config(const FederationConfig& cfg) {
  if (cfg.n_clients < 1) fail("n_clients must be >= 1");
  if (cfg.local_iters < 1) fail("local_iters must be >= 1");
  if (cfg.batch_size < 1) fail("batch_size must be >= 1");
  if (!(cfg.eta_w0 > 0.0)) fail("eta_w0 must be > 0");
  if (!(cfg.eta_lambda0 >= 0.0)) fail("eta_lambda0 must be >= 0");
  if (!(cfg.lr_decay_factor > 0.0)) fail("lr_decay_factor must be > 0");
  if (cfg.lr_decay_step < 1) fail("lr_decay_step must be >= 1");
  if (!(cfg.dual_growth >= 1.0)) fail("dual_growth must be >= 1");
  if (!(cfg.penalty_beta >= 0.0)) fail("penalty_beta must be >= 0");
  if (!(cfg.clip_norm > 0.0)) fail("clip_norm must be > 0");
  if (!(cfg.fairfed_beta >= 0.0)) fail("fairfed_beta must be >= 0");
  if (!(cfg.theory_cw > 0.0) || !(cfg.theory_clambda > 0.0))
    fail("theory schedule constants must be > 0");
  if (cfg.arch.d == 0) fail("architecture dimension unset");
  if (cfg.threads < 1) fail("threads must be >= 1");
}

std::pair<double, double> scheduler_step(const FederationConfig& cfg, std::size_t t) {
  if (t < 1) fail("scheduler round index starts at 1");
  if (cfg.scheduler == SchedulerMode::empirical) {
    const auto steps = static_cast<double>((t - 1) / cfg.lr_decay_step);
    const double eta_w = cfg.eta_w0 * std::pow(cfg.lr_decay_factor, steps);
    const double eta_l =
        cfg.eta_lambda0 * std::pow(cfg.dual_growth, static_cast<double>(t - 1));
    return {eta_w, eta_l};
  }
  const auto td = static_cast<double>(t);
  return {cfg.theory_cw / td, cfg.theory_clambda / std::pow(td, 2.0 / 3.0)};
}

double dual_update(double lambda, double eta_lambda, double delta_mu) {
  if (!std::isfinite(lambda) || !std::isfinite(eta_lambda) ||
      !std::isfinite(delta_mu))
    fail("dual update with non-finite input");
  if (!(eta_lambda > 0.0)) fail("dual update needs eta_lambda > 0");
  return lambda + eta_lambda * delta_mu;
}

namespace {

bool has_both_groups(const LabeledDataset& shard) {
  bool seen[2] = {false, false};
  for (std::size_t i = 0; i < shard.n; ++i) {
    seen[shard.sensitive[i]] = true;
    if (seen[0] && seen[1]) return true;
  }
  return false;
}

// Shared E-step local SGD loop; grad_fn(batch) yields the step direction.
template <typename GradFn>
ModelParams local_sgd(const ModelParams& global, const LabeledDataset& shard,
                      const FederationConfig& cfg, std::size_t t,
                      std::size_t client, GradFn&& grad_fn) {
  ModelParams w = global;
  const auto [eta_w, eta_l] = scheduler_step(cfg, t);
  (void)eta_l;
  for (std::size_t k = 1; k <= cfg.local_iters; ++k) {
    auto rng = substream(cfg.seed, {rng_tag::kBatch, t, client, k});
    const Batch batch = sample_batch(shard, cfg.batch_size, rng);
    GradVector g = clip_gradient(grad_fn(w, batch.indices), cfg.clip_norm);
    w = sgd_step(w, g, eta_w);
  }
  return w;
}

}  // namespace

ClientUpdate local_train_ffalm(const ModelParams& global, double lambda_global,
                               const LabeledDataset& shard,
                               const FederationConfig& cfg, std::size_t t,
                               std::size_t client, std::size_t* batch_fallbacks,
                               std::size_t* shard_fallbacks) {
  ClientUpdate out;
  out.model = local_sgd(
      global, shard, cfg, t, client,
      [&](const ModelParams& w, std::span<const std::uint32_t> idx) {
        return grad_augmented(w, lambda_global, cfg.penalty_beta, shard, idx,
                              cfg.ce, cfg.group_policy, batch_fallbacks);
      });
  const auto [eta_w, eta_l] = scheduler_step(cfg, t);
  (void)eta_w;
  out.lambda = lambda_global;
  if (has_both_groups(shard)) {
    const double delta = surrogate_gap(out.model, shard, cfg.ce).delta_mu;
    if (eta_l > 0.0) out.lambda = dual_update(lambda_global, eta_l, delta);
  } else {
    if (cfg.group_policy == GroupPolicy::strict)
      fail("client shard holds a single sensitive group");
    if (shard_fallbacks) ++*shard_fallbacks;
  }
  return out;
}

ModelParams local_train_fedavg(const ModelParams& global,
                               const LabeledDataset& shard,
                               const FederationConfig& cfg, std::size_t t,
                               std::size_t client) {
  return local_sgd(global, shard, cfg, t, client,
                   [&](const ModelParams& w, std::span<const std::uint32_t> idx) {
                     return grad_task(w, shard, idx, cfg.ce);
                   });
}

ClientUpdate local_train_fpfl(const ModelParams& global,
                              const std::array<double, 2>& duals,
                              const LabeledDataset& shard,
                              const FederationConfig& cfg, std::size_t t,
                              std::size_t client, std::size_t* shard_fallbacks) {
  ClientUpdate out;
  out.model = local_sgd(
      global, shard, cfg, t, client,
      [&](const ModelParams& w, std::span<const std::uint32_t> idx) {
        return grad_hinge_penalty(w, duals, cfg.penalty_beta, shard, idx, cfg.ce);
      });
  const auto [eta_w, eta_l] = scheduler_step(cfg, t);
  (void)eta_w;

  // Dual ascent on the full shard, projected to lambda >= 0.
  std::vector<std::uint32_t> all(shard.n);
  std::iota(all.begin(), all.end(), 0u);
  const double full_loss = task_loss(out.model, shard, all, cfg.ce);
  const GroupView g = split_by_group(shard);
  out.hinge = duals;
  bool missing_group = false;
  for (int grp = 0; grp < 2; ++grp) {
    const auto& idx = grp == 0 ? g.s0 : g.s1;
    if (idx.empty()) {
      missing_group = true;
      continue;
    }
    const double mu = group_ce_mu(out.model, shard, idx, cfg.ce);
    const double delta = std::max(0.0, full_loss - mu);
    if (eta_l > 0.0) out.hinge[grp] = std::max(0.0, duals[grp] + eta_l * delta);
  }
  if (missing_group) {
    if (cfg.group_policy == GroupPolicy::strict)
      fail("client shard holds a single sensitive group");
    if (shard_fallbacks) ++*shard_fallbacks;
  }
  return out;
}

std::pair<ModelParams, double> aggregate(std::span<const ClientUpdate> updates,
                                         std::span<const double> p) {
  if (updates.empty()) fail("aggregate called with no updates");
  if (updates.size() != p.size())
    fail("aggregate: " + std::to_string(updates.size()) + " updates vs " +
         std::to_string(p.size()) + " coefficients");
  double sum = 0.0;
  for (double v : p) sum += v;
  if (std::abs(sum - 1.0) > 1e-9)
    fail("coefficients sum to " + std::to_string(sum));
  const std::size_t dim = updates[0].model.w.size();
  for (const auto& u : updates) {
    if (u.model.w.size() != dim || !(u.model.arch == updates[0].model.arch))
      fail("aggregate: mismatched model dimensions");
  }

  ModelParams w;
  w.arch = updates[0].model.arch;
  w.w.assign(dim, 0.0);
  double lambda = 0.0;
  for (std::size_t i = 0; i < updates.size(); ++i) {
    kern::axpy(p[i], updates[i].model.w.data(), w.w.data(), dim);
    lambda += p[i] * updates[i].lambda;
  }
  return {std::move(w), lambda};
}

std::vector<double> fairfed_reweight(std::span<const double> p_prev,
                                     std::span<const double> client_dpds,
                                     double fairfed_beta) {
  if (p_prev.size() != client_dpds.size())
    fail("fairfed_reweight: size mismatch");
  double mean = 0.0;
  for (std::size_t i = 0; i < p_prev.size(); ++i)
    mean += p_prev[i] * client_dpds[i];
  std::vector<double> next(p_prev.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p_prev.size(); ++i) {
    next[i] = std::max(0.0, p_prev[i] - fairfed_beta * std::abs(client_dpds[i] - mean));
    total += next[i];
  }
  if (total <= 0.0) return {p_prev.begin(), p_prev.end()};
  for (auto& v : next) v /= total;
  return next;
}

namespace {

// Runs fn(i) for i in [0, n); exceptions are rethrown on the caller.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex err_mu;
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t count = std::min(threads, n);
  pool.reserve(count);
  for (std::size_t i = 0; i < count; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

RoundRecord evaluate_round(const FederationConfig& cfg, std::size_t t,
                           double eta_w, double eta_l, double lambda_logged,
                           const ModelParams& model,
                           const LabeledDataset& parent_ds,
                           const LabeledDataset& eval_ds) {
  RoundRecord rec;
  rec.round = t;
  rec.eta_w = eta_w;
  rec.eta_lambda = eta_l;
  rec.lambda = lambda_logged;
  std::vector<std::uint32_t> all(parent_ds.n);
  std::iota(all.begin(), all.end(), 0u);
  rec.train_loss = task_loss(model, parent_ds, all, cfg.ce);
  const FairnessReport rep = fairness_report(model, eval_ds);
  rec.acc = rep.accuracy;
  rec.dpd = rep.dpd;
  rec.eod = rep.eod;
  return rec;
}

}  // namespace

TrainResult run_training(const FederationConfig& cfg, const PartitionPlan& plan,
                         const LabeledDataset& parent_ds,
                         const LabeledDataset& eval_ds) {
  validate_config(cfg);
  if (plan.client_indices.size() != cfg.n_clients)
    fail("partition plan has " + std::to_string(plan.client_indices.size()) +
         " clients, config expects " + std::to_string(cfg.n_clients));
  if (parent_ds.d != cfg.arch.d)
    fail("dataset dimension " + std::to_string(parent_ds.d) +
         " does not match architecture d=" + std::to_string(cfg.arch.d));

  std::vector<LabeledDataset> shards;
  shards.reserve(cfg.n_clients);
  for (const auto& idx : plan.client_indices) shards.push_back(subset(parent_ds, idx));

  TrainResult result;
  result.log.algorithm = algorithm_name(cfg.algorithm);
  result.log.seed = cfg.seed;
  result.model = init_model(cfg.arch, cfg.seed);
  result.dual = DualState{};

  std::vector<double> p = plan.p;
  double fairfed_running_dpd = 0.0;
  std::size_t fairfed_reports = 0;

  const auto [eta_w1, eta_l1] = scheduler_step(cfg, 1);
  result.log.rounds.push_back(evaluate_round(cfg, 0, eta_w1, eta_l1, 0.0,
                                             result.model, parent_ds, eval_ds));

  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    try {
      const auto [eta_w, eta_l] = scheduler_step(cfg, t);
      std::vector<ClientUpdate> updates(cfg.n_clients);
      std::vector<std::size_t> batch_fb(cfg.n_clients, 0), shard_fb(cfg.n_clients, 0);
      std::vector<double> local_dpd(cfg.n_clients, -1.0);  // fairfed only; <0 = undefined

      parallel_for(cfg.n_clients, cfg.threads, [&](std::size_t i) {
        switch (cfg.algorithm) {
          case Algorithm::ffalm:
            updates[i] = local_train_ffalm(result.model, result.dual.lambda,
                                           shards[i], cfg, t, i, &batch_fb[i],
                                           &shard_fb[i]);
            break;
          case Algorithm::fpfl:
            updates[i] = local_train_fpfl(result.model, result.dual.hinge,
                                          shards[i], cfg, t, i, &shard_fb[i]);
            break;
          case Algorithm::fairfed: {
            // Local fairness of the broadcast model, reported to the server.
            try {
              local_dpd[i] = dpd(predict_labels(result.model, shards[i]),
                                 shards[i].sensitive);
            } catch (const Error&) {
              local_dpd[i] = -1.0;
            }
            updates[i].model = local_train_fedavg(result.model, shards[i], cfg, t, i);
            break;
          }
          case Algorithm::fedavg:
            updates[i].model = local_train_fedavg(result.model, shards[i], cfg, t, i);
            break;
        }
      });

      for (std::size_t i = 0; i < cfg.n_clients; ++i) {
        result.log.single_group_batches += batch_fb[i];
        result.log.single_group_shards += shard_fb[i];
      }

      if (cfg.algorithm == Algorithm::fairfed) {
        for (auto& v : local_dpd) {
          if (v >= 0.0) {
            ++fairfed_reports;
            fairfed_running_dpd += (v - fairfed_running_dpd) /
                                   static_cast<double>(fairfed_reports);
          }
        }
        for (auto& v : local_dpd) {
          if (v < 0.0) v = fairfed_running_dpd;
        }
        p = fairfed_reweight(p, local_dpd, cfg.fairfed_beta);
      }

      auto [model, lambda] = aggregate(updates, p);
      result.model = std::move(model);
      result.dual.lambda = lambda;
      if (cfg.algorithm == Algorithm::fpfl) {
        std::array<double, 2> agg{0.0, 0.0};
        for (std::size_t i = 0; i < cfg.n_clients; ++i) {
          agg[0] += p[i] * updates[i].hinge[0];
          agg[1] += p[i] * updates[i].hinge[1];
        }
        result.dual.hinge = agg;
      }

      const double lambda_logged = cfg.algorithm == Algorithm::fpfl
                                       ? result.dual.hinge[0] + result.dual.hinge[1]
                                       : result.dual.lambda;
      result.log.rounds.push_back(evaluate_round(
          cfg, t, eta_w, eta_l, lambda_logged, result.model, parent_ds, eval_ds));
    } catch (const Error& e) {
      fail("round " + std::to_string(t) + ": " + e.what());
    }
  }
  return result;
}

}  // namespace ffalm
