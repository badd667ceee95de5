#include "ffalm/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "ffalm/error.hpp"

namespace ffalm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, std::size_t line,
                            const std::string& why) {
  fail("config line " + std::to_string(line) + ", key '" + key + "': " + why);
}

double parse_double(const std::string& key, std::size_t line,
                    const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    bad_value(key, line, "expected a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, std::size_t line,
                        const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    bad_value(key, line, "expected a non-negative integer, got '" + v + "'");
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& key, std::size_t line,
                                          const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) bad_value(key, line, "empty list entry");
    out.push_back(parse_u64(key, line, item));
  }
  if (out.empty()) bad_value(key, line, "list must be non-empty");
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::set<std::string> seen;

  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail("config line " + std::to_string(lineno) + ": expected 'key = value', got '" +
           line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      fail("config line " + std::to_string(lineno) + ": empty key or value");
    if (!seen.insert(key).second)
      fail("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");

    auto num = [&] { return parse_double(key, lineno, val); };
    auto u64 = [&] { return parse_u64(key, lineno, val); };

    if (key == "algorithm") {
      cfg.fed.algorithm = algorithm_from_string(val);
    } else if (key == "n_clients") {
      cfg.fed.n_clients = u64();
    } else if (key == "local_iters") {
      cfg.fed.local_iters = u64();
    } else if (key == "rounds") {
      cfg.fed.rounds = u64();
    } else if (key == "batch_size") {
      cfg.fed.batch_size = u64();
    } else if (key == "eta_w0") {
      cfg.fed.eta_w0 = num();
    } else if (key == "lr_decay_step") {
      cfg.fed.lr_decay_step = u64();
    } else if (key == "lr_decay_factor") {
      cfg.fed.lr_decay_factor = num();
    } else if (key == "eta_lambda0") {
      cfg.fed.eta_lambda0 = num();
    } else if (key == "dual_growth") {
      cfg.fed.dual_growth = num();
    } else if (key == "penalty_beta") {
      cfg.fed.penalty_beta = num();
    } else if (key == "clip_norm") {
      cfg.fed.clip_norm = num();
    } else if (key == "fairfed_beta") {
      cfg.fed.fairfed_beta = num();
    } else if (key == "scheduler") {
      if (val == "empirical") {
        cfg.fed.scheduler = SchedulerMode::empirical;
      } else if (val == "theory") {
        cfg.fed.scheduler = SchedulerMode::theory;
      } else {
        bad_value(key, lineno, "unknown scheduler '" + val + "'");
      }
    } else if (key == "theory_cw") {
      cfg.fed.theory_cw = num();
    } else if (key == "theory_clambda") {
      cfg.fed.theory_clambda = num();
    } else if (key == "arch") {
      if (val == "linear") {
        cfg.fed.arch.kind = ArchKind::linear;
      } else if (val == "mlp") {
        cfg.fed.arch.kind = ArchKind::mlp;
      } else {
        bad_value(key, lineno, "unknown architecture '" + val + "'");
      }
    } else if (key == "hidden") {
      cfg.fed.arch.h = u64();
    } else if (key == "ce") {
      if (val == "sigmoid") {
        cfg.fed.ce = CeMode::sigmoid;
      } else if (val == "softmax") {
        cfg.fed.ce = CeMode::softmax;
      } else {
        bad_value(key, lineno, "unknown ce mode '" + val + "'");
      }
    } else if (key == "single_group_batch") {
      if (val == "lenient") {
        cfg.fed.group_policy = GroupPolicy::lenient;
      } else if (val == "strict") {
        cfg.fed.group_policy = GroupPolicy::strict;
      } else {
        bad_value(key, lineno, "expected 'lenient' or 'strict'");
      }
    } else if (key == "seed") {
      cfg.fed.seed = u64();
    } else if (key == "seeds") {
      cfg.seeds = parse_u64_list(key, lineno, val);
    } else if (key == "threads") {
      cfg.fed.threads = u64();
    } else if (key == "data_csv") {
      cfg.data_csv = val;
    } else if (key == "synth_n") {
      cfg.synth.n_samples = u64();
    } else if (key == "synth_d") {
      cfg.synth.d = u64();
    } else if (key == "synth_group_balance") {
      cfg.synth.group_balance = num();
    } else if (key == "synth_pos_rate_s0") {
      cfg.synth.pos_rate_s0 = num();
    } else if (key == "synth_pos_rate_s1") {
      cfg.synth.pos_rate_s1 = num();
    } else if (key == "synth_separation") {
      cfg.synth.separation = num();
    } else if (key == "synth_group_shift") {
      cfg.synth.group_shift = num();
    } else if (key == "synth_noise") {
      cfg.synth.noise = num();
    } else if (key == "alpha") {
      cfg.alpha = num();
    } else if (key == "eval_fraction") {
      cfg.eval_fraction = num();
    } else if (key == "output_dir") {
      cfg.output_dir = val;
    } else if (key == "rate_rounds") {
      cfg.rate.rounds = u64();
    } else if (key == "rate_reps") {
      cfg.rate.repetitions = u64();
    } else if (key == "rate_local_iters") {
      cfg.rate.local_iters = u64();
    } else if (key == "rate_sigma_w") {
      cfg.rate.sigma_w = num();
    } else if (key == "rate_sigma_lambda") {
      cfg.rate.sigma_lambda = num();
    } else if (key == "rate_w0") {
      cfg.rate.w0 = num();
    } else if (key == "rate_lambda0") {
      cfg.rate.lambda0 = num();
    } else if (key == "rate_clients") {
      cfg.rate.n_clients_override = u64();
    } else if (key == "rate_checkpoints") {
      const auto list = parse_u64_list(key, lineno, val);
      cfg.rate.checkpoints.assign(list.begin(), list.end());
    } else if (key == "rate_slope_min") {
      cfg.rate_slope_min = num();
    } else if (key == "rate_slope_max") {
      cfg.rate_slope_max = num();
    } else {
      fail("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }

  // Algorithm-specific Table-style defaults for anything left unset.
  auto unset = [&](const char* k) { return !seen.count(k); };
  switch (cfg.fed.algorithm) {
    case Algorithm::ffalm:
      break;  // struct defaults are the FFALM values
    case Algorithm::fpfl:
      if (unset("penalty_beta")) cfg.fed.penalty_beta = 5.0;
      if (unset("eta_lambda0")) cfg.fed.eta_lambda0 = 0.5;
      if (unset("dual_growth")) cfg.fed.dual_growth = 1.0;
      break;
    case Algorithm::fedavg:
    case Algorithm::fairfed:
      if (unset("penalty_beta")) cfg.fed.penalty_beta = 0.0;
      if (unset("eta_lambda0")) cfg.fed.eta_lambda0 = 0.0;
      if (unset("dual_growth")) cfg.fed.dual_growth = 1.0;
      break;
  }
  if (cfg.fed.arch.kind == ArchKind::mlp && cfg.fed.arch.h == 0) cfg.fed.arch.h = 16;

  if (!cfg.data_csv) cfg.fed.arch.d = cfg.synth.d;
  cfg.rate.seed = cfg.fed.seed;
  cfg.rate.theory_cw = cfg.fed.theory_cw;
  cfg.rate.theory_clambda = cfg.fed.theory_clambda;

  if (!(cfg.alpha > 0.0)) fail(origin + ": alpha must be > 0");
  if (!(cfg.eval_fraction > 0.0 && cfg.eval_fraction < 1.0))
    fail(origin + ": eval_fraction must lie in (0,1)");
  if (cfg.seeds.empty()) fail(origin + ": seed list must be non-empty");
  if (!(cfg.rate_slope_min < cfg.rate_slope_max))
    fail(origin + ": rate slope window is empty");
  if (cfg.data_csv) {
    std::ifstream probe(*cfg.data_csv);
    if (!probe.good()) fail(origin + ": data_csv path '" + *cfg.data_csv +
                            "' is not readable");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) fail("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string config_key_help() {
  return
      "algorithm            fedavg | ffalm | fpfl | fairfed\n"
      "n_clients            number of federated clients\n"
      "local_iters          local SGD steps per round (E)\n"
      "rounds               communication rounds (T)\n"
      "batch_size           local batch size\n"
      "eta_w0               initial primal learning rate\n"
      "lr_decay_step        rounds between primal LR decays\n"
      "lr_decay_factor      multiplicative primal LR decay\n"
      "eta_lambda0          initial dual learning rate (>= 0)\n"
      "dual_growth          per-round dual LR growth factor b (>= 1)\n"
      "penalty_beta         quadratic penalty coefficient\n"
      "clip_norm            gradient clipping threshold\n"
      "fairfed_beta         FairFed reweighting strength\n"
      "scheduler            empirical | theory\n"
      "theory_cw            theory mode: eta_w = theory_cw / t\n"
      "theory_clambda       theory mode: eta_lambda = theory_clambda / t^(2/3)\n"
      "arch                 linear | mlp\n"
      "hidden               mlp hidden width\n"
      "ce                   sigmoid | softmax cross-entropy\n"
      "single_group_batch   lenient | strict\n"
      "seed                 master seed for train/partition/rate-check\n"
      "seeds                comma list of seeds for compare\n"
      "threads              parallel client workers\n"
      "data_csv             dataset CSV path (omit to synthesize)\n"
      "synth_n synth_d      synthetic sample count / feature dim\n"
      "synth_group_balance  P(S=1)\n"
      "synth_pos_rate_s0    P(Y=1 | S=0)\n"
      "synth_pos_rate_s1    P(Y=1 | S=1)\n"
      "synth_separation     class-mean separation (axis 0)\n"
      "synth_group_shift    group-mean shift (axis 1)\n"
      "synth_noise          feature noise scale\n"
      "alpha                Dirichlet concentration for the partition\n"
      "eval_fraction        held-out fraction carved before partitioning\n"
      "output_dir           artifact directory\n"
      "rate_rounds / rate_reps / rate_local_iters\n"
      "rate_sigma_w / rate_sigma_lambda   gradient noise scales\n"
      "rate_w0 / rate_lambda0             testbed initial point\n"
      "rate_clients         testbed client count\n"
      "rate_checkpoints     comma list of checkpoint rounds\n"
      "rate_slope_min / rate_slope_max    pass window for the fitted slope\n";
}

}  // namespace ffalm
