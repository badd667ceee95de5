#include "ffalm/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ffalm/error.hpp"
#include "ffalm/kernels.hpp"
#include "ffalm/rng.hpp"

namespace ffalm {

namespace {

double softplus(double t) {
  // max(t,0) + log1p(exp(-|t|)), stable for large |t|
  return (t > 0.0 ? t : 0.0) + std::log1p(std::exp(-std::abs(t)));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

struct LinearView {
  const double* w0;
  double b0;
  const double* w1;
  double b1;
  explicit LinearView(const ModelParams& m)
      : w0(m.w.data()),
        b0(m.w[m.arch.d]),
        w1(m.w.data() + m.arch.d + 1),
        b1(m.w[2 * m.arch.d + 1]) {}
};

struct MlpView {
  const double* W1;  // h x d
  const double* b1;  // h
  const double* W2;  // 2 x h
  const double* b2;  // 2
  explicit MlpView(const ModelParams& m) {
    const std::size_t d = m.arch.d, h = m.arch.h;
    W1 = m.w.data();
    b1 = W1 + h * d;
    W2 = b1 + h;
    b2 = W2 + 2 * h;
  }
};

thread_local std::vector<double> tl_hidden;

// Hidden activations for the mlp; returns a thread-local buffer.
const double* mlp_hidden(const ModelParams& m, const double* x) {
  const MlpView v(m);
  const std::size_t d = m.arch.d, h = m.arch.h;
  tl_hidden.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    tl_hidden[j] = std::tanh(kern::dot(v.W1 + j * d, x, d) + v.b1[j]);
  }
  return tl_hidden.data();
}

// dCE/dlogits for one sample.
std::array<double, 2> logit_grad(const std::array<double, 2>& q, std::uint8_t y,
                                 CeMode ce) {
  std::array<double, 2> g{0.0, 0.0};
  if (ce == CeMode::sigmoid) {
    g[y] = sigmoid(q[y]) - 1.0;
  } else {
    // softmax over the two logits
    const double p1 = sigmoid(q[1] - q[0]);
    g[0] = (1.0 - p1) - (y == 0 ? 1.0 : 0.0);
    g[1] = p1 - (y == 1 ? 1.0 : 0.0);
  }
  return g;
}

// Adds the gradient of this sample's CE into acc.
void accumulate_sample_grad(const ModelParams& m, const double* x,
                            std::uint8_t y, CeMode ce, double* acc) {
  const std::size_t d = m.arch.d;
  if (m.arch.kind == ArchKind::linear) {
    const auto q = predict_logits(m, x);
    const auto g = logit_grad(q, y, ce);
    for (int c = 0; c < 2; ++c) {
      if (g[c] == 0.0) continue;
      double* row = acc + static_cast<std::size_t>(c) * (d + 1);
      kern::axpy(g[c], x, row, d);
      row[d] += g[c];
    }
    return;
  }
  const std::size_t h = m.arch.h;
  const MlpView v(m);
  const double* z = mlp_hidden(m, x);
  std::array<double, 2> q{kern::dot(v.W2, z, h) + v.b2[0],
                          kern::dot(v.W2 + h, z, h) + v.b2[1]};
  const auto g = logit_grad(q, y, ce);

  double* accW1 = acc;
  double* accb1 = acc + h * d;
  double* accW2 = accb1 + h;
  double* accb2 = accW2 + 2 * h;
  for (int c = 0; c < 2; ++c) {
    if (g[c] == 0.0) continue;
    kern::axpy(g[c], z, accW2 + static_cast<std::size_t>(c) * h, h);
    accb2[c] += g[c];
  }
  for (std::size_t j = 0; j < h; ++j) {
    const double dz = g[0] * v.W2[j] + g[1] * v.W2[h + j];
    if (dz == 0.0) continue;
    const double da = dz * (1.0 - z[j] * z[j]);
    kern::axpy(da, x, accW1 + j * d, d);
    accb1[j] += da;
  }
}

void check_dataset_dim(const ModelParams& m, const LabeledDataset& ds) {
  if (ds.d != m.arch.d)
    fail("dimension mismatch: model expects d=" + std::to_string(m.arch.d) +
         ", dataset has d=" + std::to_string(ds.d));
}

}  // namespace

ModelParams init_model(const Arch& arch, std::uint64_t master_seed) {
  if (arch.d == 0) fail("architecture needs d >= 1");
  if (arch.kind == ArchKind::mlp && arch.h == 0) fail("mlp needs hidden width >= 1");
  ModelParams m;
  m.arch = arch;
  m.w.assign(arch.dim(), 0.0);
  if (arch.kind == ArchKind::mlp) {
    auto rng = substream(master_seed, {rng_tag::kModelInit});
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(arch.d));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(arch.h));
    std::uniform_real_distribution<double> u1(-bound1, bound1);
    std::uniform_real_distribution<double> u2(-bound2, bound2);
    const std::size_t layer1 = arch.h * (arch.d + 1);
    for (std::size_t i = 0; i < layer1; ++i) m.w[i] = u1(rng);
    for (std::size_t i = layer1; i < m.w.size(); ++i) m.w[i] = u2(rng);
  }
  return m;
}

std::array<double, 2> predict_logits(const ModelParams& m, const double* x) {
  if (m.arch.kind == ArchKind::linear) {
    const LinearView v(m);
    const std::size_t d = m.arch.d;
    return {kern::dot(v.w0, x, d) + v.b0, kern::dot(v.w1, x, d) + v.b1};
  }
  const MlpView v(m);
  const std::size_t h = m.arch.h;
  const double* z = mlp_hidden(m, x);
  return {kern::dot(v.W2, z, h) + v.b2[0], kern::dot(v.W2 + h, z, h) + v.b2[1]};
}

std::uint8_t predict_label(const ModelParams& m, const double* x) {
  const auto q = predict_logits(m, x);
  return q[1] > q[0] ? 1 : 0;
}

double sample_ce(const ModelParams& m, const double* x, std::uint8_t y, CeMode ce) {
  const auto q = predict_logits(m, x);
  if (ce == CeMode::sigmoid) return softplus(-q[y]);
  return softplus(q[1 - y] - q[y]);
}

double task_loss(const ModelParams& m, const LabeledDataset& ds,
                 std::span<const std::uint32_t> batch, CeMode ce) {
  if (batch.empty()) fail("task_loss over an empty batch");
  check_dataset_dim(m, ds);
  // running mean: exact when all per-sample losses coincide
  double mean = 0.0;
  double k = 0.0;
  for (std::uint32_t i : batch) {
    k += 1.0;
    mean += (sample_ce(m, ds.row(i), ds.labels[i], ce) - mean) / k;
  }
  return mean;
}

GradVector grad_task(const ModelParams& m, const LabeledDataset& ds,
                     std::span<const std::uint32_t> batch, CeMode ce) {
  if (batch.empty()) fail("gradient over an empty batch");
  check_dataset_dim(m, ds);
  GradVector acc(m.w.size(), 0.0);
  for (std::uint32_t i : batch) {
    accumulate_sample_grad(m, ds.row(i), ds.labels[i], ce, acc.data());
  }
  kern::scal(1.0 / static_cast<double>(batch.size()), acc.data(), acc.size());
  return acc;
}

GradVector grad_augmented(const ModelParams& m, double lambda, double beta,
                          const LabeledDataset& ds,
                          std::span<const std::uint32_t> batch, CeMode ce,
                          GroupPolicy policy, std::size_t* single_group_count) {
  if (batch.empty()) fail("gradient over an empty batch");
  check_dataset_dim(m, ds);

  std::size_t n0 = 0, n1 = 0;
  for (std::uint32_t i : batch) (ds.sensitive[i] == 0 ? n0 : n1)++;
  if (n0 == 0 || n1 == 0) {
    if (policy == GroupPolicy::strict)
      fail(std::string("single-group batch: sensitive group ") +
           (n0 == 0 ? "0" : "1") + " absent");
    if (single_group_count) ++*single_group_count;
    return grad_task(m, ds, batch, ce);
  }
  if (lambda == 0.0 && beta == 0.0) return grad_task(m, ds, batch, ce);

  const std::size_t D = m.w.size();
  GradVector acc_task(D, 0.0), acc0(D, 0.0), acc1(D, 0.0);
  double mu0 = 0.0, mu1 = 0.0, k0 = 0.0, k1 = 0.0;
  for (std::uint32_t i : batch) {
    const double* x = ds.row(i);
    accumulate_sample_grad(m, x, ds.labels[i], ce, acc_task.data());
    const double lce = sample_ce(m, x, ds.labels[i], ce);
    if (ds.sensitive[i] == 0) {
      accumulate_sample_grad(m, x, ds.labels[i], ce, acc0.data());
      k0 += 1.0;
      mu0 += (lce - mu0) / k0;
    } else {
      accumulate_sample_grad(m, x, ds.labels[i], ce, acc1.data());
      k1 += 1.0;
      mu1 += (lce - mu1) / k1;
    }
  }
  kern::scal(1.0 / static_cast<double>(batch.size()), acc_task.data(), D);
  const double delta = mu0 - mu1;
  const double coef = lambda + beta * delta;
  if (coef != 0.0) {
    kern::scal(1.0 / static_cast<double>(n0), acc0.data(), D);
    kern::scal(1.0 / static_cast<double>(n1), acc1.data(), D);
    kern::axpy(coef, acc0.data(), acc_task.data(), D);
    kern::axpy(-coef, acc1.data(), acc_task.data(), D);
  }
  return acc_task;
}

GradVector grad_hinge_penalty(const ModelParams& m,
                              const std::array<double, 2>& lambdas, double beta,
                              const LabeledDataset& ds,
                              std::span<const std::uint32_t> batch, CeMode ce) {
  if (batch.empty()) fail("gradient over an empty batch");
  check_dataset_dim(m, ds);

  const std::size_t D = m.w.size();
  GradVector acc_task(D, 0.0);
  std::array<GradVector, 2> acc_g{GradVector(D, 0.0), GradVector(D, 0.0)};
  std::array<double, 2> mu{0.0, 0.0}, cnt{0.0, 0.0};
  double loss = 0.0, k = 0.0;
  for (std::uint32_t i : batch) {
    const double* x = ds.row(i);
    accumulate_sample_grad(m, x, ds.labels[i], ce, acc_task.data());
    const double lce = sample_ce(m, x, ds.labels[i], ce);
    k += 1.0;
    loss += (lce - loss) / k;
    const int g = ds.sensitive[i];
    accumulate_sample_grad(m, x, ds.labels[i], ce, acc_g[g].data());
    cnt[g] += 1.0;
    mu[g] += (lce - mu[g]) / cnt[g];
  }
  kern::scal(1.0 / static_cast<double>(batch.size()), acc_task.data(), D);
  GradVector out = acc_task;
  for (int g = 0; g < 2; ++g) {
    if (cnt[g] == 0.0) continue;
    const double delta = loss - mu[g];
    if (delta <= 0.0) continue;  // inactive hinge, subgradient 0
    const double coef = lambdas[g] + beta * delta;
    if (coef == 0.0) continue;
    kern::scal(1.0 / cnt[g], acc_g[g].data(), D);
    kern::axpy(coef, acc_task.data(), out.data(), D);
    kern::axpy(-coef, acc_g[g].data(), out.data(), D);
  }
  return out;
}

GradVector clip_gradient(GradVector g, double max_norm) {
  if (!(max_norm > 0.0)) fail("clip max_norm must be > 0");
  const double max_sq = max_norm * max_norm;
  const double norm_sq = kern::l2sq(g.data(), g.size());
  if (norm_sq <= max_sq) return g;
  double s = max_norm / std::sqrt(norm_sq);
  GradVector out(g.size());
  // Nudge the scale down until the clipped norm is truly <= max_norm,
  // which makes a second clip a bitwise no-op.
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * s;
    if (kern::l2sq(out.data(), out.size()) <= max_sq) return out;
    s = std::nextafter(s, 0.0);
  }
  fail("gradient clipping failed to converge");
}

ModelParams sgd_step(const ModelParams& m, const GradVector& g, double lr) {
  if (!(lr > 0.0)) fail("learning rate must be > 0");
  if (g.size() != m.w.size())
    fail("dimension mismatch: gradient size " + std::to_string(g.size()) +
         " vs parameter size " + std::to_string(m.w.size()));
  ModelParams out = m;
  kern::axpy(-lr, g.data(), out.w.data(), out.w.size());
  return out;
}

std::string arch_to_string(const Arch& a) {
  std::ostringstream os;
  if (a.kind == ArchKind::linear) {
    os << "linear " << a.d;
  } else {
    os << "mlp " << a.d << " " << a.h;
  }
  return os.str();
}

Arch arch_from_string(const std::string& s) {
  std::istringstream is(s);
  std::string kind;
  is >> kind;
  Arch a;
  if (kind == "linear") {
    a.kind = ArchKind::linear;
    if (!(is >> a.d) || a.d == 0) fail("bad architecture descriptor: " + s);
  } else if (kind == "mlp") {
    a.kind = ArchKind::mlp;
    if (!(is >> a.d >> a.h) || a.d == 0 || a.h == 0)
      fail("bad architecture descriptor: " + s);
  } else {
    fail("unknown architecture '" + kind + "'");
  }
  return a;
}

}  // namespace ffalm
