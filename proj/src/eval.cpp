#include "fcl/eval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcl/estimators.hpp"
#include "fcl/exactinfo.hpp"

namespace fcl::eval {
namespace {

using EMatrix = Eigen::MatrixXd;

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> view(
    const Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> inv_std;

  explicit Standardizer(const Matrix& train) : mean(train.cols(), 0.0), inv_std(train.cols(), 1.0) {
    const double n = static_cast<double>(train.rows());
    for (std::size_t r = 0; r < train.rows(); ++r) {
      for (std::size_t c = 0; c < train.cols(); ++c) mean[c] += train(r, c) / n;
    }
    std::vector<double> var(train.cols(), 0.0);
    for (std::size_t r = 0; r < train.rows(); ++r) {
      for (std::size_t c = 0; c < train.cols(); ++c) {
        const double d = train(r, c) - mean[c];
        var[c] += d * d / n;
      }
    }
    // Constant columns stay centered at 0 instead of blowing up.
    for (std::size_t c = 0; c < train.cols(); ++c) inv_std[c] = var[c] > 1e-12 ? 1.0 / std::sqrt(var[c]) : 0.0;
  }

  [[nodiscard]] Matrix apply(const Matrix& m) const {
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = (m(r, c) - mean[c]) * inv_std[c];
    }
    return out;
  }
};

void check_binary(std::span<const int> y, const char* what) {
  for (int v : y) {
    if (v != 0 && v != 1) throw UsageError(std::string("linear_probe: ") + what + " labels must be 0/1");
  }
}

double accuracy(const std::vector<double>& w, double b, const Matrix& z, std::span<const int> y) {
  std::size_t hit = 0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    double s = b;
    for (std::size_t c = 0; c < z.cols(); ++c) s += w[c] * z(r, c);
    hit += (s > 0.0) == (y[r] == 1);
  }
  return z.rows() == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(z.rows());
}

EMatrix covariance(const EMatrix& x) {
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const EMatrix c = x.rowwise() - mu;
  EMatrix cov = (c.transpose() * c) / static_cast<double>(x.rows());
  cov.diagonal().array() += kMiProbeRidge;
  return cov;
}

double log_det(const EMatrix& s) {
  Eigen::LLT<EMatrix> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericError("gaussian_mi_probe: covariance not positive definite after ridge");
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  return idx;
}

}  // namespace

ProbeResult linear_probe(const Matrix& z_train, std::span<const int> y_train, const Matrix& z_test,
                         std::span<const int> y_test, const ProbeConfig& config, std::string name) {
  if (z_train.rows() != y_train.size() || z_test.rows() != y_test.size()) {
    throw ShapeError("linear_probe: rows and labels disagree");
  }
  if (z_train.cols() != z_test.cols()) throw ShapeError("linear_probe: train/test widths differ");
  check_binary(y_train, "train");
  check_binary(y_test, "test");
  const auto positives = std::count(y_train.begin(), y_train.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y_train.size())) {
    throw UsageError("linear_probe: train split has a single class");
  }

  Matrix xtr = z_train;
  Matrix xte = z_test;
  if (config.standardize) {
    const Standardizer s(z_train);
    xtr = s.apply(z_train);
    xte = s.apply(z_test);
  }
  const std::size_t n = xtr.rows();
  const std::size_t d = xtr.cols();
  // Parameters as a 1×(d+1) net-free vector; Adam by hand on this tiny problem.
  std::vector<double> w(d, 0.0), mw(d, 0.0), vw(d, 0.0), g(d);
  double b = 0.0, mb = 0.0, vb = 0.0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::vector<double> logits(n);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    logits.assign(n, b);
    for (std::size_t r = 0; r < n; ++r) {
      const double* row = xtr.row(r).data();
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += w[c] * row[c];
      logits[r] += s;
    }
    std::fill(g.begin(), g.end(), 0.0);
    double gb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double p = 1.0 / (1.0 + std::exp(-logits[r]));
      const double diff = (p - y_train[r]) / static_cast<double>(n);
      gb += diff;
      const double* row = xtr.row(r).data();
      for (std::size_t c = 0; c < d; ++c) g[c] += diff * row[c];
    }
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(epoch));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(epoch));
    for (std::size_t c = 0; c < d; ++c) {
      mw[c] = b1 * mw[c] + (1 - b1) * g[c];
      vw[c] = b2 * vw[c] + (1 - b2) * g[c] * g[c];
      w[c] -= config.learning_rate * (mw[c] / c1) / (std::sqrt(vw[c] / c2) + eps);
    }
    mb = b1 * mb + (1 - b1) * gb;
    vb = b2 * vb + (1 - b2) * gb * gb;
    b -= config.learning_rate * (mb / c1) / (std::sqrt(vb / c2) + eps);
  }
  ProbeResult r;
  r.name = std::move(name);
  r.accuracy = accuracy(w, b, xte, y_test);
  r.train_accuracy = accuracy(w, b, xtr, y_train);
  r.n_train = n;
  r.n_test = xte.rows();
  r.seed = config.seed;
  return r;
}

double gaussian_mi_probe(const Matrix& z, const Matrix& w) {
  if (z.rows() != w.rows()) throw ShapeError("gaussian_mi_probe: row counts differ");
  if (z.rows() <= z.cols() + w.cols() + 2) {
    throw UsageError("gaussian_mi_probe: need n > dim(Z) + dim(W) + 2");
  }
  EMatrix joint(z.rows(), z.cols() + w.cols());
  joint.leftCols(static_cast<Eigen::Index>(z.cols())) = view(z);
  joint.rightCols(static_cast<Eigen::Index>(w.cols())) = view(w);
  const EMatrix cov = covariance(joint);
  const auto dz = static_cast<Eigen::Index>(z.cols());
  const auto dw = static_cast<Eigen::Index>(w.cols());
  const double mi = 0.5 * (log_det(cov.topLeftCorner(dz, dz)) + log_det(cov.bottomRightCorner(dw, dw)) -
                           log_det(cov));
  return std::max(mi, 0.0);
}

double MiProbeMatrix::at(std::string_view row, std::string_view col) const {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] != row) continue;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c] == col) return nats[r][c];
    }
  }
  throw UsageError("probe matrix has no cell (" + std::string(row) + ", " + std::string(col) + ")");
}

MiProbeMatrix probe_matrix(const obj::ModelState& model, const synth::SynthBatch& batch) {
  if (batch.w1.rows() != batch.size() || batch.ws.rows() != batch.size()) {
    throw UsageError("probe_matrix: batch carries no latents");
  }
  const obj::Representations reps = obj::assemble_representations(model, batch.x1, batch.x2);
  MiProbeMatrix m;
  m.cols = {"w1", "w2", "ws"};
  std::vector<std::pair<std::string, const Matrix*>> rows;
  if (reps.factorized) {
    rows = {{"Z_S1", &reps.zs1}, {"Z_S2", &reps.zs2}, {"Z_U1", &reps.zu1}, {"Z_U2", &reps.zu2}};
  } else {
    rows = {{"Z1", &reps.z1}, {"Z2", &reps.z2}};
  }
  const Matrix* latents[] = {&batch.w1, &batch.w2, &batch.ws};
  for (const auto& [name, z] : rows) {
    m.rows.push_back(name);
    std::vector<double> cells;
    for (const Matrix* w : latents) cells.push_back(gaussian_mi_probe(*z, *w));
    m.nats.push_back(std::move(cells));
  }
  return m;
}

ProbeResult probe_model(const obj::ModelState& model, const synth::SynthSource& source,
                        std::size_t n_train, std::size_t n_test, Rng& rng, const ProbeConfig& config) {
  Rng rtr = rng.split("probe_train");
  Rng rte = rng.split("probe_test");
  const synth::SynthBatch tr = source.sample(n_train, rtr);
  const synth::SynthBatch te = source.sample(n_test, rte);
  const Matrix ztr = obj::assemble_representations(model, tr.x1, tr.x2).full();
  const Matrix zte = obj::assemble_representations(model, te.x1, te.x2).full();
  return linear_probe(ztr, tr.y, zte, te.y, config, obj::variant_name(model.variant));
}

std::vector<ProbeResult> submodel_ablation(const obj::ModelState& model,
                                           const synth::SynthSource& source, std::size_t n_train,
                                           std::size_t n_test, Rng& rng, const ProbeConfig& config) {
  if (!obj::is_factorized(model.variant)) {
    throw UsageError("submodel_ablation: needs a factorized model");
  }
  Rng rtr = rng.split("probe_train");
  Rng rte = rng.split("probe_test");
  const synth::SynthBatch tr = source.sample(n_train, rtr);
  const synth::SynthBatch te = source.sample(n_test, rte);
  const obj::Representations a = obj::assemble_representations(model, tr.x1, tr.x2);
  const obj::Representations b = obj::assemble_representations(model, te.x1, te.x2);
  std::vector<ProbeResult> out;
  out.push_back(linear_probe(hconcat(a.zs1, a.zs2), tr.y, hconcat(b.zs1, b.zs2), te.y, config, "Z_S"));
  out.push_back(linear_probe(a.zu1, tr.y, b.zu1, te.y, config, "Z_U1"));
  out.push_back(linear_probe(a.zu2, tr.y, b.zu2, te.y, config, "Z_U2"));
  out.push_back(linear_probe(a.full(), tr.y, b.full(), te.y, config, "full"));
  return out;
}

double trained_infonce(const Matrix& a, const Matrix& b, bool b_is_label,
                       const CriticTrainConfig& config, Rng& rng) {
  if (a.rows() != b.rows()) throw ShapeError("trained_infonce: row counts differ");
  const std::size_t n = a.rows();
  const std::size_t half = n / 2;
  if (half < config.batch_size * 2) throw UsageError("trained_infonce: too few rows for the batch size");
  const std::vector<std::size_t> order = shuffled(n, rng);
  const std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
  const Matrix a_tr = gather_rows(a, train_idx);
  const Standardizer sa(a_tr);
  const Matrix a_train = sa.apply(a_tr);
  const Matrix a_test = sa.apply(gather_rows(a, test_idx));
  Matrix b_train = gather_rows(b, train_idx);
  Matrix b_test = gather_rows(b, test_idx);
  if (!b_is_label) {
    const Standardizer sb(b_train);
    b_train = sb.apply(b_train);
    b_test = sb.apply(b_test);
  }

  est::CriticSpec spec;
  spec.head1_dims = {a.cols(), config.hidden, 64};
  if (b_is_label) {
    spec.identity_dim2 = b.cols();
  } else {
    spec.head2_dims = {b.cols(), config.hidden, 64};
  }
  spec.critic_hidden = config.hidden;
  Rng init = rng.split("critic");
  est::CriticSet cs = est::make_critic_set(spec, init);
  AdamHyper hyper;
  hyper.learning_rate = config.learning_rate;
  std::vector<MlpNet*> nets = {&cs.critic, &cs.head1};
  if (!cs.head2.empty()) nets.push_back(&cs.head2);

  std::vector<std::size_t> pick(config.batch_size);
  for (std::size_t step = 0; step < config.steps; ++step) {
    for (auto& p : pick) p = rng.index(half);
    est::ScoreCache cache;
    const Matrix s = est::score_matrix(cs, gather_rows(a_train, pick), gather_rows(b_train, pick),
                                       nullptr, &cache);
    est::Estimate e = est::infonce_estimate(s);
    for (double& g : e.grad.values()) g = -g;
    (void)est::score_backward(cs, cache, e.grad);
    for (MlpNet* net : nets) adam_step(*net, hyper);
  }
  double total = 0.0;
  std::size_t batches = 0;
  const std::size_t available = test_idx.size() / config.batch_size;
  for (std::size_t k = 0; k < std::min(config.eval_batches, available); ++k) {
    std::vector<std::size_t> rows(config.batch_size);
    std::iota(rows.begin(), rows.end(), k * config.batch_size);
    total += est::infonce_estimate(
                 est::score_matrix(cs, gather_rows(a_test, rows), gather_rows(b_test, rows)))
                 .value;
    ++batches;
  }
  return total / static_cast<double>(batches);
}

InfoMinResult infomin_check(const obj::ModelState& model, const synth::SynthBatch& batch,
                            const CriticTrainConfig& config, Rng& rng) {
  const obj::Representations reps = obj::assemble_representations(model, batch.x1, batch.x2);
  const Matrix y = est::one_hot(batch.y, model.dims.num_classes);
  Rng r1 = rng.split("joint");
  Rng r2 = rng.split("x2_only");
  Rng r3 = rng.split("pairwise");
  InfoMinResult out;
  const double joint = trained_infonce(hconcat(reps.z1, reps.z2), y, true, config, r1);
  const double x2_only = trained_infonce(reps.z2, y, true, config, r2);
  out.conditional = joint - x2_only;
  out.pairwise = trained_infonce(batch.x1, batch.x2, false, config, r3);
  out.ratio = out.pairwise > 0.0 ? out.conditional / out.pairwise : 0.0;
  return out;
}

GapReport gap_report(double shared, double unique1, double unique2, double h_y) {
  GapReport g;
  g.uniqueness_gap = unique1 + unique2;
  g.bound_total = exactinfo::bayes_error_bound(shared + unique1 + unique2, h_y);
  g.bound_shared = exactinfo::bayes_error_bound(shared, h_y);
  return g;
}

}  // namespace fcl::eval
