#include "fcl/synthgen.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace fcl::synth {
namespace {

using EMatrix = Eigen::MatrixXd;

EMatrix to_eigen(const Matrix& m) {
  EMatrix e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  }
  return e;
}

Matrix from_eigen(const EMatrix& e) {
  Matrix m(e.rows(), e.cols());
  for (Eigen::Index r = 0; r < e.rows(); ++r) {
    for (Eigen::Index c = 0; c < e.cols(); ++c) m(r, c) = e(r, c);
  }
  return m;
}

std::size_t floor_count(double r, std::size_t d) {
  // Guard against 0.5 * 50 landing at 24.999999.
  return static_cast<std::size_t>(std::floor(r * static_cast<double>(d) + 1e-9));
}

// x rows = [w_unique ∥ ws ∥ noise] · Tᵀ
Matrix apply_transform(const Matrix& t, const Matrix& w_unique, const Matrix& ws,
                       const Matrix& noise) {
  const Matrix* parts[] = {&w_unique, &ws, &noise};
  return matmul_nt(hconcat(parts), t);
}

}  // namespace

void SynthConfig::validate() const {
  if (d_latent == 0) throw ConfigError("SynthConfig: d_latent must be positive");
  if (r_shared < 0.0 || r_unique1 < 0.0 || r_unique2 < 0.0) {
    throw ConfigError("SynthConfig: ratios must be nonnegative");
  }
  if (std::abs(r_shared + r_unique1 + r_unique2 - 1.0) > 1e-9) {
    throw ConfigError("SynthConfig: ratios must sum to 1");
  }
  if (out_dim < input_dim()) {
    throw ConfigError("SynthConfig: out_dim " + std::to_string(out_dim) +
                      " < 2*d_latent + d_noise = " + std::to_string(input_dim()));
  }
  if (label_noise_std < 0.0) throw ConfigError("SynthConfig: label_noise_std must be >= 0");
  if (shared_selected() + unique1_selected() + unique2_selected() == 0) {
    throw ConfigError("SynthConfig: label rule selects no coordinates");
  }
}

std::size_t SynthConfig::shared_selected() const noexcept { return floor_count(r_shared, d_latent); }
std::size_t SynthConfig::unique1_selected() const noexcept { return floor_count(r_unique1, d_latent); }
std::size_t SynthConfig::unique2_selected() const noexcept { return floor_count(r_unique2, d_latent); }

SynthConfig SynthConfig::with_unique_ratio(double ratio) const {
  if (ratio < 0.0 || ratio > 1.0) throw ConfigError("unique ratio must be in [0, 1]");
  SynthConfig c = *this;
  c.r_unique1 = ratio / 2.0;
  c.r_unique2 = ratio / 2.0;
  c.r_shared = 1.0 - ratio;
  return c;
}

std::size_t numerical_rank(const Matrix& m) {
  Eigen::ColPivHouseholderQR<EMatrix> qr(to_eigen(m));
  return static_cast<std::size_t>(qr.rank());
}

Transforms make_transforms(const SynthConfig& config) {
  config.validate();
  const std::size_t in = config.input_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  Rng root(config.transform_seed);
  Transforms t;
  auto draw = [&](std::string_view name) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng = root.split(name).split(attempt);
      Matrix m = rng.normal_matrix(config.out_dim, in, scale);
      if (numerical_rank(m) == in) return m;
      if (attempt > 16) throw NumericError("make_transforms: could not draw a full-rank map");
    }
  };
  t.t1 = draw("t1");
  t.t2 = draw("t2");
  Rng label_rng = root.split("label");
  const std::size_t k =
      config.shared_selected() + config.unique1_selected() + config.unique2_selected();
  t.label_projection.resize(k);
  double norm = 0.0;
  for (double& a : t.label_projection) {
    a = label_rng.normal();
    norm += a * a;
  }
  norm = std::sqrt(norm);
  for (double& a : t.label_projection) a /= norm;
  return t;
}

double label_logit(const SynthConfig& config, const Transforms& transforms,
                   std::span<const double> ws, std::span<const double> w1,
                   std::span<const double> w2) {
  const std::size_t ks = config.shared_selected();
  const std::size_t k1 = config.unique1_selected();
  const std::size_t k2 = config.unique2_selected();
  const auto& a = transforms.label_projection;
  double u = 0.0;
  std::size_t idx = 0;
  for (std::size_t c = 0; c < ks; ++c) u += a[idx++] * ws[c];
  for (std::size_t c = 0; c < k1; ++c) u += a[idx++] * w1[c];
  for (std::size_t c = 0; c < k2; ++c) u += a[idx++] * w2[c];
  return u;
}

SynthBatch sample_batch(const SynthConfig& config, const Transforms& transforms, std::size_t n,
                        Rng& rng) {
  SynthBatch b;
  b.w1 = rng.normal_matrix(n, config.d_latent);
  b.w2 = rng.normal_matrix(n, config.d_latent);
  b.ws = rng.normal_matrix(n, config.d_latent);
  b.noise1 = rng.normal_matrix(n, config.d_noise);
  b.noise2 = rng.normal_matrix(n, config.d_noise);
  b.x1 = apply_transform(transforms.t1, b.w1, b.ws, b.noise1);
  b.x2 = apply_transform(transforms.t2, b.w2, b.ws, b.noise2);
  b.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = label_logit(config, transforms, b.ws.row(i), b.w1.row(i), b.w2.row(i));
    const double eps = config.label_noise_std * rng.normal();
    b.y[i] = std::tanh(u) + eps > 0.0 ? 1 : 0;
  }
  return b;
}

SynthSource::SynthSource(SynthConfig config)
    : config_(std::move(config)), transforms_(make_transforms(config_)) {}

SynthBatch SynthSource::sample(std::size_t n, Rng& rng) const {
  return sample_batch(config_, transforms_, n, rng);
}

AugmentedView augment(const SynthConfig& config, const Transforms& transforms,
                      const SynthBatch& batch, Modality modality, AugMode mode, Rng& rng) {
  const bool first = modality == Modality::first;
  const Matrix& w_unique = first ? batch.w1 : batch.w2;
  const Matrix& noise = first ? batch.noise1 : batch.noise2;
  const std::size_t n = batch.size();
  if (w_unique.rows() != n || batch.ws.rows() != n || noise.rows() != n) {
    throw UsageError("augment: batch does not carry latents and noise");
  }
  AugmentedView view;
  view.ws = batch.ws;
  view.noise = rng.normal_matrix(n, config.d_noise);
  view.w_unique = w_unique;
  if (mode == AugMode::unique) {
    const std::size_t keep = first ? config.unique1_selected() : config.unique2_selected();
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = keep; c < config.d_latent; ++c) view.w_unique(r, c) = rng.normal();
    }
  }
  view.x = apply_transform(first ? transforms.t1 : transforms.t2, view.w_unique, view.ws,
                           view.noise);
  return view;
}

Matrix latent_recovery(const Transforms& transforms, Modality modality, const Matrix& x) {
  const EMatrix t = to_eigen(modality == Modality::first ? transforms.t1 : transforms.t2);
  if (x.cols() != static_cast<std::size_t>(t.rows())) throw ShapeError("latent_recovery: width");
  // Solve T·v = xᵀ column-wise in the least-squares sense.
  const EMatrix v = t.colPivHouseholderQr().solve(to_eigen(x).transpose());
  return from_eigen(v.transpose());
}

void write_batch_csv(std::ostream& os, const SynthBatch& batch) {
  auto header = [&](const char* prefix, std::size_t n) {
    for (std::size_t c = 0; c < n; ++c) os << prefix << c << ',';
  };
  header("x1_", batch.x1.cols());
  header("x2_", batch.x2.cols());
  os << "y";
  for (const auto& [prefix, m] : {std::pair{"w1_", &batch.w1}, std::pair{"w2_", &batch.w2},
                                  std::pair{"ws_", &batch.ws}}) {
    for (std::size_t c = 0; c < m->cols(); ++c) os << ',' << prefix << c;
  }
  os << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    os << buf;
  };
  for (std::size_t r = 0; r < batch.size(); ++r) {
    for (double v : batch.x1.row(r)) { put(v); os << ','; }
    for (double v : batch.x2.row(r)) { put(v); os << ','; }
    os << batch.y[r];
    for (const Matrix* m : {&batch.w1, &batch.w2, &batch.ws}) {
      for (double v : m->row(r)) { os << ','; put(v); }
    }
    os << '\n';
  }
}

void GaussianPairConfig::validate() const {
  if (dim == 0) throw ConfigError("GaussianPairConfig: dim must be positive");
  if (!(std::abs(rho) < 1.0)) throw ConfigError("GaussianPairConfig: |rho| must be < 1");
}

std::pair<Matrix, Matrix> sample_gaussian_pair(const GaussianPairConfig& config, std::size_t n,
                                               Rng& rng) {
  config.validate();
  Matrix x = rng.normal_matrix(n, config.dim);
  Matrix y(n, config.dim);
  const double s = std::sqrt(1.0 - config.rho * config.rho);
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = config.rho * x.data()[i] + s * rng.normal();
  return {std::move(x), std::move(y)};
}

double true_mi(const GaussianPairConfig& config) {
  config.validate();
  return -0.5 * static_cast<double>(config.dim) * std::log1p(-config.rho * config.rho);
}

double rho_for_mi(std::size_t dim, double target_mi) {
  if (!(target_mi > 0.0)) throw ConfigError("rho_for_mi: target MI must be positive");
  if (dim == 0) throw ConfigError("rho_for_mi: dim must be positive");
  return std::sqrt(-std::expm1(-2.0 * target_mi / static_cast<double>(dim)));
}

namespace {

struct CmiMaps {
  EMatrix a;  // dx × dz
  EMatrix b;  // dx × dz
};

CmiMaps cmi_maps(const CmiTripleConfig& config) {
  Rng root(config.matrix_seed);
  Rng ra = root.split("A");
  Rng rb = root.split("B");
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.dz));
  return {to_eigen(ra.normal_matrix(config.dx, config.dz, scale)),
          to_eigen(rb.normal_matrix(config.dx, config.dz, scale))};
}

}  // namespace

void CmiTripleConfig::validate() const {
  if (dz == 0 || dx == 0) throw ConfigError("CmiTripleConfig: dz and dx must be >= 1");
  if (!(noise1_std > 0.0) || !(noise2_std > 0.0)) {
    throw ConfigError("CmiTripleConfig: noise scales must be positive");
  }
  if (group_size == 0) throw ConfigError("CmiTripleConfig: group_size must be >= 1");
}

CmiTriple sample_cmi_triple(const CmiTripleConfig& config, std::size_t n, Rng& rng) {
  config.validate();
  const CmiMaps maps = cmi_maps(config);
  CmiTriple t;
  t.z = Matrix(n, config.dz);
  t.x1 = Matrix(n, config.dx);
  t.x2 = Matrix(n, config.dx);
  t.group.resize(n);
  Eigen::VectorXd z(config.dz);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % config.group_size == 0) {
      for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
    }
    t.group[i] = static_cast<int>(i / config.group_size);
    Eigen::VectorXd x1 = maps.a * z;
    for (Eigen::Index k = 0; k < x1.size(); ++k) x1(k) += config.noise1_std * rng.normal();
    Eigen::VectorXd x2 = maps.b * z + config.coupling * x1;
    for (Eigen::Index k = 0; k < x2.size(); ++k) x2(k) += config.noise2_std * rng.normal();
    for (std::size_t k = 0; k < config.dz; ++k) t.z(i, k) = z(static_cast<Eigen::Index>(k));
    for (std::size_t k = 0; k < config.dx; ++k) {
      t.x1(i, k) = x1(static_cast<Eigen::Index>(k));
      t.x2(i, k) = x2(static_cast<Eigen::Index>(k));
    }
  }
  return t;
}

double true_cmi(const CmiTripleConfig& config) {
  config.validate();
  const CmiMaps maps = cmi_maps(config);
  const auto dx = static_cast<Eigen::Index>(config.dx);
  const auto dz = static_cast<Eigen::Index>(config.dz);
  const EMatrix c = config.coupling * EMatrix::Identity(dx, dx);
  // Each variable as a linear map of the independent sources [z, n1, n2].
  const Eigen::Index src = dz + 2 * dx;
  EMatrix l1 = EMatrix::Zero(dx, src);
  l1.leftCols(dz) = maps.a;
  l1.middleCols(dz, dx) = config.noise1_std * EMatrix::Identity(dx, dx);
  EMatrix l2 = c * l1;
  l2.leftCols(dz) += maps.b;
  l2.rightCols(dx) = config.noise2_std * EMatrix::Identity(dx, dx);
  EMatrix lz = EMatrix::Zero(dz, src);
  lz.leftCols(dz) = EMatrix::Identity(dz, dz);

  EMatrix l(2 * dx + dz, src);
  l << l1, l2, lz;
  const EMatrix sigma = l * l.transpose();
  const Eigen::Index m = 2 * dx;
  const EMatrix s_xx = sigma.topLeftCorner(m, m);
  const EMatrix s_xz = sigma.topRightCorner(m, dz);
  const EMatrix s_zz = sigma.bottomRightCorner(dz, dz);
  const EMatrix cond = s_xx - s_xz * s_zz.llt().solve(s_xz.transpose());

  auto logdet = [](const EMatrix& s) {
    Eigen::LLT<EMatrix> llt(s);
    if (llt.info() != Eigen::Success) {
      throw NumericError("true_cmi: conditional covariance is singular");
    }
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  };
  return 0.5 * (logdet(cond.topLeftCorner(dx, dx)) + logdet(cond.bottomRightCorner(dx, dx)) -
                logdet(cond));
}

}  // namespace fcl::synth
