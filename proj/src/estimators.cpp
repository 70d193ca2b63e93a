#include "fcl/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fcl/kernels.hpp"

namespace fcl::est {
namespace {

double clamp_score(double s) { return std::clamp(s, -kScoreClamp, kScoreClamp); }

void check_square(const Matrix& s, const Mask* mask) {
  if (s.rows() != s.cols()) throw ShapeError("score matrix must be square, got " + shape_str(s));
  if (s.rows() < 2) throw UsageError("score matrix needs n >= 2 (no negatives otherwise)");
  if (mask != nullptr && mask->size() != s.rows()) {
    throw ShapeError("admissibility mask size " + std::to_string(mask->size()) + " vs n = " +
                     std::to_string(s.rows()));
  }
}

bool admissible(const Mask* mask, std::size_t i, std::size_t j) {
  return i == j || mask == nullptr || (*mask)(i, j);
}

void zero_clamped(const Matrix& scores, Matrix& grad) {
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (std::abs(scores.data()[k]) > kScoreClamp) grad.data()[k] = 0.0;
  }
}

Matrix head_output(const MlpNet& head, const Matrix& z, Activations* acts) {
  if (head.empty()) return z;
  *acts = head.forward(z);
  return acts->output();
}

}  // namespace

const char* cond_kind_name(CondKind kind) noexcept {
  switch (kind) {
    case CondKind::none: return "none";
    case CondKind::label: return "label";
    case CondKind::augmented_pair: return "augmented_pair";
  }
  return "unknown";
}

Mask Mask::same_group(std::span<const int> group) {
  Mask m(group.size(), false);
  for (std::size_t i = 0; i < group.size(); ++i) {
    for (std::size_t j = 0; j < group.size(); ++j) m.set(i, j, group[i] == group[j]);
  }
  return m;
}

Mask Mask::transposed() const {
  Mask t(n_, false);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) t.set(j, i, (*this)(i, j));
  }
  return t;
}

std::optional<Mask> Conditioning::mask() const {
  if (groups.empty()) return std::nullopt;
  return Mask::same_group(groups);
}

Matrix one_hot(std::span<const int> labels, std::size_t num_classes) {
  Matrix m(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw UsageError("one_hot: label " + std::to_string(labels[i]) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    }
    m(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return m;
}

Conditioning conditional_pack(CondKind kind, std::span<const int> labels, std::size_t num_classes,
                              const Matrix* aug_left, const Matrix* aug_right) {
  Conditioning c;
  switch (kind) {
    case CondKind::none:
      break;
    case CondKind::label:
      if (labels.empty()) throw UsageError("conditional_pack: label conditioning without labels");
      c.left = one_hot(labels, num_classes);
      c.right = c.left;
      c.groups.assign(labels.begin(), labels.end());
      break;
    case CondKind::augmented_pair:
      if (aug_left == nullptr || aug_right == nullptr || aug_left->empty() || aug_right->empty()) {
        throw UsageError("conditional_pack: augmented_pair conditioning without augmented views");
      }
      if (aug_left->rows() != aug_right->rows()) {
        throw ShapeError("conditional_pack: augmented views disagree on row count");
      }
      c.left = *aug_left;
      c.right = *aug_right;
      break;
  }
  return c;
}

std::size_t CriticSet::left_width() const noexcept {
  return (head1.empty() ? 0 : head1.output_dim()) + cond_dims1;
}

std::size_t CriticSet::critic_input_dim() const noexcept {
  return critic.empty() ? 0 : critic.input_dim();
}

void CriticSet::validate() const {
  if (critic.num_layers() != 2 || critic.output_dim() != 1) {
    throw ShapeError("CriticSet: critic must be in -> hidden -> 1");
  }
}

CriticSet make_critic_set(const CriticSpec& spec, Rng& rng) {
  CriticSet cs;
  Rng r1 = rng.split("head1");
  Rng r2 = rng.split("head2");
  Rng rc = rng.split("critic");
  std::size_t out1 = spec.identity_dim1;
  std::size_t out2 = spec.identity_dim2;
  if (!spec.head1_dims.empty()) {
    cs.head1 = MlpNet(spec.head1_dims, r1);
    out1 = cs.head1.output_dim();
  }
  if (!spec.head2_dims.empty()) {
    cs.head2 = MlpNet(spec.head2_dims, r2);
    out2 = cs.head2.output_dim();
  }
  if (out1 == 0 || out2 == 0) throw ConfigError("make_critic_set: zero-width view");
  cs.cond_kind = spec.cond_kind;
  cs.cond_dims1 = spec.cond_dims1;
  cs.cond_dims2 = spec.cond_dims2;
  cs.critic = MlpNet({out1 + spec.cond_dims1 + out2 + spec.cond_dims2, spec.critic_hidden, 1}, rc);
  return cs;
}

Matrix score_matrix(const CriticSet& cs, const Matrix& z1, const Matrix& z2,
                    const Conditioning* cond, ScoreCache* cache) {
  cs.validate();
  const std::size_t n = z1.rows();
  if (n < 2) throw UsageError("score_matrix: need n >= 2 samples (no negatives otherwise)");
  if (z2.rows() != n) throw ShapeError("score_matrix: views disagree on row count");

  ScoreCache local;
  ScoreCache& c = cache != nullptr ? *cache : local;
  const Matrix h1 = head_output(cs.head1, z1, &c.head1_acts);
  const Matrix h2 = head_output(cs.head2, z2, &c.head2_acts);
  const std::size_t cl = cond != nullptr ? cond->left_dims() : 0;
  const std::size_t cr = cond != nullptr ? cond->right_dims() : 0;
  if (cl != cs.cond_dims1 || cr != cs.cond_dims2) {
    throw ShapeError("score_matrix: conditioning widths (" + std::to_string(cl) + ", " +
                     std::to_string(cr) + ") vs critic set (" + std::to_string(cs.cond_dims1) +
                     ", " + std::to_string(cs.cond_dims2) + ")");
  }
  if (cl > 0 && cond->left.rows() != n) throw ShapeError("score_matrix: cond rows (left)");
  if (cr > 0 && cond->right.rows() != n) throw ShapeError("score_matrix: cond rows (right)");
  c.left = cl > 0 ? hconcat(h1, cond->left) : h1;
  c.right = cr > 0 ? hconcat(h2, cond->right) : h2;
  const std::size_t lw = c.left.cols();
  if (lw + c.right.cols() != cs.critic.input_dim()) {
    throw ShapeError("score_matrix: critic input " + std::to_string(cs.critic.input_dim()) +
                     " vs views " + std::to_string(lw) + " + " + std::to_string(c.right.cols()));
  }

  const DenseLayer& l0 = cs.critic.layers()[0];
  const DenseLayer& l1 = cs.critic.layers()[1];
  const std::size_t hidden = l0.out_dim();
  c.a = matmul_nt(c.left, col_slice(l0.weight, 0, lw));
  c.b = matmul_nt(c.right, col_slice(l0.weight, lw, c.right.cols()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < hidden; ++k) c.a(i, k) += l0.bias(0, k);
  }
  Matrix s(n, n, l1.bias(0, 0));
  kernels::active().pair_relu_dot(n, n, hidden, c.a.data(), c.b.data(), l1.weight.data(),
                                  s.data());
  return s;
}

ScoreGrads score_backward(CriticSet& cs, const ScoreCache& cache, const Matrix& grad_scores,
                          BackwardScope scope) {
  const std::size_t n = cache.a.rows();
  if (grad_scores.rows() != n || grad_scores.cols() != n) {
    throw ShapeError("score_backward: grad " + shape_str(grad_scores) + " for n = " +
                     std::to_string(n));
  }
  DenseLayer& l0 = cs.critic.layers()[0];
  DenseLayer& l1 = cs.critic.layers()[1];
  const std::size_t hidden = l0.out_dim();
  const std::size_t lw = cache.left.cols();
  const std::size_t rw = cache.right.cols();

  Matrix mask_a(n, hidden);
  Matrix mask_b(n, hidden);
  std::vector<double> dv(hidden, 0.0);
  kernels::active().pair_relu_dot_backward(n, n, hidden, cache.a.data(), cache.b.data(),
                                           grad_scores.data(), mask_a.data(), mask_b.data(),
                                           dv.data());
  Matrix da = std::move(mask_a);
  Matrix db = std::move(mask_b);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < hidden; ++k) {
      da(i, k) *= l1.weight(0, k);
      db(i, k) *= l1.weight(0, k);
    }
  }

  if (scope.critic) {
    double g_total = 0.0;
    for (double g : grad_scores.values()) g_total += g;
    l1.grad_bias(0, 0) += g_total;
    for (std::size_t k = 0; k < hidden; ++k) l1.grad_weight(0, k) += dv[k];
    const Matrix gwl = matmul_tn(da, cache.left);
    const Matrix gwr = matmul_tn(db, cache.right);
    for (std::size_t k = 0; k < hidden; ++k) {
      double* row = l0.grad_weight.row(k).data();
      for (std::size_t c = 0; c < lw; ++c) row[c] += gwl(k, c);
      for (std::size_t c = 0; c < rw; ++c) row[lw + c] += gwr(k, c);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < hidden; ++k) l0.grad_bias(0, k) += da(i, k);
    }
  }

  ScoreGrads out;
  if (!scope.heads) return out;
  const Matrix dleft = matmul(da, col_slice(l0.weight, 0, lw));
  const Matrix dright = matmul(db, col_slice(l0.weight, lw, rw));
  const std::size_t h1w = lw - cs.cond_dims1;
  const std::size_t h2w = rw - cs.cond_dims2;
  Matrix dh1 = cs.cond_dims1 > 0 ? col_slice(dleft, 0, h1w) : dleft;
  Matrix dh2 = cs.cond_dims2 > 0 ? col_slice(dright, 0, h2w) : dright;
  if (cs.cond_dims1 > 0) out.cond_left = col_slice(dleft, h1w, cs.cond_dims1);
  if (cs.cond_dims2 > 0) out.cond_right = col_slice(dright, h2w, cs.cond_dims2);
  out.z1 = cs.head1.empty() ? std::move(dh1) : cs.head1.backward(cache.head1_acts, dh1);
  out.z2 = cs.head2.empty() ? std::move(dh2) : cs.head2.backward(cache.head2_acts, dh2);
  return out;
}

Estimate infonce_estimate(const Matrix& scores, const Mask* mask) {
  check_square(scores, mask);
  const std::size_t n = scores.rows();
  Estimate e;
  e.grad = Matrix(n, n);
  std::vector<double> row_est;
  std::vector<std::size_t> rows;
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    double mx = -kScoreClamp;
    for (std::size_t j = 0; j < n; ++j) {
      if (!admissible(mask, i, j)) continue;
      ++count;
      mx = std::max(mx, clamp_score(scores(i, j)));
    }
    if (count < 2) continue;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      w[j] = admissible(mask, i, j) ? std::exp(clamp_score(scores(i, j)) - mx) : 0.0;
      sum += w[j];
    }
    const double lse = mx + std::log(sum);
    row_est.push_back(clamp_score(scores(i, i)) - lse + std::log(static_cast<double>(count)));
    rows.push_back(i);
    for (std::size_t j = 0; j < n; ++j) e.grad(i, j) = -w[j] / sum;
    e.grad(i, i) += 1.0;
  }
  if (rows.empty()) throw EstimationError("infonce_estimate: every row lacks admissible negatives");
  const double m = static_cast<double>(rows.size());
  for (double v : row_est) e.value += v;
  e.value /= m;
  for (double& g : e.grad.values()) g /= m;
  zero_clamped(scores, e.grad);
  e.rows_used = rows.size();
  return e;
}

Estimate nce_club_estimate(const Matrix& scores, const Mask* mask) {
  check_square(scores, mask);
  const std::size_t n = scores.rows();
  Estimate e;
  e.grad = Matrix(n, n);
  std::vector<std::size_t> negatives(n, 0);
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && admissible(mask, i, j)) ++negatives[i];
    }
    if (negatives[i] > 0) ++used;
  }
  if (used == 0) throw EstimationError("nce_club_estimate: every row lacks admissible negatives");
  const double m = static_cast<double>(used);
  for (std::size_t i = 0; i < n; ++i) {
    if (negatives[i] == 0) continue;
    const double k = static_cast<double>(negatives[i]);
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !admissible(mask, i, j)) continue;
      off += clamp_score(scores(i, j));
      e.grad(i, j) = -1.0 / (m * k);
    }
    e.value += clamp_score(scores(i, i)) - off / k;
    e.grad(i, i) = 1.0 / m;
  }
  e.value /= m;
  zero_clamped(scores, e.grad);
  e.rows_used = used;
  return e;
}

}  // namespace fcl::est
