#pragma once

// Contrastive MI bounds over concat critics: InfoNCE (lower) and NCE-CLUB
// (upper), plus conditioning by concatenation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fcl/matrix.hpp"
#include "fcl/mlp.hpp"
#include "fcl/rng.hpp"

namespace fcl::est {

/// Every row of the score matrix was dropped by the admissibility mask.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scores are clamped to [−kScoreClamp, kScoreClamp] before exponentiation;
/// clamped entries pass no gradient.
inline constexpr double kScoreClamp = 50.0;

enum class CondKind { none, label, augmented_pair };

[[nodiscard]] const char* cond_kind_name(CondKind kind) noexcept;

/// Column admissibility: allowed(i, j) says x2_j may serve as a negative (or
/// the positive, when i == j) for row i.
class Mask {
 public:
  Mask() = default;
  explicit Mask(std::size_t n, bool fill = true) : n_(n), allowed_(n * n, fill ? 1 : 0) {}
  /// allowed(i, j) iff group[i] == group[j].
  static Mask same_group(std::span<const int> group);

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] bool operator()(std::size_t i, std::size_t j) const noexcept {
    return allowed_[i * n_ + j] != 0;
  }
  void set(std::size_t i, std::size_t j, bool v) noexcept { allowed_[i * n_ + j] = v ? 1 : 0; }
  [[nodiscard]] Mask transposed() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> allowed_;
};

/// Extra critic-input columns for each side plus an optional admissibility
/// grouping (same group = admissible negative).
struct Conditioning {
  Matrix left;
  Matrix right;
  std::vector<int> groups;

  [[nodiscard]] std::size_t left_dims() const noexcept { return left.cols(); }
  [[nodiscard]] std::size_t right_dims() const noexcept { return right.cols(); }
  [[nodiscard]] std::optional<Mask> mask() const;
};

/// Rows of one-hot encodings; labels must lie in [0, num_classes).
[[nodiscard]] Matrix one_hot(std::span<const int> labels, std::size_t num_classes);

/// Builds the conditioning channel for a term.
///   none           → empty.
///   label          → one-hot labels on both sides, same-label mask.
///   augmented_pair → aug_left / aug_right (head encodings of one augmented
///                    pair per sample), no mask.
/// Missing labels or augmentations → UsageError.
[[nodiscard]] Conditioning conditional_pack(CondKind kind, std::span<const int> labels,
                                            std::size_t num_classes, const Matrix* aug_left,
                                            const Matrix* aug_right);

/// Two projection heads and a one-hidden-layer concat critic. An empty head
/// is the identity (used for a raw one-hot label view).
struct CriticSet {
  MlpNet head1;
  MlpNet head2;
  MlpNet critic;
  CondKind cond_kind = CondKind::none;
  std::size_t cond_dims1 = 0;
  std::size_t cond_dims2 = 0;

  [[nodiscard]] std::size_t left_width() const noexcept;
  /// Critic input = [head1 out ∥ cond1 ∥ head2 out ∥ cond2].
  [[nodiscard]] std::size_t critic_input_dim() const noexcept;
  /// Throws ShapeError if the critic is not in→hidden→1 or widths disagree.
  void validate() const;
};

struct CriticSpec {
  /// Empty = identity head on that side. Otherwise full layer dims incl. input.
  std::vector<std::size_t> head1_dims;
  std::vector<std::size_t> head2_dims;
  /// Input width for an identity head (ignored when the head exists).
  std::size_t identity_dim1 = 0;
  std::size_t identity_dim2 = 0;
  std::size_t critic_hidden = 512;
  CondKind cond_kind = CondKind::none;
  std::size_t cond_dims1 = 0;
  std::size_t cond_dims2 = 0;
};

[[nodiscard]] CriticSet make_critic_set(const CriticSpec& spec, Rng& rng);

/// Everything score_backward needs from the forward pass.
struct ScoreCache {
  Activations head1_acts;
  Activations head2_acts;
  Matrix left;   // [head1 out ∥ cond1]
  Matrix right;  // [head2 out ∥ cond2]
  Matrix a;      // left·W_leftᵀ + b  (n × hidden)
  Matrix b;      // right·W_rightᵀ    (n × hidden)
};

/// S[i][j] = critic([head1(z1_i) ∥ cond1_i ∥ head2(z2_j) ∥ cond2_j]).
/// n < 2 → UsageError.
[[nodiscard]] Matrix score_matrix(const CriticSet& cs, const Matrix& z1, const Matrix& z2,
                                  const Conditioning* cond = nullptr, ScoreCache* cache = nullptr);

struct ScoreGrads {
  Matrix z1;
  Matrix z2;
  Matrix cond_left;
  Matrix cond_right;
};

struct BackwardScope {
  bool critic = true;  // accumulate critic parameter grads
  bool heads = true;   // accumulate head parameter grads and return input grads
};

/// Reverse pass for upstream dLoss/dS.
ScoreGrads score_backward(CriticSet& cs, const ScoreCache& cache, const Matrix& grad_scores,
                          BackwardScope scope = {});

struct Estimate {
  double value = 0.0;
  Matrix grad;  // d value / d S
  std::size_t rows_used = 0;
};

/// (1/m)·Σ_i [S_ii − log((1/|N_i|)·Σ_{j∈N_i} exp S_ij)] over rows with at least
/// one admissible negative (N_i includes i).
[[nodiscard]] Estimate infonce_estimate(const Matrix& scores, const Mask* mask = nullptr);

/// (1/m)·Σ_i [S_ii − mean_{j∈N_i, j≠i} S_ij]; S must come from a critic held
/// fixed for this evaluation.
[[nodiscard]] Estimate nce_club_estimate(const Matrix& scores, const Mask* mask = nullptr);

}  // namespace fcl::est
