#pragma once

// Synthetic data with known information structure:
//  * two-modality data built from unique latents w1, w2, a shared latent ws
//    and per-modality noise, with labels metered by (r_s, r_1, r_2);
//  * correlated Gaussian pairs with analytic MI;
//  * a linear-Gaussian triple (x1, x2, z) with analytic I(X1;X2|Z).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "fcl/matrix.hpp"
#include "fcl/rng.hpp"

namespace fcl::synth {

struct SynthConfig {
  std::size_t d_latent = 50;
  std::size_t d_noise = 25;
  std::size_t out_dim = 128;
  double r_shared = 1.0;
  double r_unique1 = 0.0;
  double r_unique2 = 0.0;
  double label_noise_std = 0.1;
  std::uint64_t transform_seed = 1;

  /// Throws ConfigError on negative ratios, ratios not summing to 1, or
  /// out_dim < 2·d_latent + d_noise.
  void validate() const;
  /// Width of the generator input [w_unique ∥ w_s ∥ noise].
  [[nodiscard]] std::size_t input_dim() const noexcept { return 2 * d_latent + d_noise; }
  /// Label-relevant coordinate counts ⌊r·d⌋ for ws, w1, w2.
  [[nodiscard]] std::size_t shared_selected() const noexcept;
  [[nodiscard]] std::size_t unique1_selected() const noexcept;
  [[nodiscard]] std::size_t unique2_selected() const noexcept;

  /// r_1 = r_2 = ratio / 2, r_s = 1 − ratio.
  [[nodiscard]] SynthConfig with_unique_ratio(double ratio) const;
};

/// Fixed per-modality generator maps (out_dim × input_dim) and the label
/// projection over the selected coordinates.
struct Transforms {
  Matrix t1;
  Matrix t2;
  std::vector<double> label_projection;
};

[[nodiscard]] Transforms make_transforms(const SynthConfig& config);

struct SynthBatch {
  Matrix x1, x2;
  std::vector<int> y;
  Matrix w1, w2, ws;
  Matrix noise1, noise2;
  [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
};

/// Config plus its transforms; what trainers and probes draw batches from.
class SynthSource {
 public:
  explicit SynthSource(SynthConfig config);
  [[nodiscard]] const SynthConfig& config() const noexcept { return config_; }
  [[nodiscard]] const Transforms& transforms() const noexcept { return transforms_; }
  [[nodiscard]] SynthBatch sample(std::size_t n, Rng& rng) const;

 private:
  SynthConfig config_;
  Transforms transforms_;
};

[[nodiscard]] SynthBatch sample_batch(const SynthConfig& config, const Transforms& transforms,
                                      std::size_t n, Rng& rng);

/// The label rule: y = 1[tanh(a·selected) + ε > 0], selected = first ⌊r_s·d⌋
/// coords of ws, ⌊r_1·d⌋ of w1, ⌊r_2·d⌋ of w2.
[[nodiscard]] double label_logit(const SynthConfig& config, const Transforms& transforms,
                                 std::span<const double> ws, std::span<const double> w1,
                                 std::span<const double> w2);

enum class Modality { first, second };
enum class AugMode { unimodal, unique };

struct AugmentedView {
  Matrix x;
  Matrix w_unique;
  Matrix ws;
  Matrix noise;
};

/// Generation-level augmentation. unimodal: resample the modality's noise and
/// keep all latents. unique: also resample the label-irrelevant coordinates of
/// the modality's unique latent.
[[nodiscard]] AugmentedView augment(const SynthConfig& config, const Transforms& transforms,
                                    const SynthBatch& batch, Modality modality, AugMode mode,
                                    Rng& rng);

/// Least-squares recovery of [w_unique ∥ w_s ∥ noise] from x via T's pseudo-inverse.
[[nodiscard]] Matrix latent_recovery(const Transforms& transforms, Modality modality,
                                     const Matrix& x);

/// Numerical rank via column-pivoted QR.
[[nodiscard]] std::size_t numerical_rank(const Matrix& m);

/// CSV: x1_*, x2_*, y, w1_*, w2_*, ws_*.
void write_batch_csv(std::ostream& os, const SynthBatch& batch);

struct GaussianPairConfig {
  std::size_t dim = 20;
  double rho = 0.5;
  void validate() const;
};

/// Coordinates iid bivariate normal with correlation rho.
[[nodiscard]] std::pair<Matrix, Matrix> sample_gaussian_pair(const GaussianPairConfig& config,
                                                             std::size_t n, Rng& rng);
/// −(d/2)·ln(1 − ρ²)
[[nodiscard]] double true_mi(const GaussianPairConfig& config);
/// sqrt(1 − exp(−2·mi/d))
[[nodiscard]] double rho_for_mi(std::size_t dim, double target_mi);

struct CmiTripleConfig {
  std::size_t dz = 10;
  std::size_t dx = 5;
  double coupling = 0.0;
  double noise1_std = 1.0;
  double noise2_std = 1.0;
  /// Consecutive samples sharing one z draw; >1 lets a batch hold several
  /// draws from p(x1, x2 | z) for conditional negatives.
  std::size_t group_size = 1;
  std::uint64_t matrix_seed = 7;
  void validate() const;
};

struct CmiTriple {
  Matrix x1, x2, z;
  std::vector<int> group;
};

/// z ~ N(0, I); x1 = A·z + n1; x2 = B·z + c·x1 + n2.
[[nodiscard]] CmiTriple sample_cmi_triple(const CmiTripleConfig& config, std::size_t n, Rng& rng);
/// I(X1;X2|Z) from the joint covariance by Schur complements.
[[nodiscard]] double true_cmi(const CmiTripleConfig& config);

}  // namespace fcl::synth
