#pragma once

// Downstream and information-theoretic evaluation of trained models.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcl/matrix.hpp"
#include "fcl/objectives.hpp"
#include "fcl/rng.hpp"
#include "fcl/synthgen.hpp"

namespace fcl::eval {

struct ProbeConfig {
  std::size_t epochs = 500;
  double learning_rate = 1e-2;
  /// z-score features with train-split statistics before fitting.
  bool standardize = true;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  std::string name;
  double accuracy = 0.0;
  double train_accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
};

/// Logistic regression (one linear layer + sigmoid) fit by full-batch Adam on
/// binary labels; reports held-out accuracy. Single-class train set, labels
/// outside {0, 1} → UsageError.
[[nodiscard]] ProbeResult linear_probe(const Matrix& z_train, std::span<const int> y_train,
                                       const Matrix& z_test, std::span<const int> y_test,
                                       const ProbeConfig& config, std::string name = "");

inline constexpr double kMiProbeRidge = 1e-6;

/// Joint-Gaussian plug-in ½·ln[det Σ_Z · det Σ_W / det Σ_ZW] with ridge on
/// every covariance, clamped at 0. Requires n > dim(Z) + dim(W) + 2.
[[nodiscard]] double gaussian_mi_probe(const Matrix& z, const Matrix& w);

struct MiProbeMatrix {
  std::vector<std::string> rows;  // representations
  std::vector<std::string> cols;  // latents: w1, w2, ws
  std::vector<std::vector<double>> nats;
  [[nodiscard]] double at(std::string_view row, std::string_view col) const;
};

/// Every (representation, latent) cell on a batch that carries latents.
/// Factorized models give rows Z_S1, Z_S2, Z_U1, Z_U2; others Z1, Z2.
[[nodiscard]] MiProbeMatrix probe_matrix(const obj::ModelState& model, const synth::SynthBatch& batch);

/// Probe on the model's full representation, trained on one fresh sample and
/// tested on another.
[[nodiscard]] ProbeResult probe_model(const obj::ModelState& model, const synth::SynthSource& source,
                                      std::size_t n_train, std::size_t n_test, Rng& rng,
                                      const ProbeConfig& config);

/// Probes on Z_S = [Z_S1 ∥ Z_S2], Z_U1, Z_U2 and the full concatenation.
[[nodiscard]] std::vector<ProbeResult> submodel_ablation(const obj::ModelState& model,
                                                         const synth::SynthSource& source,
                                                         std::size_t n_train, std::size_t n_test,
                                                         Rng& rng, const ProbeConfig& config);

struct CriticTrainConfig {
  std::size_t steps = 1500;
  std::size_t batch_size = 64;
  std::size_t eval_batches = 50;
  std::size_t hidden = 256;
  double learning_rate = 5e-4;
};

/// Trains a fresh InfoNCE critic between the rows of a and b (paired by row)
/// on random minibatches of the first half of the rows, and returns the mean
/// estimate over minibatches of the second half. b may be a one-hot label
/// view (identity head) when `b_is_label` is set.
[[nodiscard]] double trained_infonce(const Matrix& a, const Matrix& b, bool b_is_label,
                                     const CriticTrainConfig& config, Rng& rng);

struct InfoMinResult {
  double conditional = 0.0;  // Î(Z1; Y | X2)
  double pairwise = 0.0;     // Î(X1; X2)
  double ratio = 0.0;
};

/// Î(Z1;Y|X2) = Î([Z1 ∥ e2(x2)]; Y) − Î(e2(x2); Y) with label-view InfoNCE
/// critics, and Î(X1;X2) from a fresh InfoNCE critic on the raw views.
[[nodiscard]] InfoMinResult infomin_check(const obj::ModelState& model, const synth::SynthBatch& batch,
                                          const CriticTrainConfig& config, Rng& rng);

struct GapReport {
  double uniqueness_gap = 0.0;  // U1 + U2
  double bound_total = 0.0;     // 1 − exp[I(X1,X2;Y) − H(Y)]
  double bound_shared = 0.0;    // 1 − exp[S − H(Y)]
};

/// total = S + U1 + U2 (the decomposition identity).
[[nodiscard]] GapReport gap_report(double shared, double unique1, double unique2, double h_y);

}  // namespace fcl::eval
