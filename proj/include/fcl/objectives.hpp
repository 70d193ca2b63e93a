#pragma once

// Training objectives as signed sums of estimator terms, the two-timescale
// θ/φ loop, and representation assembly.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcl/estimators.hpp"
#include "fcl/matrix.hpp"
#include "fcl/mlp.hpp"
#include "fcl/rng.hpp"
#include "fcl/synthgen.hpp"

namespace fcl::obj {

enum class Variant { factorcl_sup, factorcl_ssl, ourcl_sup, ourcl_ssl, simclr, supcon, cross_self };

[[nodiscard]] Variant parse_variant(std::string_view name);  // ConfigError if unknown
[[nodiscard]] const char* variant_name(Variant v) noexcept;
[[nodiscard]] std::vector<Variant> all_variants();
/// Representations come from heads (factorcl_*) rather than encoders.
[[nodiscard]] bool is_factorized(Variant v) noexcept;
[[nodiscard]] bool needs_labels(Variant v) noexcept;
[[nodiscard]] bool needs_augmentations(Variant v) noexcept;

enum class EstimatorKind { nce, nce_club };
enum class ViewSource { e1, e2, e1_aug, e2_aug, label };

[[nodiscard]] const char* view_name(ViewSource v) noexcept;

struct ObjectiveTerm {
  std::string name;
  EstimatorKind kind = EstimatorKind::nce;
  int sign = 1;
  double weight = 1.0;
  ViewSource view1 = ViewSource::e1;
  ViewSource view2 = ViewSource::e2;
  est::CriticSet critics;
};

struct ModelDims {
  std::size_t x1_dim = 128;
  std::size_t x2_dim = 128;
  std::size_t encoder_hidden = 512;
  std::size_t embed_dim = 128;
  std::size_t head_hidden = 128;
  std::size_t head_out = 128;
  std::size_t critic_hidden = 512;
  std::size_t num_classes = 2;
};

struct ModelState {
  Variant variant = Variant::simclr;
  ModelDims dims;
  MlpNet e1;
  MlpNet e2;
  std::vector<ObjectiveTerm> terms;
  std::uint64_t outer_steps = 0;
  std::uint64_t inner_steps = 0;

  /// Encoders, every head, and the critics of nce terms.
  [[nodiscard]] std::vector<MlpNet*> theta();
  /// Critics of nce_club terms.
  [[nodiscard]] std::vector<MlpNet*> phi();
  [[nodiscard]] std::vector<const MlpNet*> theta() const;
  [[nodiscard]] std::vector<const MlpNet*> phi() const;
  [[nodiscard]] std::uint64_t theta_hash() const;
  [[nodiscard]] std::uint64_t phi_hash() const;
  [[nodiscard]] bool has_club_terms() const noexcept;
  [[nodiscard]] const ObjectiveTerm& term(std::string_view name) const;
};

/// Builds encoders and the variant's term list with freshly initialized
/// heads and critics.
[[nodiscard]] ModelState build_model(Variant variant, const ModelDims& dims, Rng& rng);

/// One training batch. Labels are required for *_sup and supcon, augmented
/// views for *_ssl and cross_self.
struct TrainBatch {
  Matrix x1, x2;
  std::vector<int> y;
  Matrix x1_aug, x2_aug;
  [[nodiscard]] std::size_t size() const noexcept { return x1.rows(); }
};

class BatchSource {
 public:
  virtual ~BatchSource() = default;
  [[nodiscard]] virtual TrainBatch next(std::size_t n, Rng& rng) const = 0;
};

/// Which augmentation each modality gets: ssl variants use a unimodal view of
/// x1 and a unique view of x2; cross_self uses unimodal views of both.
struct AugmentationPlan {
  bool enabled = false;
  synth::AugMode first = synth::AugMode::unimodal;
  synth::AugMode second = synth::AugMode::unique;
};
[[nodiscard]] AugmentationPlan augmentation_plan(Variant v) noexcept;

class SynthBatchSource final : public BatchSource {
 public:
  SynthBatchSource(const synth::SynthSource& source, AugmentationPlan plan)
      : source_(source), plan_(plan) {}
  [[nodiscard]] TrainBatch next(std::size_t n, Rng& rng) const override;
  /// The full batch including latents, for callers that need both.
  [[nodiscard]] TrainBatch from_synth(const synth::SynthBatch& b, Rng& rng) const;

 private:
  const synth::SynthSource& source_;
  AugmentationPlan plan_;
};

struct TermEstimate {
  std::string name;
  double estimate = 0.0;
};

struct StepReport {
  std::string phase;  // "outer" or "inner"
  std::vector<TermEstimate> terms;
  /// Outer: L = Σ sign·weight·estimate. Inner: Σ of companion InfoNCE values.
  double total = 0.0;
  double grad_norm = 0.0;
  bool skipped = false;
  std::string note;
};

/// Maximizes L over θ with club critics frozen (no gradient into φ); one Adam
/// step on θ. A term whose mask drops every row skips the whole step.
StepReport outer_step(ModelState& model, const TrainBatch& batch, const AdamHyper& hyper);

/// Maximizes every club term's companion InfoNCE over its critic (φ only);
/// one Adam step on φ. No-op for models without club terms.
StepReport inner_step(ModelState& model, const TrainBatch& batch, const AdamHyper& hyper);

/// L evaluated without any gradient or update.
[[nodiscard]] StepReport evaluate_objective(const ModelState& model, const TrainBatch& batch);

/// Gradient of −L accumulated into θ (and, unless `freeze_phi`, into club
/// critics). Exposed so tests can finite-difference the whole objective.
double accumulate_objective_gradients(ModelState& model, const TrainBatch& batch, bool accumulate,
                                      bool freeze_phi = true);

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t outer_steps = 2000;
  std::size_t inner_k = 1;
  AdamHyper adam;
  std::uint64_t seed = 0;
  void validate() const;
};

struct MetricsRow {
  std::uint64_t step = 0;
  std::string phase;
  std::string term;
  double estimate = 0.0;
  double total_loss = 0.0;
  double grad_norm = 0.0;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;
  std::size_t skipped_steps = 0;
  /// step,phase,term_name,estimate,total_loss,grad_norm
  void write_csv(std::ostream& os) const;
};

/// Algorithm loop: per outer step draw a batch and take outer_step, then
/// inner_k × (fresh batch → inner_step). Data comes from rng.
MetricsLog train(ModelState& model, const BatchSource& source, const TrainConfig& config, Rng& rng);

struct Representations {
  bool factorized = false;
  Matrix zs1, zu1, zs2, zu2;  // factorized variants
  Matrix z1, z2;              // encoder outputs (always filled)
  /// [zs1 ∥ zu1 ∥ zs2 ∥ zu2] for factorized variants, [z1 ∥ z2] otherwise.
  [[nodiscard]] Matrix full() const;
  /// One of zs1, zu1, zs2, zu2, z1, z2. Factorized parts of a non-factorized
  /// model → UsageError.
  [[nodiscard]] const Matrix& part(std::string_view name) const;
};

[[nodiscard]] Representations assemble_representations(const ModelState& model, const Matrix& x1,
                                                       const Matrix& x2);

/// Writes one "<net>.mlp" file per network plus manifest.json (variant, dims,
/// term graph) into dir.
void save_model(const ModelState& model, const std::filesystem::path& dir);
[[nodiscard]] ModelState load_model(const std::filesystem::path& dir);

}  // namespace fcl::obj
