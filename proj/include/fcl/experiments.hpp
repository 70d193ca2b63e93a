#pragma once

// Reproducible experiment runners behind the command-line tool. Each runner
// is a pure function of its config: results come back as tables, and
// write_* turns them into CSV and SVG files.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fcl/eval.hpp"
#include "fcl/objectives.hpp"
#include "fcl/report.hpp"
#include "fcl/synthgen.hpp"

namespace fcl::exp {

// ---- MI sandwich on correlated Gaussians --------------------------------

struct GaussianBenchConfig {
  std::vector<std::size_t> dims{20, 50, 100, 200};
  std::vector<double> target_mis{2, 4, 6, 8, 10};
  std::size_t batch_size = 64;
  std::size_t steps = 4000;
  std::size_t critic_hidden = 512;
  double learning_rate = 5e-4;
  std::uint64_t seed = 0;
  void validate() const;  // dims ⊆ {20,50,100,200}, MI ⊆ {2,4,6,8,10}
};

struct GaussianCurve {
  std::size_t dim = 0;
  double target_mi = 0.0;
  std::vector<double> nce;       // per step, on that step's fresh batch
  std::vector<double> nce_club;  // same batch, same critic
  /// Means over the last `window` steps.
  [[nodiscard]] double tail_nce(std::size_t window) const;
  [[nodiscard]] double tail_club(std::size_t window) const;
};

/// One critic per (dim, MI) trained by InfoNCE on fresh batches; NCE-CLUB is
/// read off the same score matrix before each update.
[[nodiscard]] GaussianCurve run_gaussian_curve(std::size_t dim, double target_mi,
                                               const GaussianBenchConfig& config);
[[nodiscard]] std::vector<GaussianCurve> run_gaussian_bench(const GaussianBenchConfig& config);
/// gaussian_bench.csv: dim,target_mi,step,nce,nce_club; plus one SVG per dim.
void write_gaussian_bench(const std::vector<GaussianCurve>& curves, const std::filesystem::path& dir);

// ---- Conditional MI sandwich on the linear-Gaussian triple ---------------

struct CmiBenchConfig {
  std::size_t dx = 5;
  std::vector<double> couplings{0.0, 1.0};
  /// Sample-size sweep at fixed_dz, then dz sweep at fixed_n.
  std::vector<std::size_t> n_values{5000, 10000, 20000};
  std::vector<std::size_t> dz_values{5, 10, 20};
  std::size_t fixed_dz = 10;
  std::size_t fixed_n = 20000;
  std::size_t group_size = 16;
  std::size_t batch_size = 64;
  std::size_t steps = 3000;
  std::size_t eval_batches = 100;
  std::size_t critic_hidden = 256;
  double learning_rate = 5e-4;
  std::uint64_t seed = 0;
  void validate() const;
};

struct CmiRow {
  std::string setting;  // "n" or "dz"
  std::size_t dz = 0;
  std::size_t dx = 0;
  std::size_t n = 0;
  double coupling = 0.0;
  double true_cmi = 0.0;
  double cond_nce = 0.0;
  double cond_club = 0.0;
};

/// Trains one conditional critic on a pool of n samples (z appended to both
/// sides, negatives restricted to the same z group) and evaluates both
/// bounds on fresh held-out groups.
[[nodiscard]] CmiRow run_cmi_cell(const std::string& setting, std::size_t dz, std::size_t n,
                                  double coupling, const CmiBenchConfig& config);
[[nodiscard]] std::vector<CmiRow> run_cmi_bench(const CmiBenchConfig& config);
/// cmi_bench.csv: setting,dz,dx,n,coupling,true_cmi,cond_nce,cond_club; plus SVG.
void write_cmi_bench(const std::vector<CmiRow>& rows, const std::filesystem::path& dir);

// ---- Training on the controllable synthetic dataset ----------------------

struct ModelRunConfig {
  std::string variant = "factorcl_sup";
  double unique_ratio = 0.5;
  synth::SynthConfig data;  // ratios overridden by unique_ratio
  obj::ModelDims dims;
  std::size_t batch_size = 64;
  std::size_t outer_steps = 2000;
  std::size_t inner_k = 1;
  double learning_rate = 1e-3;
  std::size_t probe_train = 5000;
  std::size_t probe_test = 5000;
  std::size_t probe_epochs = 500;
  double probe_learning_rate = 1e-2;
};

struct TrainedModel {
  obj::ModelState model;
  obj::MetricsLog log;
};

/// Streams: seed → "init" (weights), "data" (batches).
[[nodiscard]] TrainedModel train_on_synthetic(const ModelRunConfig& config, std::uint64_t seed);

struct SyntheticConfig {
  std::vector<double> ratios{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<std::string> variants{"simclr", "supcon", "cross_self", "factorcl_sup", "factorcl_ssl"};
  std::uint64_t seed = 0;
  std::size_t num_seeds = 3;  // cell seeds are seed, seed+1, ...
  ModelRunConfig run;
  void validate() const;
};

struct SyntheticRow {
  double ratio = 0.0;
  std::string variant;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double train_accuracy = 0.0;
};

[[nodiscard]] SyntheticRow run_synthetic_cell(double ratio, const std::string& variant,
                                              std::uint64_t seed, const SyntheticConfig& config);
[[nodiscard]] std::vector<SyntheticRow> run_synthetic(const SyntheticConfig& config);
/// synthetic.csv: ratio,variant,seed,accuracy,train_accuracy;
/// synthetic_summary.csv: ratio,variant,mean_accuracy,std_accuracy,seeds; plus SVG.
void write_synthetic(const std::vector<SyntheticRow>& rows, const std::filesystem::path& dir);

// ---- Probing a single trained model --------------------------------------

struct ProbeRunConfig {
  ModelRunConfig run;
  std::uint64_t seed = 0;
  /// Load this snapshot instead of training (empty = train inline).
  std::string snapshot;
  bool save_snapshot = false;
  std::size_t matrix_samples = 5000;
  bool infomin = false;
  eval::CriticTrainConfig infomin_critic;
  std::size_t infomin_samples = 20000;
  void validate() const;
};

struct ProbeOutput {
  obj::MetricsLog log;  // empty when loaded from a snapshot
  eval::MiProbeMatrix matrix;
  std::vector<eval::ProbeResult> ablation;  // ablate only
  bool has_infomin = false;
  eval::InfoMinResult infomin;
};

/// Streams: seed → "init", "data" (training), "matrix", "ablation", "infomin".
[[nodiscard]] ProbeOutput run_probe(const ProbeRunConfig& config, bool ablate,
                                    const std::filesystem::path* snapshot_out = nullptr);
/// probe_matrix.csv: representation,latent,nats,bits; ablation.csv:
/// part,accuracy,train_accuracy,n_train,n_test; infomin.csv; metrics.csv.
void write_probe(const ProbeOutput& out, const std::filesystem::path& dir);

// ---- Config files -------------------------------------------------------

/// JSON text ↔ config. Unknown keys and wrong types are ConfigError so that
/// a typo cannot silently fall back to a default.
[[nodiscard]] GaussianBenchConfig parse_gaussian_config(const std::string& text);
[[nodiscard]] CmiBenchConfig parse_cmi_config(const std::string& text);
[[nodiscard]] SyntheticConfig parse_synthetic_config(const std::string& text);
[[nodiscard]] ProbeRunConfig parse_probe_config(const std::string& text);
[[nodiscard]] std::string to_json(const GaussianBenchConfig& c);
[[nodiscard]] std::string to_json(const CmiBenchConfig& c);
[[nodiscard]] std::string to_json(const SyntheticConfig& c);
[[nodiscard]] std::string to_json(const ProbeRunConfig& c);

/// manifest.json: command, code version, seed, kernel ISA, and the files
/// written, in sorted order.
void write_manifest(const std::filesystem::path& dir, const std::string& command, std::uint64_t seed);

[[nodiscard]] const char* code_version() noexcept;

}  // namespace fcl::exp
