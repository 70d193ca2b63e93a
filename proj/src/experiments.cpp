#include "fcl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fcl/estimators.hpp"
#include "fcl/kernels.hpp"

#ifndef FCL_VERSION
#define FCL_VERSION "unknown"
#endif

namespace fcl::exp {
namespace {

using json = nlohmann::json;
using report::fmt;

double tail_mean(const std::vector<double>& v, std::size_t window) {
  if (v.empty()) return 0.0;
  const std::size_t w = std::min(window, v.size());
  return std::accumulate(v.end() - static_cast<std::ptrdiff_t>(w), v.end(), 0.0) / static_cast<double>(w);
}

void train_critic_step(est::CriticSet& cs, const est::ScoreCache& cache, const est::Estimate& e,
                       const AdamHyper& hyper) {
  Matrix g = e.grad;
  for (double& v : g.values()) v = -v;
  (void)est::score_backward(cs, cache, g);
  adam_step(cs.critic, hyper);
  if (!cs.head1.empty()) adam_step(cs.head1, hyper);
  if (!cs.head2.empty()) adam_step(cs.head2, hyper);
}

std::string mi_key(std::size_t dim, double mi) { return "d" + std::to_string(dim) + "_mi" + fmt(mi); }

// Rows [g·size, (g+1)·size) of the triple for every group index in `groups`,
// relabelled 0..k−1 by slot so a group drawn twice stays two groups.
est::Conditioning gather_groups(const synth::CmiTriple& t, const std::vector<std::size_t>& groups,
                                std::size_t size, Matrix& x1, Matrix& x2) {
  std::vector<std::size_t> rows;
  est::Conditioning c;
  for (std::size_t s = 0; s < groups.size(); ++s) {
    for (std::size_t r = 0; r < size; ++r) {
      rows.push_back(groups[s] * size + r);
      c.groups.push_back(static_cast<int>(s));
    }
  }
  x1 = gather_rows(t.x1, rows);
  x2 = gather_rows(t.x2, rows);
  c.left = gather_rows(t.z, rows);
  c.right = c.left;
  return c;
}

// ---- strict JSON reading ----

class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }
  [[nodiscard]] const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json parse_text(const std::string& text) {
  try {
    return json::parse(text.empty() ? std::string("{}") : text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

void read_run(const json& j, ModelRunConfig& c) {
  Reader r(j, "run");
  r.get("variant", c.variant);
  r.get("unique_ratio", c.unique_ratio);
  r.get("batch_size", c.batch_size);
  r.get("outer_steps", c.outer_steps);
  r.get("inner_k", c.inner_k);
  r.get("learning_rate", c.learning_rate);
  r.get("probe_train", c.probe_train);
  r.get("probe_test", c.probe_test);
  r.get("probe_epochs", c.probe_epochs);
  r.get("probe_learning_rate", c.probe_learning_rate);
  if (const json* d = r.child("data")) {
    Reader rd(*d, "run.data");
    rd.get("d_latent", c.data.d_latent);
    rd.get("d_noise", c.data.d_noise);
    rd.get("out_dim", c.data.out_dim);
    rd.get("label_noise_std", c.data.label_noise_std);
    rd.get("transform_seed", c.data.transform_seed);
    rd.finish();
  }
  if (const json* d = r.child("dims")) {
    Reader rd(*d, "run.dims");
    rd.get("encoder_hidden", c.dims.encoder_hidden);
    rd.get("embed_dim", c.dims.embed_dim);
    rd.get("head_hidden", c.dims.head_hidden);
    rd.get("head_out", c.dims.head_out);
    rd.get("critic_hidden", c.dims.critic_hidden);
    rd.finish();
  }
  r.finish();
}

json run_json(const ModelRunConfig& c) {
  return {{"variant", c.variant},
          {"unique_ratio", c.unique_ratio},
          {"batch_size", c.batch_size},
          {"outer_steps", c.outer_steps},
          {"inner_k", c.inner_k},
          {"learning_rate", c.learning_rate},
          {"probe_train", c.probe_train},
          {"probe_test", c.probe_test},
          {"probe_epochs", c.probe_epochs},
          {"probe_learning_rate", c.probe_learning_rate},
          {"data",
           {{"d_latent", c.data.d_latent},
            {"d_noise", c.data.d_noise},
            {"out_dim", c.data.out_dim},
            {"label_noise_std", c.data.label_noise_std},
            {"transform_seed", c.data.transform_seed}}},
          {"dims",
           {{"encoder_hidden", c.dims.encoder_hidden},
            {"embed_dim", c.dims.embed_dim},
            {"head_hidden", c.dims.head_hidden},
            {"head_out", c.dims.head_out},
            {"critic_hidden", c.dims.critic_hidden}}}};
}

void validate_run(const ModelRunConfig& c) {
  (void)obj::parse_variant(c.variant);
  if (c.unique_ratio < 0.0 || c.unique_ratio > 1.0) throw ConfigError("unique_ratio must lie in [0, 1]");
  c.data.with_unique_ratio(c.unique_ratio).validate();
  if (c.batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (c.probe_train < 2 || c.probe_test < 1) throw ConfigError("probe splits too small");
  if (!(c.learning_rate > 0.0) || !(c.probe_learning_rate > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
}

eval::ProbeConfig probe_config(const ModelRunConfig& c, std::uint64_t seed) {
  eval::ProbeConfig p;
  p.epochs = c.probe_epochs;
  p.learning_rate = c.probe_learning_rate;
  p.seed = seed;
  return p;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

// ---- Gaussian bench ----

void GaussianBenchConfig::validate() const {
  const std::set<std::size_t> ok_dims{20, 50, 100, 200};
  const std::set<double> ok_mis{2, 4, 6, 8, 10};
  if (dims.empty() || target_mis.empty()) throw ConfigError("gaussian bench: empty grid");
  for (auto d : dims) {
    if (!ok_dims.count(d)) throw ConfigError("gaussian bench: dim " + std::to_string(d) + " not in {20,50,100,200}");
  }
  for (auto m : target_mis) {
    if (!ok_mis.count(m)) throw ConfigError("gaussian bench: MI " + fmt(m) + " not in {2,4,6,8,10}");
  }
  if (batch_size < 2 || steps == 0 || critic_hidden == 0) throw ConfigError("gaussian bench: bad sizes");
  if (!(learning_rate > 0.0)) throw ConfigError("gaussian bench: learning_rate must be positive");
}

double GaussianCurve::tail_nce(std::size_t window) const { return tail_mean(nce, window); }
double GaussianCurve::tail_club(std::size_t window) const { return tail_mean(nce_club, window); }

GaussianCurve run_gaussian_curve(std::size_t dim, double target_mi, const GaussianBenchConfig& config) {
  const synth::GaussianPairConfig pair{dim, synth::rho_for_mi(dim, target_mi)};
  const Rng base = Rng(config.seed).split("gaussian").split(mi_key(dim, target_mi));
  Rng init = base.split("init");
  Rng data = base.split("data");
  est::CriticSpec spec;
  spec.identity_dim1 = dim;
  spec.identity_dim2 = dim;
  spec.critic_hidden = config.critic_hidden;
  est::CriticSet cs = est::make_critic_set(spec, init);
  AdamHyper hyper;
  hyper.learning_rate = config.learning_rate;
  GaussianCurve curve;
  curve.dim = dim;
  curve.target_mi = target_mi;
  curve.nce.reserve(config.steps);
  curve.nce_club.reserve(config.steps);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const auto [x, y] = synth::sample_gaussian_pair(pair, config.batch_size, data);
    est::ScoreCache cache;
    const Matrix s = est::score_matrix(cs, x, y, nullptr, &cache);
    const est::Estimate nce = est::infonce_estimate(s);
    curve.nce.push_back(nce.value);
    curve.nce_club.push_back(est::nce_club_estimate(s).value);
    train_critic_step(cs, cache, nce, hyper);
  }
  return curve;
}

std::vector<GaussianCurve> run_gaussian_bench(const GaussianBenchConfig& config) {
  config.validate();
  std::vector<GaussianCurve> out;
  for (std::size_t d : config.dims) {
    for (double mi : config.target_mis) out.push_back(run_gaussian_curve(d, mi, config));
  }
  return out;
}

void write_gaussian_bench(const std::vector<GaussianCurve>& curves, const std::filesystem::path& dir) {
  report::Table t({"dim", "target_mi", "step", "nce", "nce_club"});
  for (const auto& c : curves) {
    for (std::size_t s = 0; s < c.nce.size(); ++s) {
      t.add({std::to_string(c.dim), fmt(c.target_mi), std::to_string(s), fmt(c.nce[s]), fmt(c.nce_club[s])});
    }
  }
  t.write(dir / "gaussian_bench.csv");
  report::Table summary({"dim", "target_mi", "tail_nce", "tail_nce_club"});
  std::map<std::size_t, report::LineChart> charts;
  for (const auto& c : curves) {
    summary.add({std::to_string(c.dim), fmt(c.target_mi), fmt(c.tail_nce(500)), fmt(c.tail_club(500))});
    auto& chart = charts[c.dim];
    chart.title = "MI estimates, d = " + std::to_string(c.dim);
    chart.x_label = "step";
    chart.y_label = "nats";
    chart.footer = "solid: InfoNCE / NCE-CLUB (50-step means); dashed: true MI";
    // Plot 50-step block means to keep the SVG small.
    report::Series lo{"nce mi=" + fmt(c.target_mi), {}, {}, false};
    report::Series hi{"club mi=" + fmt(c.target_mi), {}, {}, false};
    for (std::size_t s = 0; s < c.nce.size(); s += 50) {
      const std::size_t e = std::min(s + 50, c.nce.size());
      lo.x.push_back(static_cast<double>(s));
      hi.x.push_back(static_cast<double>(s));
      lo.y.push_back(std::accumulate(c.nce.begin() + s, c.nce.begin() + e, 0.0) / (e - s));
      hi.y.push_back(std::accumulate(c.nce_club.begin() + s, c.nce_club.begin() + e, 0.0) / (e - s));
    }
    report::Series truth{"true mi=" + fmt(c.target_mi), {0.0, static_cast<double>(c.nce.size())},
                         {c.target_mi, c.target_mi}, true};
    chart.series.push_back(std::move(lo));
    chart.series.push_back(std::move(hi));
    chart.series.push_back(std::move(truth));
  }
  summary.write(dir / "gaussian_summary.csv");
  for (const auto& [d, chart] : charts) {
    report::write_text(dir / ("gaussian_d" + std::to_string(d) + ".svg"), report::svg(chart));
  }
}

// ---- CMI bench ----

void CmiBenchConfig::validate() const {
  if (dx == 0 || fixed_dz == 0) throw ConfigError("cmi bench: dims must be positive");
  for (auto d : dz_values) {
    if (d == 0) throw ConfigError("cmi bench: dz must be positive");
  }
  if (couplings.empty()) throw ConfigError("cmi bench: no couplings");
  if (group_size < 2 || batch_size % group_size != 0 || batch_size < 2 * group_size) {
    throw ConfigError("cmi bench: batch_size must be a multiple (≥ 2×) of group_size ≥ 2");
  }
  for (auto n : n_values) {
    if (n < 2 * batch_size) throw ConfigError("cmi bench: n below two batches");
  }
  if (fixed_n < 2 * batch_size) throw ConfigError("cmi bench: fixed_n below two batches");
  if (steps == 0 || eval_batches == 0 || critic_hidden == 0) throw ConfigError("cmi bench: bad sizes");
  if (!(learning_rate > 0.0)) throw ConfigError("cmi bench: learning_rate must be positive");
}

CmiRow run_cmi_cell(const std::string& setting, std::size_t dz, std::size_t n, double coupling,
                    const CmiBenchConfig& config) {
  synth::CmiTripleConfig tc;
  tc.dz = dz;
  tc.dx = config.dx;
  tc.coupling = coupling;
  tc.group_size = config.group_size;
  tc.validate();
  const Rng base = Rng(config.seed)
                       .split("cmi")
                       .split(setting + "_dz" + std::to_string(dz) + "_n" + std::to_string(n) + "_c" +
                              fmt(coupling));
  Rng pool_rng = base.split("pool");
  Rng eval_rng = base.split("eval");
  Rng init = base.split("init");
  Rng pick = base.split("batches");
  const synth::CmiTriple pool = synth::sample_cmi_triple(tc, n, pool_rng);
  const std::size_t groups_in_pool = n / config.group_size;
  const std::size_t per_batch = config.batch_size / config.group_size;

  est::CriticSpec spec;
  spec.identity_dim1 = config.dx;
  spec.identity_dim2 = config.dx;
  spec.cond_dims1 = dz;
  spec.cond_dims2 = dz;
  spec.critic_hidden = config.critic_hidden;
  est::CriticSet cs = est::make_critic_set(spec, init);
  AdamHyper hyper;
  hyper.learning_rate = config.learning_rate;
  std::vector<std::size_t> groups(per_batch);
  Matrix x1, x2;
  for (std::size_t step = 0; step < config.steps; ++step) {
    for (auto& g : groups) g = pick.index(groups_in_pool);
    const est::Conditioning cond = gather_groups(pool, groups, config.group_size, x1, x2);
    const est::Mask mask = *cond.mask();
    est::ScoreCache cache;
    const Matrix s = est::score_matrix(cs, x1, x2, &cond, &cache);
    train_critic_step(cs, cache, est::infonce_estimate(s, &mask), hyper);
  }

  const synth::CmiTriple held =
      synth::sample_cmi_triple(tc, config.eval_batches * config.batch_size, eval_rng);
  double nce = 0.0, club = 0.0;
  for (std::size_t b = 0; b < config.eval_batches; ++b) {
    std::iota(groups.begin(), groups.end(), b * per_batch);
    const est::Conditioning cond = gather_groups(held, groups, config.group_size, x1, x2);
    const est::Mask mask = *cond.mask();
    const Matrix s = est::score_matrix(cs, x1, x2, &cond);
    nce += est::infonce_estimate(s, &mask).value;
    club += est::nce_club_estimate(s, &mask).value;
  }
  CmiRow row;
  row.setting = setting;
  row.dz = dz;
  row.dx = config.dx;
  row.n = n;
  row.coupling = coupling;
  row.true_cmi = synth::true_cmi(tc);
  row.cond_nce = nce / static_cast<double>(config.eval_batches);
  row.cond_club = club / static_cast<double>(config.eval_batches);
  return row;
}

std::vector<CmiRow> run_cmi_bench(const CmiBenchConfig& config) {
  config.validate();
  std::vector<CmiRow> out;
  for (double c : config.couplings) {
    for (std::size_t n : config.n_values) out.push_back(run_cmi_cell("n", config.fixed_dz, n, c, config));
    for (std::size_t dz : config.dz_values) out.push_back(run_cmi_cell("dz", dz, config.fixed_n, c, config));
  }
  return out;
}

void write_cmi_bench(const std::vector<CmiRow>& rows, const std::filesystem::path& dir) {
  report::Table t({"setting", "dz", "dx", "n", "coupling", "true_cmi", "cond_nce", "cond_club"});
  report::BarChart chart;
  chart.title = "Conditional MI: InfoNCE / truth / NCE-CLUB";
  chart.y_label = "nats";
  chart.footer = "per cell: lower bound, true CMI, upper bound";
  for (const auto& r : rows) {
    t.add({r.setting, std::to_string(r.dz), std::to_string(r.dx), std::to_string(r.n), fmt(r.coupling),
           fmt(r.true_cmi), fmt(r.cond_nce), fmt(r.cond_club)});
    const std::string tag = r.setting + "=" + std::to_string(r.setting == "n" ? r.n : r.dz) + " c=" + fmt(r.coupling);
    for (const auto& [suffix, v] : {std::pair{" lo", r.cond_nce}, {" true", r.true_cmi}, {" hi", r.cond_club}}) {
      chart.labels.push_back(suffix == std::string(" true") ? tag : "");
      chart.values.push_back(v);
    }
  }
  t.write(dir / "cmi_bench.csv");
  report::write_text(dir / "cmi_bench.svg", report::svg(chart));
}

// ---- synthetic ----

TrainedModel train_on_synthetic(const ModelRunConfig& config, std::uint64_t seed) {
  validate_run(config);
  const obj::Variant v = obj::parse_variant(config.variant);
  const synth::SynthSource source(config.data.with_unique_ratio(config.unique_ratio));
  obj::ModelDims dims = config.dims;
  dims.x1_dim = config.data.out_dim;
  dims.x2_dim = config.data.out_dim;
  const Rng base(seed);
  Rng init = base.split("init");
  Rng data = base.split("data");
  TrainedModel tm{obj::build_model(v, dims, init), {}};
  obj::TrainConfig tc;
  tc.batch_size = config.batch_size;
  tc.outer_steps = config.outer_steps;
  tc.inner_k = config.inner_k;
  tc.adam.learning_rate = config.learning_rate;
  tc.seed = seed;
  const obj::SynthBatchSource batches(source, obj::augmentation_plan(v));
  tm.log = obj::train(tm.model, batches, tc, data);
  return tm;
}

void SyntheticConfig::validate() const {
  if (ratios.empty() || variants.empty() || num_seeds == 0) throw ConfigError("synthetic: empty grid");
  for (double r : ratios) {
    if (r < 0.0 || r > 1.0) throw ConfigError("synthetic: ratio " + fmt(r) + " outside [0, 1]");
  }
  for (const auto& v : variants) (void)obj::parse_variant(v);
  validate_run(run);
}

SyntheticRow run_synthetic_cell(double ratio, const std::string& variant, std::uint64_t seed,
                                const SyntheticConfig& config) {
  ModelRunConfig rc = config.run;
  rc.variant = variant;
  rc.unique_ratio = ratio;
  const TrainedModel tm = train_on_synthetic(rc, seed);
  const synth::SynthSource source(rc.data.with_unique_ratio(ratio));
  Rng probe = Rng(seed).split("probe");
  const eval::ProbeResult p =
      eval::probe_model(tm.model, source, rc.probe_train, rc.probe_test, probe, probe_config(rc, seed));
  return {ratio, variant, seed, p.accuracy, p.train_accuracy};
}

std::vector<SyntheticRow> run_synthetic(const SyntheticConfig& config) {
  config.validate();
  std::vector<SyntheticRow> out;
  for (double r : config.ratios) {
    for (const auto& v : config.variants) {
      for (std::size_t k = 0; k < config.num_seeds; ++k) out.push_back(run_synthetic_cell(r, v, config.seed + k, config));
    }
  }
  return out;
}

void write_synthetic(const std::vector<SyntheticRow>& rows, const std::filesystem::path& dir) {
  report::Table t({"ratio", "variant", "seed", "accuracy", "train_accuracy"});
  std::map<std::string, std::map<double, std::vector<double>>> by;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    t.add({fmt(r.ratio), r.variant, std::to_string(r.seed), fmt(r.accuracy), fmt(r.train_accuracy)});
    if (!by.count(r.variant)) order.push_back(r.variant);
    by[r.variant][r.ratio].push_back(r.accuracy);
  }
  t.write(dir / "synthetic.csv");
  report::Table s({"ratio", "variant", "mean_accuracy", "std_accuracy", "seeds"});
  report::LineChart chart;
  chart.title = "Linear-probe accuracy vs unique-information ratio";
  chart.x_label = "unique ratio (r1 + r2)";
  chart.y_label = "test accuracy";
  chart.footer = "mean over seeds; thresholds in the acceptance suite are derived contracts";
  for (const auto& v : order) {
    report::Series series{v, {}, {}, false};
    for (const auto& [ratio, accs] : by[v]) {
      const double n = static_cast<double>(accs.size());
      const double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / n;
      double var = 0.0;
      for (double a : accs) var += (a - mean) * (a - mean);
      const double sd = accs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
      s.add({fmt(ratio), v, fmt(mean), fmt(sd), std::to_string(accs.size())});
      series.x.push_back(ratio);
      series.y.push_back(mean);
    }
    chart.series.push_back(std::move(series));
  }
  s.write(dir / "synthetic_summary.csv");
  report::write_text(dir / "synthetic.svg", report::svg(chart));
}

// ---- probe ----

void ProbeRunConfig::validate() const {
  validate_run(run);
  if (matrix_samples < 2) throw ConfigError("probe: matrix_samples too small");
  if (infomin && infomin_samples < 4 * infomin_critic.batch_size) {
    throw ConfigError("probe: infomin_samples too small for the critic batch");
  }
}

ProbeOutput run_probe(const ProbeRunConfig& config, bool ablate, const std::filesystem::path* snapshot_out) {
  config.validate();
  ProbeOutput out;
  obj::ModelState model;
  if (!config.snapshot.empty()) {
    model = obj::load_model(config.snapshot);
    if (obj::variant_name(model.variant) != config.run.variant) {
      throw ConfigError("probe: snapshot holds " + std::string(obj::variant_name(model.variant)) +
                        ", config asks for " + config.run.variant);
    }
  } else {
    TrainedModel tm = train_on_synthetic(config.run, config.seed);
    model = std::move(tm.model);
    out.log = std::move(tm.log);
  }
  if (snapshot_out != nullptr) obj::save_model(model, *snapshot_out);
  const synth::SynthSource source(config.run.data.with_unique_ratio(config.run.unique_ratio));
  const Rng base(config.seed);
  Rng mrng = base.split("matrix");
  out.matrix = eval::probe_matrix(model, source.sample(config.matrix_samples, mrng));
  if (ablate) {
    Rng arng = base.split("ablation");
    out.ablation = eval::submodel_ablation(model, source, config.run.probe_train, config.run.probe_test,
                                           arng, probe_config(config.run, config.seed));
  }
  if (config.infomin) {
    Rng drng = base.split("infomin_data");
    Rng irng = base.split("infomin");
    out.infomin = eval::infomin_check(model, source.sample(config.infomin_samples, drng),
                                      config.infomin_critic, irng);
    out.has_infomin = true;
  }
  return out;
}

void write_probe(const ProbeOutput& out, const std::filesystem::path& dir) {
  report::Table m({"representation", "latent", "nats", "bits"});
  for (std::size_t r = 0; r < out.matrix.rows.size(); ++r) {
    for (std::size_t c = 0; c < out.matrix.cols.size(); ++c) {
      const double v = out.matrix.nats[r][c];
      m.add({out.matrix.rows[r], out.matrix.cols[c], fmt(v), fmt(v / std::log(2.0))});
    }
  }
  m.write(dir / "probe_matrix.csv");
  report::Heatmap h{"Gaussian MI probe (nats)", out.matrix.rows, out.matrix.cols, out.matrix.nats,
                    "joint-Gaussian log-det estimate, ridge 1e-6"};
  report::write_text(dir / "probe_matrix.svg", report::svg(h));
  if (!out.log.rows.empty()) {
    std::ofstream os(dir / "metrics.csv", std::ios::binary);
    out.log.write_csv(os);
  }
  if (!out.ablation.empty()) {
    report::Table a({"part", "accuracy", "train_accuracy", "n_train", "n_test"});
    report::BarChart b;
    b.title = "Linear probe by representation part";
    b.y_label = "test accuracy";
    for (const auto& p : out.ablation) {
      a.add({p.name, fmt(p.accuracy), fmt(p.train_accuracy), std::to_string(p.n_train), std::to_string(p.n_test)});
      b.labels.push_back(p.name);
      b.values.push_back(p.accuracy);
    }
    a.write(dir / "ablation.csv");
    report::write_text(dir / "ablation.svg", report::svg(b));
  }
  if (out.has_infomin) {
    report::Table t({"conditional", "pairwise", "ratio"});
    t.add({fmt(out.infomin.conditional), fmt(out.infomin.pairwise), fmt(out.infomin.ratio)});
    t.write(dir / "infomin.csv");
  }
}

// ---- configs ----

GaussianBenchConfig parse_gaussian_config(const std::string& text) {
  const json j = parse_text(text);
  GaussianBenchConfig c;
  Reader r(j, "config");
  r.get("dims", c.dims);
  r.get("target_mis", c.target_mis);
  r.get("batch_size", c.batch_size);
  r.get("steps", c.steps);
  r.get("critic_hidden", c.critic_hidden);
  r.get("learning_rate", c.learning_rate);
  r.get("seed", c.seed);
  r.finish();
  c.validate();
  return c;
}

std::string to_json(const GaussianBenchConfig& c) {
  return dump({{"dims", c.dims},
               {"target_mis", c.target_mis},
               {"batch_size", c.batch_size},
               {"steps", c.steps},
               {"critic_hidden", c.critic_hidden},
               {"learning_rate", c.learning_rate},
               {"seed", c.seed}});
}

CmiBenchConfig parse_cmi_config(const std::string& text) {
  const json j = parse_text(text);
  CmiBenchConfig c;
  Reader r(j, "config");
  r.get("dx", c.dx);
  r.get("couplings", c.couplings);
  r.get("n_values", c.n_values);
  r.get("dz_values", c.dz_values);
  r.get("fixed_dz", c.fixed_dz);
  r.get("fixed_n", c.fixed_n);
  r.get("group_size", c.group_size);
  r.get("batch_size", c.batch_size);
  r.get("steps", c.steps);
  r.get("eval_batches", c.eval_batches);
  r.get("critic_hidden", c.critic_hidden);
  r.get("learning_rate", c.learning_rate);
  r.get("seed", c.seed);
  r.finish();
  c.validate();
  return c;
}

std::string to_json(const CmiBenchConfig& c) {
  return dump({{"dx", c.dx},
               {"couplings", c.couplings},
               {"n_values", c.n_values},
               {"dz_values", c.dz_values},
               {"fixed_dz", c.fixed_dz},
               {"fixed_n", c.fixed_n},
               {"group_size", c.group_size},
               {"batch_size", c.batch_size},
               {"steps", c.steps},
               {"eval_batches", c.eval_batches},
               {"critic_hidden", c.critic_hidden},
               {"learning_rate", c.learning_rate},
               {"seed", c.seed}});
}

SyntheticConfig parse_synthetic_config(const std::string& text) {
  const json j = parse_text(text);
  SyntheticConfig c;
  Reader r(j, "config");
  r.get("ratios", c.ratios);
  r.get("variants", c.variants);
  r.get("seed", c.seed);
  r.get("num_seeds", c.num_seeds);
  if (const json* run = r.child("run")) read_run(*run, c.run);
  r.finish();
  c.validate();
  return c;
}

std::string to_json(const SyntheticConfig& c) {
  return dump({{"ratios", c.ratios},
               {"variants", c.variants},
               {"seed", c.seed},
               {"num_seeds", c.num_seeds},
               {"run", run_json(c.run)}});
}

ProbeRunConfig parse_probe_config(const std::string& text) {
  const json j = parse_text(text);
  ProbeRunConfig c;
  Reader r(j, "config");
  r.get("seed", c.seed);
  r.get("snapshot", c.snapshot);
  r.get("save_snapshot", c.save_snapshot);
  r.get("matrix_samples", c.matrix_samples);
  r.get("infomin", c.infomin);
  r.get("infomin_samples", c.infomin_samples);
  if (const json* run = r.child("run")) read_run(*run, c.run);
  if (const json* ic = r.child("infomin_critic")) {
    Reader ri(*ic, "infomin_critic");
    ri.get("steps", c.infomin_critic.steps);
    ri.get("batch_size", c.infomin_critic.batch_size);
    ri.get("eval_batches", c.infomin_critic.eval_batches);
    ri.get("hidden", c.infomin_critic.hidden);
    ri.get("learning_rate", c.infomin_critic.learning_rate);
    ri.finish();
  }
  r.finish();
  c.validate();
  return c;
}

std::string to_json(const ProbeRunConfig& c) {
  return dump({{"seed", c.seed},
               {"snapshot", c.snapshot},
               {"save_snapshot", c.save_snapshot},
               {"matrix_samples", c.matrix_samples},
               {"infomin", c.infomin},
               {"infomin_samples", c.infomin_samples},
               {"infomin_critic",
                {{"steps", c.infomin_critic.steps},
                 {"batch_size", c.infomin_critic.batch_size},
                 {"eval_batches", c.infomin_critic.eval_batches},
                 {"hidden", c.infomin_critic.hidden},
                 {"learning_rate", c.infomin_critic.learning_rate}}},
               {"run", run_json(c.run)}});
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, std::uint64_t seed) {
  std::vector<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") {
      files.push_back(e.path().filename().string());
    }
  }
  std::sort(files.begin(), files.end());
  const json m = {{"command", command},
                  {"code_version", code_version()},
                  {"seed", seed},
                  {"kernel_isa", std::string(kernels::isa_name(kernels::active().isa))},
                  {"files", files}};
  report::write_text(dir / "manifest.json", dump(m));
}

const char* code_version() noexcept { return FCL_VERSION; }

}  // namespace fcl::exp
