#include "fcl/objectives.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace fcl::obj {
namespace {

using est::CondKind;
using json = nlohmann::json;

struct VariantInfo {
  Variant v;
  const char* name;
};

constexpr VariantInfo kVariants[] = {
    {Variant::factorcl_sup, "factorcl_sup"}, {Variant::factorcl_ssl, "factorcl_ssl"},
    {Variant::ourcl_sup, "ourcl_sup"},       {Variant::ourcl_ssl, "ourcl_ssl"},
    {Variant::simclr, "simclr"},             {Variant::supcon, "supcon"},
    {Variant::cross_self, "cross_self"},
};

struct TermPlan {
  const char* name;
  EstimatorKind kind;
  int sign;
  ViewSource view1;
  ViewSource view2;
  CondKind cond;
};

// Factorized term lists. Order matters: assemble_representations indexes them.
//   0 shared lower   1 shared upper (conditional)   2/3 task terms
//   4 unconditional upper   5 conditional lower
const TermPlan kSupTerms[] = {
    {"nce_x1_x2", EstimatorKind::nce, +1, ViewSource::e1, ViewSource::e2, CondKind::none},
    {"club_x1_x2_cond_y", EstimatorKind::nce_club, -1, ViewSource::e1, ViewSource::e2, CondKind::label},
    {"nce_x1_y", EstimatorKind::nce, +1, ViewSource::e1, ViewSource::label, CondKind::none},
    {"nce_x2_y", EstimatorKind::nce, +1, ViewSource::e2, ViewSource::label, CondKind::none},
    {"club_x1_x2", EstimatorKind::nce_club, -1, ViewSource::e1, ViewSource::e2, CondKind::none},
    {"nce_x1_x2_cond_y", EstimatorKind::nce, +1, ViewSource::e1, ViewSource::e2, CondKind::label},
};

const TermPlan kSslTerms[] = {
    {"nce_x1_x2", EstimatorKind::nce, +1, ViewSource::e1, ViewSource::e2, CondKind::none},
    {"club_x1_x2_cond_aug", EstimatorKind::nce_club, -1, ViewSource::e1, ViewSource::e2,
     CondKind::augmented_pair},
    {"nce_x1_x1aug", EstimatorKind::nce, +1, ViewSource::e1, ViewSource::e1_aug, CondKind::none},
    {"nce_x2_x2aug", EstimatorKind::nce, +1, ViewSource::e2, ViewSource::e2_aug, CondKind::none},
    {"club_x1_x2", EstimatorKind::nce_club, -1, ViewSource::e1, ViewSource::e2, CondKind::none},
    {"nce_x1_x2_cond_aug", EstimatorKind::nce, +1, ViewSource::e1, ViewSource::e2,
     CondKind::augmented_pair},
};

const TermPlan kSimclrTerms[] = {
    {"nce_x1_x2", EstimatorKind::nce, +1, ViewSource::e1, ViewSource::e2, CondKind::none},
};

const TermPlan kSupconTerms[] = {
    {"nce_x1_x2_cond_y", EstimatorKind::nce, +1, ViewSource::e1, ViewSource::e2, CondKind::label},
};

const TermPlan kCrossSelfTerms[] = {
    {"nce_x1_x2", EstimatorKind::nce, +1, ViewSource::e1, ViewSource::e2, CondKind::none},
    {"nce_x1_x1aug", EstimatorKind::nce, +1, ViewSource::e1, ViewSource::e1_aug, CondKind::none},
    {"nce_x2_x2aug", EstimatorKind::nce, +1, ViewSource::e2, ViewSource::e2_aug, CondKind::none},
};

std::span<const TermPlan> term_plan(Variant v) {
  switch (v) {
    case Variant::factorcl_sup:
    case Variant::ourcl_sup: return kSupTerms;
    case Variant::factorcl_ssl:
    case Variant::ourcl_ssl: return kSslTerms;
    case Variant::simclr: return kSimclrTerms;
    case Variant::supcon: return kSupconTerms;
    case Variant::cross_self: return kCrossSelfTerms;
  }
  throw ConfigError("unknown variant");
}

std::uint64_t combine_hashes(const std::vector<const MlpNet*>& nets) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const MlpNet* n : nets) {
    h ^= n->parameter_hash();
    h *= 1099511628211ULL;
  }
  return h;
}

// Encoder passes over one batch plus the gradient buffers that feed them.
struct Encoded {
  Activations e1, e2, e1_aug, e2_aug;
  Matrix label;
  bool has_aug = false;
  bool has_label = false;
  Matrix g_e1, g_e2, g_e1_aug, g_e2_aug;

  const Matrix& view(ViewSource v) const {
    switch (v) {
      case ViewSource::e1: return e1.output();
      case ViewSource::e2: return e2.output();
      case ViewSource::e1_aug: return e1_aug.output();
      case ViewSource::e2_aug: return e2_aug.output();
      case ViewSource::label: return label;
    }
    throw UsageError("unknown view");
  }

  void add_grad(ViewSource v, const Matrix& g) {
    Matrix* dst = nullptr;
    switch (v) {
      case ViewSource::e1: dst = &g_e1; break;
      case ViewSource::e2: dst = &g_e2; break;
      case ViewSource::e1_aug: dst = &g_e1_aug; break;
      case ViewSource::e2_aug: dst = &g_e2_aug; break;
      case ViewSource::label: return;
    }
    if (dst->empty()) {
      *dst = g;
    } else {
      add_inplace(*dst, g);
    }
  }
};

bool is_aug_view(ViewSource v) { return v == ViewSource::e1_aug || v == ViewSource::e2_aug; }

bool uses_aug(const ModelState& model) {
  for (const auto& t : model.terms) {
    if (is_aug_view(t.view1) || is_aug_view(t.view2) ||
        t.critics.cond_kind == CondKind::augmented_pair) {
      return true;
    }
  }
  return false;
}

bool uses_label(const ModelState& model) {
  for (const auto& t : model.terms) {
    if (t.view2 == ViewSource::label || t.critics.cond_kind == CondKind::label) return true;
  }
  return false;
}

Encoded encode(const ModelState& model, const TrainBatch& batch) {
  Encoded enc;
  enc.e1 = model.e1.forward(batch.x1);
  enc.e2 = model.e2.forward(batch.x2);
  if (batch.x2.rows() != batch.x1.rows()) throw ShapeError("TrainBatch: x1/x2 row counts differ");
  if (uses_aug(model)) {
    if (batch.x1_aug.empty() || batch.x2_aug.empty()) {
      throw UsageError(std::string(variant_name(model.variant)) + " needs augmented views");
    }
    enc.e1_aug = model.e1.forward(batch.x1_aug);
    enc.e2_aug = model.e2.forward(batch.x2_aug);
    enc.has_aug = true;
  }
  if (uses_label(model)) {
    if (batch.y.size() != batch.size()) {
      throw UsageError(std::string(variant_name(model.variant)) + " needs labels");
    }
    enc.label = est::one_hot(batch.y, model.dims.num_classes);
    enc.has_label = true;
  }
  return enc;
}

// The pieces of one term evaluation that the backward pass needs.
struct TermForward {
  est::ScoreCache cache;
  est::Conditioning cond;
  Activations cond1, cond2;
  Matrix scores;
};

TermForward forward_term(const ObjectiveTerm& t, const Encoded& enc, const TrainBatch& batch,
                         std::size_t num_classes) {
  TermForward f;
  switch (t.critics.cond_kind) {
    case CondKind::none:
      break;
    case CondKind::label:
      f.cond = est::conditional_pack(CondKind::label, batch.y, num_classes, nullptr, nullptr);
      break;
    case CondKind::augmented_pair:
      f.cond1 = t.critics.head1.forward(enc.e1_aug.output());
      f.cond2 = t.critics.head2.forward(enc.e2_aug.output());
      f.cond = est::conditional_pack(CondKind::augmented_pair, {}, 0, &f.cond1.output(),
                                     &f.cond2.output());
      break;
  }
  const bool has_cond = t.critics.cond_kind != CondKind::none;
  f.scores = est::score_matrix(t.critics, enc.view(t.view1), enc.view(t.view2),
                               has_cond ? &f.cond : nullptr, &f.cache);
  return f;
}

void scale(Matrix& m, double s) {
  for (double& v : m.values()) v *= s;
}

double sum_sq_grads(const std::vector<MlpNet*>& nets) {
  double s = 0.0;
  for (MlpNet* n : nets) {
    const double g = n->grad_norm();
    s += g * g;
  }
  return std::sqrt(s);
}

// Evaluates every term; when `accumulate` is set, adds d(−L)/dparam into the
// nets (club critics only if !freeze_phi).
double run_objective(ModelState& model, const TrainBatch& batch, bool accumulate, bool freeze_phi,
                     StepReport* report) {
  Encoded enc = encode(model, batch);
  double objective = 0.0;
  for (ObjectiveTerm& t : model.terms) {
    TermForward f = forward_term(t, enc, batch, model.dims.num_classes);
    const std::optional<est::Mask> mask = f.cond.mask();
    const est::Mask* m = mask ? &*mask : nullptr;
    est::Estimate e = t.kind == EstimatorKind::nce ? est::infonce_estimate(f.scores, m)
                                                   : est::nce_club_estimate(f.scores, m);
    objective += t.sign * t.weight * e.value;
    if (report != nullptr) report->terms.push_back({t.name, e.value});
    if (!accumulate) continue;
    scale(e.grad, -t.sign * t.weight);
    est::BackwardScope scope;
    scope.critic = !(t.kind == EstimatorKind::nce_club && freeze_phi);
    const est::ScoreGrads g = est::score_backward(t.critics, f.cache, e.grad, scope);
    enc.add_grad(t.view1, g.z1);
    enc.add_grad(t.view2, g.z2);
    if (t.critics.cond_kind == CondKind::augmented_pair) {
      enc.add_grad(ViewSource::e1_aug, t.critics.head1.backward(f.cond1, g.cond_left));
      enc.add_grad(ViewSource::e2_aug, t.critics.head2.backward(f.cond2, g.cond_right));
    }
  }
  if (accumulate) {
    if (!enc.g_e1.empty()) (void)model.e1.backward(enc.e1, enc.g_e1);
    if (!enc.g_e2.empty()) (void)model.e2.backward(enc.e2, enc.g_e2);
    if (!enc.g_e1_aug.empty()) (void)model.e1.backward(enc.e1_aug, enc.g_e1_aug);
    if (!enc.g_e2_aug.empty()) (void)model.e2.backward(enc.e2_aug, enc.g_e2_aug);
  }
  if (report != nullptr) report->total = objective;
  return -objective;
}

void zero_all(ModelState& model) {
  for (MlpNet* n : model.theta()) n->zero_grad();
  for (MlpNet* n : model.phi()) n->zero_grad();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

Variant parse_variant(std::string_view name) {
  for (const auto& v : kVariants) {
    if (name == v.name) return v.v;
  }
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected factorcl_sup, factorcl_ssl, ourcl_sup, ourcl_ssl, simclr, "
                    "supcon or cross_self)");
}

const char* variant_name(Variant v) noexcept {
  for (const auto& info : kVariants) {
    if (info.v == v) return info.name;
  }
  return "unknown";
}

std::vector<Variant> all_variants() {
  std::vector<Variant> out;
  for (const auto& v : kVariants) out.push_back(v.v);
  return out;
}

bool is_factorized(Variant v) noexcept {
  return v == Variant::factorcl_sup || v == Variant::factorcl_ssl;
}

bool needs_labels(Variant v) noexcept {
  return v == Variant::factorcl_sup || v == Variant::ourcl_sup || v == Variant::supcon;
}

bool needs_augmentations(Variant v) noexcept {
  return v == Variant::factorcl_ssl || v == Variant::ourcl_ssl || v == Variant::cross_self;
}

const char* view_name(ViewSource v) noexcept {
  switch (v) {
    case ViewSource::e1: return "e1";
    case ViewSource::e2: return "e2";
    case ViewSource::e1_aug: return "e1_aug";
    case ViewSource::e2_aug: return "e2_aug";
    case ViewSource::label: return "label";
  }
  return "unknown";
}

std::vector<MlpNet*> ModelState::theta() {
  std::vector<MlpNet*> out = {&e1, &e2};
  for (auto& t : terms) {
    if (!t.critics.head1.empty()) out.push_back(&t.critics.head1);
    if (!t.critics.head2.empty()) out.push_back(&t.critics.head2);
    if (t.kind == EstimatorKind::nce) out.push_back(&t.critics.critic);
  }
  return out;
}

std::vector<MlpNet*> ModelState::phi() {
  std::vector<MlpNet*> out;
  for (auto& t : terms) {
    if (t.kind == EstimatorKind::nce_club) out.push_back(&t.critics.critic);
  }
  return out;
}

std::vector<const MlpNet*> ModelState::theta() const {
  auto v = const_cast<ModelState*>(this)->theta();
  return {v.begin(), v.end()};
}

std::vector<const MlpNet*> ModelState::phi() const {
  auto v = const_cast<ModelState*>(this)->phi();
  return {v.begin(), v.end()};
}

std::uint64_t ModelState::theta_hash() const { return combine_hashes(theta()); }
std::uint64_t ModelState::phi_hash() const { return combine_hashes(phi()); }

bool ModelState::has_club_terms() const noexcept {
  for (const auto& t : terms) {
    if (t.kind == EstimatorKind::nce_club) return true;
  }
  return false;
}

const ObjectiveTerm& ModelState::term(std::string_view name) const {
  for (const auto& t : terms) {
    if (t.name == name) return t;
  }
  throw UsageError("model has no term '" + std::string(name) + "'");
}

ModelState build_model(Variant variant, const ModelDims& dims, Rng& rng) {
  ModelState m;
  m.variant = variant;
  m.dims = dims;
  if (dims.num_classes < 2) throw ConfigError("build_model: num_classes must be >= 2");
  Rng r1 = rng.split("e1");
  Rng r2 = rng.split("e2");
  m.e1 = MlpNet({dims.x1_dim, dims.encoder_hidden, dims.embed_dim}, r1);
  m.e2 = MlpNet({dims.x2_dim, dims.encoder_hidden, dims.embed_dim}, r2);
  const std::vector<std::size_t> head = {dims.embed_dim, dims.head_hidden, dims.head_out};
  for (const TermPlan& p : term_plan(variant)) {
    est::CriticSpec spec;
    spec.head1_dims = head;
    if (p.view2 == ViewSource::label) {
      spec.identity_dim2 = dims.num_classes;
    } else {
      spec.head2_dims = head;
    }
    spec.critic_hidden = dims.critic_hidden;
    spec.cond_kind = p.cond;
    if (p.cond == CondKind::label) spec.cond_dims1 = spec.cond_dims2 = dims.num_classes;
    if (p.cond == CondKind::augmented_pair) spec.cond_dims1 = spec.cond_dims2 = dims.head_out;
    Rng tr = rng.split(p.name);
    ObjectiveTerm t;
    t.name = p.name;
    t.kind = p.kind;
    t.sign = p.sign;
    t.view1 = p.view1;
    t.view2 = p.view2;
    t.critics = est::make_critic_set(spec, tr);
    m.terms.push_back(std::move(t));
  }
  return m;
}

AugmentationPlan augmentation_plan(Variant v) noexcept {
  AugmentationPlan p;
  p.enabled = needs_augmentations(v);
  if (v == Variant::cross_self) p.second = synth::AugMode::unimodal;
  return p;
}

TrainBatch SynthBatchSource::from_synth(const synth::SynthBatch& b, Rng& rng) const {
  TrainBatch t;
  t.x1 = b.x1;
  t.x2 = b.x2;
  t.y = b.y;
  if (plan_.enabled) {
    Rng r1 = rng.split("aug1");
    Rng r2 = rng.split("aug2");
    t.x1_aug = synth::augment(source_.config(), source_.transforms(), b, synth::Modality::first,
                              plan_.first, r1)
                   .x;
    t.x2_aug = synth::augment(source_.config(), source_.transforms(), b, synth::Modality::second,
                              plan_.second, r2)
                   .x;
  }
  return t;
}

TrainBatch SynthBatchSource::next(std::size_t n, Rng& rng) const {
  Rng batch_rng = rng.split(rng.next());
  const synth::SynthBatch b = source_.sample(n, batch_rng);
  return from_synth(b, batch_rng);
}

StepReport outer_step(ModelState& model, const TrainBatch& batch, const AdamHyper& hyper) {
  StepReport r;
  r.phase = "outer";
  zero_all(model);
  try {
    (void)run_objective(model, batch, true, true, &r);
  } catch (const est::EstimationError& e) {
    zero_all(model);
    r.skipped = true;
    r.note = e.what();
    return r;
  }
  const std::vector<MlpNet*> theta = model.theta();
  r.grad_norm = sum_sq_grads(theta);
  for (MlpNet* n : theta) adam_step(*n, hyper);
  for (MlpNet* n : model.phi()) n->zero_grad();
  model.outer_steps += 1;
  return r;
}

StepReport inner_step(ModelState& model, const TrainBatch& batch, const AdamHyper& hyper) {
  StepReport r;
  r.phase = "inner";
  if (!model.has_club_terms()) {
    r.skipped = true;
    r.note = "no club terms";
    return r;
  }
  zero_all(model);
  const Encoded enc = encode(model, batch);
  try {
    for (ObjectiveTerm& t : model.terms) {
      if (t.kind != EstimatorKind::nce_club) continue;
      TermForward f = forward_term(t, enc, batch, model.dims.num_classes);
      const std::optional<est::Mask> mask = f.cond.mask();
      est::Estimate e = est::infonce_estimate(f.scores, mask ? &*mask : nullptr);
      r.terms.push_back({t.name, e.value});
      r.total += e.value;
      scale(e.grad, -1.0);
      (void)est::score_backward(t.critics, f.cache, e.grad, est::BackwardScope{true, false});
    }
  } catch (const est::EstimationError& e) {
    zero_all(model);
    r.skipped = true;
    r.note = e.what();
    return r;
  }
  const std::vector<MlpNet*> phi = model.phi();
  r.grad_norm = sum_sq_grads(phi);
  for (MlpNet* n : phi) adam_step(*n, hyper);
  model.inner_steps += 1;
  return r;
}

StepReport evaluate_objective(const ModelState& model, const TrainBatch& batch) {
  StepReport r;
  r.phase = "eval";
  // accumulate=false never writes to the model.
  (void)run_objective(const_cast<ModelState&>(model), batch, false, true, &r);
  return r;
}

double accumulate_objective_gradients(ModelState& model, const TrainBatch& batch, bool accumulate,
                                      bool freeze_phi) {
  return run_objective(model, batch, accumulate, freeze_phi, nullptr);
}

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("TrainConfig: batch_size must be >= 2");
  if (inner_k < 1) throw ConfigError("TrainConfig: inner_k must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("TrainConfig: learning rate must be positive");
}

void MetricsLog::write_csv(std::ostream& os) const {
  os << "step,phase,term_name,estimate,total_loss,grad_norm\n";
  for (const auto& r : rows) {
    os << r.step << ',' << r.phase << ',' << r.term << ',' << fmt(r.estimate) << ','
       << fmt(r.total_loss) << ',' << fmt(r.grad_norm) << '\n';
  }
}

MetricsLog train(ModelState& model, const BatchSource& source, const TrainConfig& config, Rng& rng) {
  config.validate();
  MetricsLog log;
  auto record = [&](std::uint64_t step, const StepReport& r) {
    if (r.skipped) return;
    for (const auto& t : r.terms) {
      log.rows.push_back({step, r.phase, t.name, t.estimate, -r.total, r.grad_norm});
    }
  };
  for (std::size_t step = 0; step < config.outer_steps; ++step) {
    const TrainBatch batch = source.next(config.batch_size, rng);
    const StepReport r = outer_step(model, batch, config.adam);
    if (r.skipped) ++log.skipped_steps;
    if (!std::isfinite(r.total)) {
      std::ostringstream os;
      os << "train: non-finite objective at step " << step;
      for (const auto& t : r.terms) os << ' ' << t.name << '=' << t.estimate;
      throw NumericError(os.str());
    }
    record(step, r);
    if (!model.has_club_terms()) continue;
    for (std::size_t k = 0; k < config.inner_k; ++k) {
      const TrainBatch fresh = source.next(config.batch_size, rng);
      const StepReport ir = inner_step(model, fresh, config.adam);
      if (!std::isfinite(ir.total)) throw NumericError("train: non-finite inner objective");
      record(step, ir);
    }
  }
  return log;
}

Matrix Representations::full() const {
  if (factorized) {
    const Matrix* parts[] = {&zs1, &zu1, &zs2, &zu2};
    return hconcat(parts);
  }
  return hconcat(z1, z2);
}

const Matrix& Representations::part(std::string_view name) const {
  if (name == "z1") return z1;
  if (name == "z2") return z2;
  const Matrix* m = name == "zs1" ? &zs1 : name == "zu1" ? &zu1 : name == "zs2" ? &zs2
                  : name == "zu2" ? &zu2 : nullptr;
  if (m == nullptr) throw UsageError("unknown representation '" + std::string(name) + "'");
  if (!factorized) {
    throw UsageError("representation '" + std::string(name) + "' needs a factorized model");
  }
  return *m;
}

Representations assemble_representations(const ModelState& model, const Matrix& x1,
                                          const Matrix& x2) {
  Representations r;
  r.z1 = model.e1.predict(x1);
  r.z2 = model.e2.predict(x2);
  if (!is_factorized(model.variant)) return r;
  r.factorized = true;
  const auto& t = model.terms;
  auto h1 = [&](std::size_t i, const Matrix& z) { return t[i].critics.head1.predict(z); };
  auto h2 = [&](std::size_t i, const Matrix& z) { return t[i].critics.head2.predict(z); };
  {
    const Matrix a = h1(0, r.z1), b = h1(1, r.z1);
    r.zs1 = hconcat(a, b);
  }
  {
    const Matrix a = h1(2, r.z1), b = h1(4, r.z1), c = h1(5, r.z1);
    const Matrix* parts[] = {&a, &b, &c};
    r.zu1 = hconcat(parts);
  }
  {
    const Matrix a = h2(0, r.z2), b = h2(1, r.z2);
    r.zs2 = hconcat(a, b);
  }
  {
    const Matrix a = h1(3, r.z2), b = h2(4, r.z2), c = h2(5, r.z2);
    const Matrix* parts[] = {&a, &b, &c};
    r.zu2 = hconcat(parts);
  }
  return r;
}

namespace {

void write_net(const MlpNet& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  net.write(out);
}

void read_net(MlpNet& net, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path.string() + "'");
  MlpNet loaded = MlpNet::read(in);
  if (loaded.layer_dims() != net.layer_dims()) {
    throw UsageError("snapshot '" + path.string() + "' has unexpected layer dims");
  }
  net = std::move(loaded);
}

json dims_json(const ModelDims& d) {
  return {{"x1_dim", d.x1_dim},           {"x2_dim", d.x2_dim},     {"encoder_hidden", d.encoder_hidden},
          {"embed_dim", d.embed_dim},     {"head_hidden", d.head_hidden}, {"head_out", d.head_out},
          {"critic_hidden", d.critic_hidden}, {"num_classes", d.num_classes}};
}

}  // namespace

void save_model(const ModelState& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format"] = "fcl-model 1";
  manifest["variant"] = variant_name(model.variant);
  manifest["dims"] = dims_json(model.dims);
  manifest["outer_steps"] = model.outer_steps;
  manifest["inner_steps"] = model.inner_steps;
  write_net(model.e1, dir / "e1.mlp");
  write_net(model.e2, dir / "e2.mlp");
  json terms = json::array();
  for (const auto& t : model.terms) {
    json jt = {{"name", t.name},
               {"kind", t.kind == EstimatorKind::nce ? "nce" : "nce_club"},
               {"sign", t.sign},
               {"weight", t.weight},
               {"view1", view_name(t.view1)},
               {"view2", view_name(t.view2)},
               {"cond_kind", est::cond_kind_name(t.critics.cond_kind)},
               {"param_group", t.kind == EstimatorKind::nce ? "theta" : "phi"}};
    if (!t.critics.head1.empty()) {
      write_net(t.critics.head1, dir / (t.name + ".head1.mlp"));
      jt["head1"] = t.name + ".head1.mlp";
    }
    if (!t.critics.head2.empty()) {
      write_net(t.critics.head2, dir / (t.name + ".head2.mlp"));
      jt["head2"] = t.name + ".head2.mlp";
    }
    write_net(t.critics.critic, dir / (t.name + ".critic.mlp"));
    jt["critic"] = t.name + ".critic.mlp";
    terms.push_back(jt);
  }
  manifest["terms"] = terms;
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

ModelState load_model(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw UsageError("no manifest.json in '" + dir.string() + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw UsageError(std::string("model manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "fcl-model 1") throw UsageError("model manifest: bad format tag");
  ModelDims d;
  const json& jd = manifest.at("dims");
  d.x1_dim = jd.at("x1_dim");
  d.x2_dim = jd.at("x2_dim");
  d.encoder_hidden = jd.at("encoder_hidden");
  d.embed_dim = jd.at("embed_dim");
  d.head_hidden = jd.at("head_hidden");
  d.head_out = jd.at("head_out");
  d.critic_hidden = jd.at("critic_hidden");
  d.num_classes = jd.at("num_classes");
  Rng rng(0);
  ModelState m = build_model(parse_variant(manifest.at("variant").get<std::string>()), d, rng);
  m.outer_steps = manifest.value("outer_steps", 0ULL);
  m.inner_steps = manifest.value("inner_steps", 0ULL);
  read_net(m.e1, dir / "e1.mlp");
  read_net(m.e2, dir / "e2.mlp");
  const json& terms = manifest.at("terms");
  if (terms.size() != m.terms.size()) throw UsageError("model manifest: term count mismatch");
  for (std::size_t i = 0; i < m.terms.size(); ++i) {
    ObjectiveTerm& t = m.terms[i];
    const json& jt = terms[i];
    if (jt.at("name") != t.name) throw UsageError("model manifest: term order mismatch");
    t.weight = jt.value("weight", 1.0);
    if (!t.critics.head1.empty()) read_net(t.critics.head1, dir / jt.at("head1").get<std::string>());
    if (!t.critics.head2.empty()) read_net(t.critics.head2, dir / jt.at("head2").get<std::string>());
    read_net(t.critics.critic, dir / jt.at("critic").get<std::string>());
  }
  return m;
}

}  // namespace fcl::obj
