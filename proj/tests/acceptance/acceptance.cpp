// Acceptance suite: one PASS/FAIL line per criterion. `--only N` runs a
// single criterion; `--cli PATH` points criterion 9 at the command-line tool.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fcl/estimators.hpp"
#include "fcl/eval.hpp"
#include "fcl/exactinfo.hpp"
#include "fcl/experiments.hpp"
#include "fcl/objectives.hpp"

namespace fs = std::filesystem;
using namespace fcl;

namespace {

// Tolerances, pinned.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradFloor = 1e-6;  // rounding floor for exactly-zero gradients
constexpr double kResidualTolerance = 1e-10;
constexpr double kExactTolerance = 1e-12;
constexpr double kLn2 = 0.69314718055994530942;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string f(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---- 1: gradient suite ----

Outcome gradient_suite() {
  Outcome o;
  const std::size_t n = 8;
  struct Case {
    const char* name;
    est::CondKind kind;
    bool club;
  };
  const Case cases[] = {{"InfoNCE", est::CondKind::none, false},
                        {"NCE-CLUB", est::CondKind::none, true},
                        {"conditional InfoNCE (label)", est::CondKind::label, false},
                        {"conditional NCE-CLUB (label)", est::CondKind::label, true},
                        {"conditional InfoNCE (augmented pair)", est::CondKind::augmented_pair, false},
                        {"conditional NCE-CLUB (augmented pair)", est::CondKind::augmented_pair, true}};
  Rng rng(101);
  const std::vector<int> y = {0, 1, 0, 1, 1, 0, 0, 1};
  for (const Case& c : cases) {
    const std::size_t cdim = c.kind == est::CondKind::none ? 0 : (c.kind == est::CondKind::label ? 2 : 6);
    est::CriticSpec spec;
    spec.head1_dims = {12, 16, 6};
    spec.head2_dims = {10, 16, 6};
    spec.critic_hidden = 16;
    spec.cond_kind = c.kind;
    spec.cond_dims1 = cdim;
    spec.cond_dims2 = cdim;
    est::CriticSet cs = est::make_critic_set(spec, rng);
    const Matrix z1 = rng.normal_matrix(n, 12);
    const Matrix z2 = rng.normal_matrix(n, 10);
    const Matrix a1 = rng.normal_matrix(n, 6);
    const Matrix a2 = rng.normal_matrix(n, 6);
    est::Conditioning cond;
    if (c.kind == est::CondKind::label) cond = est::conditional_pack(c.kind, y, 2, nullptr, nullptr);
    if (c.kind == est::CondKind::augmented_pair) cond = est::conditional_pack(c.kind, {}, 0, &a1, &a2);
    const std::optional<est::Mask> mask = cond.mask();
    auto loss = [&](bool accumulate) {
      est::ScoreCache cache;
      const Matrix s = est::score_matrix(cs, z1, z2, cdim > 0 ? &cond : nullptr, &cache);
      const est::Mask* m = mask ? &*mask : nullptr;
      const est::Estimate e = c.club ? est::nce_club_estimate(s, m) : est::infonce_estimate(s, m);
      if (accumulate) (void)est::score_backward(cs, cache, e.grad);
      return e.value;
    };
    MlpNet* nets[] = {&cs.head1, &cs.head2, &cs.critic};
    const GradCheckResult r = finite_diff_check(loss, nets, kGradTolerance, 1e-5, kGradFloor);
    o.check(r.passed, std::string(c.name) + ": max rel err " + g(r.max_relative_error) + " over " +
                          std::to_string(r.parameters_checked) + " params");
  }
  obj::ModelDims d;
  d.x1_dim = 12;
  d.x2_dim = 10;
  d.encoder_hidden = 16;
  d.embed_dim = 8;
  d.head_hidden = 8;
  d.head_out = 6;
  d.critic_hidden = 16;
  obj::ModelState m = obj::build_model(obj::Variant::factorcl_sup, d, rng);
  obj::TrainBatch b;
  b.x1 = rng.normal_matrix(n, 12);
  b.x2 = rng.normal_matrix(n, 10);
  b.y = y;
  for (const bool freeze : {true, false}) {
    auto loss = [&](bool accumulate) { return obj::accumulate_objective_gradients(m, b, accumulate, freeze); };
    std::vector<MlpNet*> nets = m.theta();
    if (!freeze) {
      for (MlpNet* p : m.phi()) nets.push_back(p);
    }
    const GradCheckResult r = finite_diff_check(loss, nets, kGradTolerance, 1e-5, kGradFloor);
    o.check(r.passed, std::string("6-term factorcl_sup loss (") + (freeze ? "theta" : "theta+phi") +
                          "): max rel err " + g(r.max_relative_error) + " over " +
                          std::to_string(r.parameters_checked) + " params");
  }
  return o;
}

// ---- 2: exact oracle ----

Outcome exact_oracle() {
  using namespace exactinfo;
  Outcome o;
  Rng rng(202);
  double worst_residual = 0.0;
  double worst_gap = 1.0;  // min over joints of (bound − exact Bayes error)
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n1 = 2 + rng.index(4), n2 = 2 + rng.index(4), ny = 2 + rng.index(3);
    const DiscreteJoint j = random_joint(n1, n2, ny, 0.3 + rng.uniform(0.0, 2.0), rng);
    const Decomposition dd = decompose(j);
    worst_residual = std::max(worst_residual, std::abs(dd.residual));
    worst_gap = std::min(worst_gap, bayes_error_bound(dd.total, dd.h_y) - bayes_error_exact(j));
  }
  o.check(worst_residual < kResidualTolerance, "identity residual on 1000 random joints: max " + g(worst_residual));
  o.check(worst_gap >= -1e-12, "full-information bound ≥ exact Bayes error on all joints: min gap " + g(worst_gap));
  const Decomposition x = decompose(xor_joint());
  const bool xor_ok = std::abs(x.shared + kLn2) < kExactTolerance && std::abs(x.unique1 - kLn2) < kExactTolerance &&
                      std::abs(x.unique2 - kLn2) < kExactTolerance && std::abs(x.total - kLn2) < kExactTolerance;
  o.check(xor_ok, "XOR: S " + f(x.shared, 12) + ", U1 " + f(x.unique1, 12) + ", U2 " + f(x.unique2, 12) +
                      ", total " + f(x.total, 12));
  const Decomposition c = decompose(copy_joint());
  const bool copy_ok = std::abs(c.shared - kLn2) < kExactTolerance && std::abs(c.unique1) < kExactTolerance &&
                       std::abs(c.unique2) < kExactTolerance && std::abs(c.total - kLn2) < kExactTolerance;
  o.check(copy_ok, "copy: S " + f(c.shared, 12) + ", U1 " + f(c.unique1, 12) + ", U2 " + f(c.unique2, 12));
  return o;
}

// ---- 3: MI sandwich ----

Outcome mi_sandwich() {
  Outcome o;
  exp::GaussianBenchConfig cfg;
  cfg.dims = {20};
  const double cap = std::log(static_cast<double>(cfg.batch_size));
  for (const double mi : {2.0, 4.0, 6.0, 8.0, 10.0}) {
    const exp::GaussianCurve c = exp::run_gaussian_curve(20, mi, cfg);
    const double lo = c.tail_nce(500), hi = c.tail_club(500);
    const std::string tag = "MI " + f(mi, 0) + ": InfoNCE " + f(lo) + ", NCE-CLUB " + f(hi);
    if (mi <= 4.0) {
      o.check(lo >= mi - 1.0 && lo <= mi + 0.3, tag + "; InfoNCE in [" + f(mi - 1.0, 1) + ", " + f(mi + 0.3, 1) + "]");
      o.check(hi >= mi - 0.5 && hi <= mi + 2.0, tag + "; NCE-CLUB in [" + f(mi - 0.5, 1) + ", " + f(mi + 2.0, 1) + "]");
    } else {
      o.check(lo <= cap + 1e-9, tag + "; InfoNCE ≤ ln 64");
      o.check(hi >= lo, tag + "; NCE-CLUB ≥ InfoNCE");
    }
  }
  return o;
}

// ---- 4: CMI sandwich ----

Outcome cmi_sandwich() {
  Outcome o;
  exp::CmiBenchConfig cfg;
  for (const double c : {0.0, 1.0}) {
    const exp::CmiRow r = exp::run_cmi_cell("n", 10, 20000, c, cfg);
    const std::string tag = "c=" + f(c, 1) + ": true " + f(r.true_cmi) + ", cond InfoNCE " + f(r.cond_nce) +
                            ", cond NCE-CLUB " + f(r.cond_club);
    o.check(r.cond_nce <= r.true_cmi + 0.3, tag + "; lower ≤ true + 0.3");
    o.check(r.cond_club >= r.true_cmi - 0.5, tag + "; upper ≥ true − 0.5");
    if (c == 0.0) o.check(std::abs(r.true_cmi) < 1e-12 && std::abs(r.cond_nce) <= 0.1, tag + "; null |InfoNCE| ≤ 0.1");
  }
  return o;
}

// ---- 5: ratio sweep ----

Outcome ratio_sweep() {
  Outcome o;
  exp::SyntheticConfig cfg;
  cfg.ratios = {0.0, 0.5, 1.0};
  cfg.variants = {"simclr", "supcon", "cross_self", "factorcl_sup"};
  cfg.num_seeds = 3;
  std::map<double, std::map<std::string, double>> mean;
  for (double r : cfg.ratios) {
    for (const auto& v : cfg.variants) {
      double sum = 0.0;
      std::string accs;
      for (std::size_t k = 0; k < cfg.num_seeds; ++k) {
        const exp::SyntheticRow row = exp::run_synthetic_cell(r, v, cfg.seed + k, cfg);
        sum += row.accuracy;
        accs += (k ? " " : "") + f(row.accuracy, 3);
      }
      mean[r][v] = sum / static_cast<double>(cfg.num_seeds);
      std::printf("  ratio %.1f %-13s mean %.4f  (%s)\n", r, v.c_str(), mean[r][v], accs.c_str());
      std::fflush(stdout);
    }
  }
  const double s1 = mean[1.0]["simclr"], f1 = mean[1.0]["factorcl_sup"];
  o.check(s1 <= 0.60, "(a) ratio 1.0: simclr " + f(s1) + " ≤ 0.60");
  o.check(f1 >= s1 + 0.10, "(a) ratio 1.0: factorcl_sup " + f(f1) + " ≥ simclr + 0.10");
  const double s0 = mean[0.0]["simclr"], f0 = mean[0.0]["factorcl_sup"];
  o.check(std::abs(f0 - s0) <= 0.02, "(b) ratio 0.0: |factorcl_sup − simclr| = " + f(std::abs(f0 - s0)) + " ≤ 0.02");
  for (double r : cfg.ratios) {
    double best = 0.0;
    std::string who;
    for (const auto& [v, a] : mean[r]) {
      if (a > best) best = a, who = v;
    }
    o.check(mean[r]["factorcl_sup"] >= best - 0.02, "(c) ratio " + f(r, 1) + ": factorcl_sup " +
                                                        f(mean[r]["factorcl_sup"]) + " within 0.02 of best (" + who +
                                                        " " + f(best) + ")");
  }
  return o;
}

// ---- 6: probe-matrix orderings ----

Outcome probe_orderings() {
  Outcome o;
  exp::ProbeRunConfig cfg;
  cfg.run.variant = "factorcl_sup";
  cfg.run.unique_ratio = 1.0;
  const exp::ProbeOutput out = exp::run_probe(cfg, false);
  const auto& m = out.matrix;
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    std::printf("  %-5s w1 %.3f  w2 %.3f  ws %.3f\n", m.rows[r].c_str(), m.nats[r][0], m.nats[r][1], m.nats[r][2]);
  }
  o.check(m.at("Z_U1", "w1") > m.at("Z_U1", "w2") + 2.0,
          "(Z_U1,w1) " + f(m.at("Z_U1", "w1"), 3) + " > (Z_U1,w2) " + f(m.at("Z_U1", "w2"), 3) + " + 2");
  o.check(m.at("Z_U2", "w2") > m.at("Z_U2", "w1") + 2.0,
          "(Z_U2,w2) " + f(m.at("Z_U2", "w2"), 3) + " > (Z_U2,w1) " + f(m.at("Z_U2", "w1"), 3) + " + 2");
  o.check(m.at("Z_S1", "ws") > m.at("Z_S1", "w1"),
          "(Z_S1,ws) " + f(m.at("Z_S1", "ws"), 3) + " > (Z_S1,w1) " + f(m.at("Z_S1", "w1"), 3));
  return o;
}

// ---- 7: InfoMin ----

Outcome infomin() {
  Outcome o;
  exp::ProbeRunConfig cfg;
  cfg.run.variant = "simclr";
  cfg.run.unique_ratio = 0.0;
  cfg.infomin = true;
  const exp::ProbeOutput out = exp::run_probe(cfg, false);
  o.check(out.infomin.ratio < 0.2, "I(Z1;Y|X2) " + f(out.infomin.conditional) + " / I(X1;X2) " +
                                       f(out.infomin.pairwise) + " = " + f(out.infomin.ratio) + " < 0.2");
  return o;
}

// ---- 8: two-timescale discipline ----

Outcome discipline() {
  Outcome o;
  synth::SynthConfig sc;
  const synth::SynthSource source(sc.with_unique_ratio(0.5));
  obj::ModelDims d;
  d.encoder_hidden = 32;
  d.embed_dim = 16;
  d.head_hidden = 16;
  d.head_out = 16;
  d.critic_hidden = 32;
  Rng rng(808);
  obj::ModelState m = obj::build_model(obj::Variant::factorcl_sup, d, rng);
  const obj::SynthBatchSource batches(source, obj::augmentation_plan(m.variant));
  AdamHyper hyper;
  hyper.learning_rate = 1e-3;
  std::size_t outer_phi_changes = 0, inner_theta_changes = 0, outer_theta_moves = 0, inner_phi_moves = 0;
  for (int step = 0; step < 100; ++step) {
    const std::uint64_t t0 = m.theta_hash(), p0 = m.phi_hash();
    (void)obj::outer_step(m, batches.next(64, rng), hyper);
    const std::uint64_t t1 = m.theta_hash(), p1 = m.phi_hash();
    outer_phi_changes += p1 != p0;
    outer_theta_moves += t1 != t0;
    (void)obj::inner_step(m, batches.next(64, rng), hyper);
    inner_theta_changes += m.theta_hash() != t1;
    inner_phi_moves += m.phi_hash() != p1;
  }
  o.check(outer_phi_changes == 0, "outer steps that changed phi: " + std::to_string(outer_phi_changes) + " / 100");
  o.check(inner_theta_changes == 0, "inner steps that changed theta: " + std::to_string(inner_theta_changes) + " / 100");
  o.check(outer_theta_moves == 100 && inner_phi_moves == 100,
          "every outer step moved theta (" + std::to_string(outer_theta_moves) + ") and every inner step moved phi (" +
              std::to_string(inner_phi_moves) + ")");
  return o;
}

// ---- 9: determinism of the command-line tool ----

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> csvs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") out[e.path().filename().string()] = slurp(e.path());
  }
  return out;
}

Outcome determinism(const std::string& cli) {
  Outcome o;
  if (cli.empty() || !fs::exists(cli)) {
    o.check(false, "command-line tool not found (pass --cli PATH)");
    return o;
  }
  const fs::path root = fs::temp_directory_path() / "fcl_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string small_run =
      R"("run": {"outer_steps": 30, "probe_train": 400, "probe_test": 400, "probe_epochs": 50,
                 "dims": {"encoder_hidden": 32, "embed_dim": 16, "head_hidden": 16, "head_out": 16, "critic_hidden": 32}})";
  struct Cmd {
    std::string name;
    std::string config;
    std::string extra;
  };
  const std::vector<Cmd> cmds = {
      {"gaussian-bench", R"({"dims": [20], "target_mis": [2, 8], "steps": 200})", ""},
      {"cmi-bench", R"({"couplings": [0.0, 1.0], "n_values": [2000], "dz_values": [5], "fixed_n": 2000, "steps": 100, "eval_batches": 5})", ""},
      {"synthetic", R"({"ratios": [0.0, 1.0], "variants": ["simclr", "factorcl_sup"], "num_seeds": 2, )" + small_run + "}", ""},
      {"probe", R"({"matrix_samples": 500, "infomin": true, "infomin_samples": 2000,
                   "infomin_critic": {"steps": 30, "batch_size": 32, "eval_batches": 5, "hidden": 32}, )" + small_run + "}",
       "--variant simclr"},
      {"ablate", R"({"matrix_samples": 500, )" + small_run + "}", "--variant factorcl_sup"},
  };
  for (const Cmd& c : cmds) {
    const fs::path cfg = root / (c.name + ".json");
    std::ofstream(cfg) << c.config;
    const fs::path a = root / (c.name + "_a"), b = root / (c.name + "_b");
    const std::string first = cli + " " + c.name + " --config " + cfg.string() + " --seed 7 " + c.extra +
                              " --out " + a.string() + " > " + (root / (c.name + "_a.log")).string();
    // The rerun uses only the archived config (its seed and variant are baked in).
    const std::string second = cli + " " + c.name + " --config " + (a / "config.json").string() + " --out " +
                               b.string() + " > " + (root / (c.name + "_b.log")).string();
    if (std::system(first.c_str()) != 0 || std::system(second.c_str()) != 0) {
      o.check(false, c.name + ": command failed");
      continue;
    }
    const auto ca = csvs(a), cb = csvs(b);
    bool same = !ca.empty() && ca == cb;
    o.check(same, c.name + ": " + std::to_string(ca.size()) + " CSV files byte-identical on rerun");
  }
  {
    const fs::path table = root / "xor.txt";
    std::ofstream(table) << "2 2 2\n0.25\n0\n0\n0.25\n0\n0.25\n0.25\n0\n";
    const std::string run = cli + " exact " + table.string() + " > ";
    const bool ok = std::system((run + (root / "exact_a.txt").string()).c_str()) == 0 &&
                    std::system((run + (root / "exact_b.txt").string()).c_str()) == 0 &&
                    slurp(root / "exact_a.txt") == slurp(root / "exact_b.txt");
    o.check(ok, "exact: report byte-identical on rerun");
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  std::string cli;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    else if (a == "--cli" && i + 1 < argc) cli = argv[++i];
    else {
      std::fprintf(stderr, "usage: acceptance [--only N] [--cli PATH]\n");
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"exact-oracle suite", exact_oracle},
      {"MI sandwich on correlated Gaussians", mi_sandwich},
      {"conditional MI sandwich", cmi_sandwich},
      {"probe accuracy vs unique ratio", ratio_sweep},
      {"probe-matrix orderings", probe_orderings},
      {"InfoMin check", infomin},
      {"outer/inner parameter discipline", discipline},
      {"byte-identical reruns", [&cli] { return determinism(cli); }},
  };
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (only != 0 && only != id) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::printf("criterion %d %s: %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
