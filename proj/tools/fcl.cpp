// Command-line front end: one subcommand per experiment. Every run writes
// config.json (the effective config), CSVs, SVGs and manifest.json into --out.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fcl/exactinfo.hpp"
#include "fcl/experiments.hpp"

namespace fs = std::filesystem;
using namespace fcl;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant;
};

std::string read_file(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path prepare_out(const Common& c) {
  if (c.out.empty()) throw UsageError("--out is required");
  fs::create_directories(c.out);
  return c.out;
}

void invariant(bool ok, const std::string& what) {
  if (!ok) throw NumericError("invariant failed: " + what);
}

int gaussian_bench(const Common& c) {
  exp::GaussianBenchConfig cfg = exp::parse_gaussian_config(read_file(c.config));
  if (c.seed) cfg.seed = *c.seed;
  const fs::path dir = prepare_out(c);
  report::write_text(dir / "config.json", exp::to_json(cfg));
  const auto curves = exp::run_gaussian_bench(cfg);
  exp::write_gaussian_bench(curves, dir);
  const double cap = std::log(static_cast<double>(cfg.batch_size)) + 1e-9;
  for (const auto& cv : curves) {
    for (double v : cv.nce) invariant(v <= cap, "InfoNCE above ln(batch)");
    std::printf("d=%zu mi=%g  tail nce %.4f  tail nce_club %.4f\n", cv.dim, cv.target_mi, cv.tail_nce(500),
                cv.tail_club(500));
  }
  exp::write_manifest(dir, "gaussian-bench", cfg.seed);
  return 0;
}

int cmi_bench(const Common& c) {
  exp::CmiBenchConfig cfg = exp::parse_cmi_config(read_file(c.config));
  if (c.seed) cfg.seed = *c.seed;
  const fs::path dir = prepare_out(c);
  report::write_text(dir / "config.json", exp::to_json(cfg));
  const auto rows = exp::run_cmi_bench(cfg);
  exp::write_cmi_bench(rows, dir);
  for (const auto& r : rows) {
    std::printf("%s dz=%zu n=%zu c=%g  true %.4f  cond_nce %.4f  cond_club %.4f\n", r.setting.c_str(), r.dz,
                r.n, r.coupling, r.true_cmi, r.cond_nce, r.cond_club);
  }
  exp::write_manifest(dir, "cmi-bench", cfg.seed);
  return 0;
}

int synthetic(const Common& c) {
  exp::SyntheticConfig cfg = exp::parse_synthetic_config(read_file(c.config));
  if (c.seed) cfg.seed = *c.seed;
  if (!c.variant.empty()) cfg.variants = {c.variant};
  cfg.validate();
  const fs::path dir = prepare_out(c);
  report::write_text(dir / "config.json", exp::to_json(cfg));
  std::vector<exp::SyntheticRow> rows;
  for (double r : cfg.ratios) {
    for (const auto& v : cfg.variants) {
      for (std::size_t k = 0; k < cfg.num_seeds; ++k) {
        rows.push_back(exp::run_synthetic_cell(r, v, cfg.seed + k, cfg));
        std::printf("ratio=%g %s seed=%zu  accuracy %.4f\n", r, v.c_str(),
                    static_cast<std::size_t>(cfg.seed + k), rows.back().accuracy);
        std::fflush(stdout);
      }
    }
  }
  exp::write_synthetic(rows, dir);
  exp::write_manifest(dir, "synthetic", cfg.seed);
  return 0;
}

int probe(const Common& c, bool ablate) {
  exp::ProbeRunConfig cfg = exp::parse_probe_config(read_file(c.config));
  if (c.seed) cfg.seed = *c.seed;
  if (!c.variant.empty()) cfg.run.variant = c.variant;
  cfg.validate();
  const fs::path dir = prepare_out(c);
  report::write_text(dir / "config.json", exp::to_json(cfg));
  const fs::path snap = dir / "model";
  const auto out = exp::run_probe(cfg, ablate, cfg.save_snapshot ? &snap : nullptr);
  exp::write_probe(out, dir);
  for (const auto& row : out.matrix.nats) {
    for (double v : row) invariant(v >= -1e-6, "negative MI probe cell");
  }
  for (std::size_t r = 0; r < out.matrix.rows.size(); ++r) {
    std::printf("%-5s", out.matrix.rows[r].c_str());
    for (std::size_t k = 0; k < out.matrix.cols.size(); ++k) {
      std::printf("  %s %.3f", out.matrix.cols[k].c_str(), out.matrix.nats[r][k]);
    }
    std::printf("\n");
  }
  for (const auto& p : out.ablation) std::printf("probe %-5s accuracy %.4f\n", p.name.c_str(), p.accuracy);
  if (out.has_infomin) {
    std::printf("infomin: conditional %.4f pairwise %.4f ratio %.4f\n", out.infomin.conditional,
                out.infomin.pairwise, out.infomin.ratio);
  }
  exp::write_manifest(dir, ablate ? "ablate" : "probe", cfg.seed);
  return 0;
}

int exact(const std::string& table) {
  using namespace exactinfo;
  const DiscreteJoint j = DiscreteJoint::load(table);
  const Decomposition d = decompose(j);
  const auto line = [](const char* name, double v) {
    std::printf("%-14s %14.10f nats  %14.10f bits\n", name, v, v / std::log(2.0));
  };
  line("H(X1)", entropy(j, kX1));
  line("H(X2)", entropy(j, kX2));
  line("H(Y)", d.h_y);
  line("I(X1;X2)", mutual_information(j, kX1, kX2));
  line("I(X1;Y)", mutual_information(j, kX1, kY));
  line("I(X2;Y)", mutual_information(j, kX2, kY));
  line("I(X1;X2|Y)", conditional_mi(j, kX1, kX2, kY));
  line("I(X1,X2;Y)", d.total);
  line("S", d.shared);
  line("U1", d.unique1);
  line("U2", d.unique2);
  line("residual", d.residual);
  std::printf("%-14s %14.10f\n", "bound(total)", bayes_error_bound(d.total, d.h_y));
  std::printf("%-14s %14.10f\n", "bound(shared)", bayes_error_bound(d.shared, d.h_y));
  std::printf("%-14s %14.10f\n", "bayes_error", bayes_error_exact(j));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factorized contrastive learning lab"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&common](CLI::App* sub, bool with_variant) {
    sub->add_option("--config", common.config, "JSON config file (defaults when omitted)");
    sub->add_option("--seed", common.seed, "override the config seed");
    sub->add_option("--out", common.out, "output directory")->required();
    if (with_variant) sub->add_option("--variant", common.variant, "override the variant");
  };
  auto* g = app.add_subcommand("gaussian-bench", "MI bounds on correlated Gaussians");
  add_common(g, false);
  auto* cm = app.add_subcommand("cmi-bench", "conditional MI bounds on the linear-Gaussian triple");
  add_common(cm, false);
  auto* sy = app.add_subcommand("synthetic", "ratio sweep: train, then linear-probe");
  add_common(sy, true);
  auto* pr = app.add_subcommand("probe", "latent MI probe matrix of one trained model");
  add_common(pr, true);
  auto* ab = app.add_subcommand("ablate", "probe matrix plus per-part linear probes");
  add_common(ab, true);
  std::string table;
  auto* ex = app.add_subcommand("exact", "exact information report for a discrete joint table");
  ex->add_option("table", table, "joint table file")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*g) return gaussian_bench(common);
    if (*cm) return cmi_bench(common);
    if (*sy) return synthetic(common);
    if (*pr) return probe(common, false);
    if (*ab) return probe(common, true);
    if (*ex) return exact(table);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
