#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fcl/synthgen.hpp"

namespace fcl::synth {
namespace {

double correlation(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Held-out accuracy of least-squares ±1 regression; a cheap linear classifier
// that needs nothing from the eval module.
double ls_accuracy(const Matrix& feats, const std::vector<int>& y, std::size_t n_train) {
  const auto d = static_cast<Eigen::Index>(feats.cols()) + 1;
  Eigen::MatrixXd a(n_train, d);
  Eigen::VectorXd t(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    for (Eigen::Index c = 0; c + 1 < d; ++c) a(i, c) = feats(i, c);
    a(i, d - 1) = 1.0;
    t(i) = y[i] ? 1.0 : -1.0;
  }
  const Eigen::VectorXd w = a.colPivHouseholderQr().solve(t);
  std::size_t hit = 0;
  for (std::size_t i = n_train; i < y.size(); ++i) {
    double s = w(d - 1);
    for (Eigen::Index c = 0; c + 1 < d; ++c) s += w(c) * feats(i, c);
    hit += (s > 0.0) == (y[i] == 1);
  }
  return static_cast<double>(hit) / static_cast<double>(y.size() - n_train);
}

TEST(SynthConfig, Validation) {
  SynthConfig c;
  EXPECT_NO_THROW(c.validate());
  c.r_shared = 0.7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SynthConfig{};
  c.out_dim = 100;
  EXPECT_THROW(c.validate(), ConfigError);
  const SynthConfig h = SynthConfig{}.with_unique_ratio(0.5);
  EXPECT_EQ(h.shared_selected(), 25U);
  EXPECT_EQ(h.unique1_selected(), 12U);
  EXPECT_EQ(h.unique2_selected(), 12U);
}

TEST(Transforms, DeterministicFullRankAndSeedSensitive) {
  SynthConfig c;
  const Transforms a = make_transforms(c);
  const Transforms b = make_transforms(c);
  EXPECT_EQ(a.t1, b.t1);
  EXPECT_EQ(a.t2, b.t2);
  EXPECT_EQ(numerical_rank(a.t1), c.input_dim());
  EXPECT_EQ(numerical_rank(a.t2), c.input_dim());
  c.transform_seed = 2;
  EXPECT_GT(frobenius_distance(make_transforms(c).t1, a.t1), 0.0);
}

TEST(SampleBatch, SharedOnlyLabelIgnoresUniqueLatents) {
  const SynthSource src(SynthConfig{});
  Rng rng(1);
  SynthBatch b = src.sample(200, rng);
  std::vector<std::size_t> perm(200);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  const Matrix w1p = gather_rows(b.w1, perm);
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_EQ(label_logit(src.config(), src.transforms(), b.ws.row(i), b.w1.row(i), b.w2.row(i)),
              label_logit(src.config(), src.transforms(), b.ws.row(i), w1p.row(i), b.w2.row(i)));
  }
}

TEST(SampleBatch, LabelBalance) {
  SynthConfig c;
  c.label_noise_std = 0.1;
  const SynthSource src(c);
  Rng rng(5);
  const SynthBatch b = src.sample(10000, rng);
  const double frac = std::accumulate(b.y.begin(), b.y.end(), 0.0) / 10000.0;
  EXPECT_NEAR(frac, 0.5, 0.03);
}

TEST(SampleBatch, UniqueLabelsFavorUniqueLatentProbe) {
  SynthConfig c;
  c.r_shared = 0.0;
  c.r_unique1 = 1.0;
  const SynthSource src(c);
  Rng rng(6);
  const SynthBatch b = src.sample(6000, rng);
  EXPECT_GE(ls_accuracy(b.w1, b.y, 4000), ls_accuracy(b.ws, b.y, 4000));
}

TEST(SampleBatch, SharedOnlyModalitiesPredictEqually) {
  const SynthSource src(SynthConfig{});
  Rng rng(7);
  const SynthBatch b = src.sample(10000, rng);
  EXPECT_NEAR(ls_accuracy(b.x1, b.y, 8000), ls_accuracy(b.x2, b.y, 8000), 0.02);
}

TEST(SampleBatch, UniqueOnlyWsBlockIsAtChance) {
  const SynthSource src(SynthConfig{}.with_unique_ratio(1.0));
  Rng rng(8);
  const SynthBatch b = src.sample(10000, rng);
  const Matrix lat = latent_recovery(src.transforms(), Modality::first, b.x1);
  EXPECT_NEAR(ls_accuracy(col_slice(lat, 50, 50), b.y, 8000), 0.5, 0.03);
}

TEST(SampleBatch, Deterministic) {
  const SynthSource src(SynthConfig{});
  Rng r1(3), r2(3);
  const SynthBatch a = src.sample(10, r1);
  const SynthBatch b = src.sample(10, r2);
  EXPECT_EQ(a.x1, b.x1);
  EXPECT_EQ(a.y, b.y);
}

TEST(Augment, ZeroNoiseUnimodalIsIdentity) {
  SynthConfig c;
  c.d_noise = 0;
  const SynthSource src(c);
  Rng rng(9);
  const SynthBatch b = src.sample(20, rng);
  const AugmentedView v = augment(c, src.transforms(), b, Modality::first, AugMode::unimodal, rng);
  EXPECT_EQ(v.x, b.x1);
}

TEST(Augment, UnimodalKeepsLatentsAndRedrawsNoise) {
  const SynthSource src(SynthConfig{});
  Rng rng(10);
  const SynthBatch b = src.sample(4000, rng);
  const AugmentedView v =
      augment(src.config(), src.transforms(), b, Modality::second, AugMode::unimodal, rng);
  const Matrix l0 = latent_recovery(src.transforms(), Modality::second, b.x2);
  const Matrix l1 = latent_recovery(src.transforms(), Modality::second, v.x);
  std::vector<double> a(4000), bb(4000);
  for (std::size_t col : {0UL, 30UL, 60UL, 99UL, 100UL, 124UL}) {
    for (std::size_t i = 0; i < 4000; ++i) {
      a[i] = l0(i, col);
      bb[i] = l1(i, col);
    }
    const double r = correlation(a, bb);
    if (col < 100) {
      EXPECT_NEAR(r, 1.0, 1e-9) << col;
    } else {
      EXPECT_LT(std::abs(r), 3.0 / std::sqrt(4000.0)) << col;
    }
  }
}

TEST(Augment, UniqueModeKeepsSharedAndRelevantCoordinates) {
  const SynthSource src(SynthConfig{}.with_unique_ratio(0.5));
  Rng rng(11);
  const SynthBatch b = src.sample(50, rng);
  const AugmentedView v =
      augment(src.config(), src.transforms(), b, Modality::second, AugMode::unique, rng);
  EXPECT_EQ(v.ws, b.ws);
  const std::size_t keep = src.config().unique2_selected();
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t c = 0; c < keep; ++c) EXPECT_EQ(v.w_unique(i, c), b.w2(i, c));
    EXPECT_NE(v.w_unique(i, keep), b.w2(i, keep));
  }
}

TEST(Augment, MissingLatentsIsUsageError) {
  const SynthSource src(SynthConfig{});
  SynthBatch b;
  b.y = {0, 1};
  Rng rng(1);
  EXPECT_THROW((void)augment(src.config(), src.transforms(), b, Modality::first, AugMode::unimodal, rng),
               UsageError);
}

TEST(GaussianPair, ClosedForms) {
  EXPECT_EQ(true_mi(GaussianPairConfig{20, 0.0}), 0.0);
  EXPECT_NEAR(rho_for_mi(20, 4.0), std::sqrt(1.0 - std::exp(-0.4)), 1e-15);
  EXPECT_NEAR(rho_for_mi(20, 4.0), 0.574178, 1e-6);
  for (double m : {2.0, 4.0, 6.0, 8.0, 10.0})
    for (std::size_t d : {20UL, 50UL, 100UL, 200UL})
      EXPECT_NEAR(true_mi(GaussianPairConfig{d, rho_for_mi(d, m)}), m, 1e-12);
  EXPECT_THROW((void)true_mi(GaussianPairConfig{20, 1.0}), ConfigError);
}

TEST(GaussianPair, SampleCorrelationConverges) {
  Rng rng(12);
  const std::size_t n = 20000;
  const auto [x, y] = sample_gaussian_pair(GaussianPairConfig{3, 0.6}, n, rng);
  std::vector<double> a(n), b(n);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = x(i, c);
      b[i] = y(i, c);
    }
    EXPECT_NEAR(correlation(a, b), 0.6, 3.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST(CmiTriple, NullCouplingAndNoiseScaleInvariance) {
  CmiTripleConfig c;
  c.coupling = 0.0;
  EXPECT_NEAR(true_cmi(c), 0.0, 1e-12);
  c.coupling = 0.7;
  const double base = true_cmi(c);
  EXPECT_NEAR(base, 2.5 * std::log1p(0.49), 1e-10);
  c.noise1_std = 2.0;
  c.noise2_std = 2.0;
  EXPECT_NEAR(true_cmi(c), base, 1e-10);
}

TEST(CmiTriple, MatchesMonteCarloPlugIn) {
  CmiTripleConfig c;
  c.coupling = 0.5;
  c.noise1_std = 1.3;
  Rng rng(13);
  const std::size_t n = 1000000;
  const CmiTriple t = sample_cmi_triple(c, n, rng);
  const Eigen::Index d = 20;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd v(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < 5; ++k) {
      v(k) = t.x1(i, k);
      v(5 + k) = t.x2(i, k);
    }
    for (Eigen::Index k = 0; k < 10; ++k) v(10 + k) = t.z(i, k);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(v);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);
  const Eigen::MatrixXd sxz = cov.topRightCorner(10, 10);
  const Eigen::MatrixXd cond = cov.topLeftCorner(10, 10) -
                               sxz * cov.bottomRightCorner(10, 10).inverse() * sxz.transpose();
  const double mc = 0.5 * (std::log(cond.topLeftCorner(5, 5).determinant()) +
                           std::log(cond.bottomRightCorner(5, 5).determinant()) -
                           std::log(cond.determinant()));
  EXPECT_NEAR(mc, true_cmi(c), 0.02 * true_cmi(c));
}

TEST(CmiTriple, GroupsShareZ) {
  CmiTripleConfig c;
  c.group_size = 4;
  Rng rng(14);
  const CmiTriple t = sample_cmi_triple(c, 10, rng);
  EXPECT_EQ(t.group, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, 2, 2}));
  EXPECT_EQ(t.z.row(0)[3], t.z.row(3)[3]);
  EXPECT_NE(t.z.row(0)[3], t.z.row(4)[3]);
}

TEST(Csv, HeaderAndRowCount) {
  const SynthSource src(SynthConfig{});
  Rng rng(15);
  const SynthBatch b = src.sample(3, rng);
  std::ostringstream os;
  write_batch_csv(os, b);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
  EXPECT_EQ(s.rfind("x1_0,", 0), 0U);
}

}  // namespace
}  // namespace fcl::synth
