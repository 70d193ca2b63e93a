#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcl/estimators.hpp"

namespace fcl::est {
namespace {

// S_ij evaluated pair by pair through MlpNet::predict on explicit
// concatenated critic inputs; shares no code with the pairwise kernel.
Matrix brute_scores(const CriticSet& cs, const Matrix& z1, const Matrix& z2,
                    const Conditioning* cond) {
  const Matrix h1 = cs.head1.empty() ? z1 : cs.head1.predict(z1);
  const Matrix h2 = cs.head2.empty() ? z2 : cs.head2.predict(z2);
  const std::size_t n = z1.rows();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> row;
      for (double v : h1.row(i)) row.push_back(v);
      if (cond != nullptr) for (double v : cond->left.row(i)) row.push_back(v);
      for (double v : h2.row(j)) row.push_back(v);
      if (cond != nullptr) for (double v : cond->right.row(j)) row.push_back(v);
      const Matrix in(1, row.size(), row);
      s(i, j) = cs.critic.predict(in)(0, 0);
    }
  }
  return s;
}

// Direct transcription of the estimator definitions, no max-subtraction.
double naive_infonce(const Matrix& s, const Mask* mask) {
  double total = 0.0;
  int rows = 0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < s.cols(); ++j) {
      if (j == i || mask == nullptr || (*mask)(i, j)) {
        sum += std::exp(s(i, j));
        ++count;
      }
    }
    if (count < 2) continue;
    total += s(i, i) - std::log(sum / count);
    ++rows;
  }
  return total / rows;
}

CriticSpec small_spec(CondKind kind = CondKind::none, std::size_t c1 = 0, std::size_t c2 = 0) {
  CriticSpec spec;
  spec.head1_dims = {6, 10, 5};
  spec.head2_dims = {4, 10, 5};
  spec.critic_hidden = 16;
  spec.cond_kind = kind;
  spec.cond_dims1 = c1;
  spec.cond_dims2 = c2;
  return spec;
}

TEST(ScoreMatrix, ConstantCriticGivesConstantScores) {
  Rng rng(1);
  CriticSet cs = make_critic_set(small_spec(), rng);
  cs.critic = MlpNet::zeros(cs.critic.layer_dims());
  cs.critic.layers()[1].bias(0, 0) = 0.7;
  const Matrix s = score_matrix(cs, rng.normal_matrix(5, 6), rng.normal_matrix(5, 4));
  for (double v : s.values()) EXPECT_EQ(v, 0.7);
  EXPECT_NEAR(infonce_estimate(s).value, 0.0, 1e-15);
  EXPECT_NEAR(nce_club_estimate(s).value, 0.0, 1e-15);
}

TEST(ScoreMatrix, MatchesPairwiseRecomputation) {
  Rng rng(2);
  for (std::size_t n : {2UL, 7UL}) {
    const CriticSet cs = make_critic_set(small_spec(CondKind::label, 2, 2), rng);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
    const Conditioning cond = conditional_pack(CondKind::label, y, 2, nullptr, nullptr);
    const Matrix z1 = rng.normal_matrix(n, 6);
    const Matrix z2 = rng.normal_matrix(n, 4);
    EXPECT_LT(frobenius_distance(score_matrix(cs, z1, z2, &cond), brute_scores(cs, z1, z2, &cond)),
              1e-12);
  }
}

TEST(ScoreMatrix, PermutingSecondViewPermutesColumns) {
  Rng rng(3);
  const CriticSet cs = make_critic_set(small_spec(), rng);
  const Matrix z1 = rng.normal_matrix(6, 6);
  const Matrix z2 = rng.normal_matrix(6, 4);
  const std::size_t perm[] = {3, 0, 5, 1, 4, 2};
  const Matrix s = score_matrix(cs, z1, z2);
  const Matrix sp = score_matrix(cs, z1, gather_rows(z2, perm));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(sp(i, j), s(i, perm[j]));
}

TEST(ScoreMatrix, SwappingViewsTransposes) {
  Rng rng(4);
  CriticSpec spec = small_spec();
  const CriticSet cs = make_critic_set(spec, rng);
  CriticSet swapped = cs;
  std::swap(swapped.head1, swapped.head2);
  auto& w = swapped.critic.layers()[0].weight;
  const Matrix left = col_slice(cs.critic.layers()[0].weight, 0, 5);
  const Matrix right = col_slice(cs.critic.layers()[0].weight, 5, 5);
  w = hconcat(right, left);
  const Matrix z1 = rng.normal_matrix(5, 6);
  const Matrix z2 = rng.normal_matrix(5, 4);
  const Matrix s = score_matrix(cs, z1, z2);
  const Matrix st = score_matrix(swapped, z2, z1);
  EXPECT_LT(frobenius_distance(st, transpose(s)), 1e-12);
  // The mask transposes along with the scores.
  const std::vector<int> g = {0, 0, 1, 1, 1};
  const Mask m = Mask::same_group(g);
  EXPECT_NEAR(nce_club_estimate(s, &m).value, nce_club_estimate(transpose(s), &m).value, 1e-12);
}

TEST(ScoreMatrix, RejectsSingleSampleAndBadCritic) {
  Rng rng(5);
  CriticSet cs = make_critic_set(small_spec(), rng);
  EXPECT_THROW((void)score_matrix(cs, rng.normal_matrix(1, 6), rng.normal_matrix(1, 4)), UsageError);
  cs.critic = MlpNet({10, 4, 4, 1}, rng);
  EXPECT_THROW((void)score_matrix(cs, rng.normal_matrix(3, 6), rng.normal_matrix(3, 4)), ShapeError);
}

TEST(InfoNce, MatchesNaiveFormulaAndCap) {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.index(12);
    const Matrix s = rng.normal_matrix(n, n, 3.0);
    EXPECT_NEAR(infonce_estimate(s).value, naive_infonce(s, nullptr), 1e-12);
    EXPECT_LE(infonce_estimate(s).value, std::log(static_cast<double>(n)) + 1e-12);
    std::vector<int> g(n);
    for (int& v : g) v = static_cast<int>(rng.index(3));
    const Mask m = Mask::same_group(g);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      any = any || std::count(g.begin(), g.end(), g[i]) >= 2;
    if (any) EXPECT_NEAR(infonce_estimate(s, &m).value, naive_infonce(s, &m), 1e-12);
  }
}

TEST(InfoNce, PerfectCriticApproachesLogN) {
  Matrix s(8, 8, -40.0);
  for (std::size_t i = 0; i < 8; ++i) s(i, i) = 40.0;
  EXPECT_NEAR(infonce_estimate(s).value, std::log(8.0), 1e-12);
}

TEST(InfoNce, ClampedScoresPassNoGradient) {
  Matrix s(3, 3, 0.0);
  s(0, 1) = 80.0;
  const Estimate e = infonce_estimate(s);
  EXPECT_EQ(e.grad(0, 1), 0.0);
  EXPECT_TRUE(std::isfinite(e.value));
}

TEST(InfoNce, DropsRowsWithoutNegatives) {
  Rng rng(7);
  const Matrix s = rng.normal_matrix(4, 4);
  const std::vector<int> g = {0, 1, 1, 2};
  const Mask m = Mask::same_group(g);
  const Estimate e = infonce_estimate(s, &m);
  EXPECT_EQ(e.rows_used, 2U);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(e.grad(0, j), 0.0);
  const std::vector<int> solo = {0, 1, 2, 3};
  const Mask none = Mask::same_group(solo);
  EXPECT_THROW((void)infonce_estimate(s, &none), EstimationError);
  EXPECT_THROW((void)nce_club_estimate(s, &none), EstimationError);
}

TEST(NceClub, EqualsDiagonalMinusOffDiagonalMean) {
  Rng rng(8);
  const Matrix s = rng.normal_matrix(6, 6);
  double diag = 0.0, off = 0.0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) (i == j ? diag : off) += s(i, j);
  EXPECT_NEAR(nce_club_estimate(s).value, diag / 6.0 - off / 30.0, 1e-12);
}

TEST(NceClub, IndependentViewsAverageToZero) {
  Rng rng(9);
  CriticSet cs = make_critic_set(small_spec(), rng);
  double total = 0.0;
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    const Matrix s = score_matrix(cs, rng.normal_matrix(64, 6), rng.normal_matrix(64, 4));
    total += nce_club_estimate(s).value;
  }
  // Scores have spread ~0.1 here; the mean over 40 batches must sit near 0.
  EXPECT_LT(std::abs(total / reps), 0.02);
}

// Absorbs rounding noise on gradients that are exactly zero (see finite_diff_check).
constexpr double kGradFloor = 1e-6;

struct GradCase {
  CondKind kind;
  bool club;
  bool masked;
};

class EstimatorGradients : public ::testing::TestWithParam<GradCase> {};

TEST_P(EstimatorGradients, MatchFiniteDifferences) {
  const GradCase gc = GetParam();
  Rng rng(10);
  const std::size_t n = 8;
  const std::size_t cdim = gc.kind == CondKind::none ? 0 : (gc.kind == CondKind::label ? 2 : 3);
  CriticSet cs = make_critic_set(small_spec(gc.kind, cdim, cdim), rng);
  const Matrix z1 = rng.normal_matrix(n, 6);
  const Matrix z2 = rng.normal_matrix(n, 4);
  std::vector<int> y = {0, 1, 0, 1, 1, 0, 0, 1};
  Conditioning cond;
  if (gc.kind == CondKind::label) cond = conditional_pack(gc.kind, y, 2, nullptr, nullptr);
  if (gc.kind == CondKind::augmented_pair) {
    const Matrix a1 = rng.normal_matrix(n, 3), a2 = rng.normal_matrix(n, 3);
    cond = conditional_pack(gc.kind, {}, 0, &a1, &a2);
  }
  const std::optional<Mask> mask = gc.masked ? std::optional(Mask::same_group(y)) : cond.mask();
  auto loss = [&](bool accumulate) {
    ScoreCache cache;
    const Matrix s = score_matrix(cs, z1, z2, cdim > 0 ? &cond : nullptr, &cache);
    const Mask* m = mask ? &*mask : nullptr;
    const Estimate e = gc.club ? nce_club_estimate(s, m) : infonce_estimate(s, m);
    if (accumulate) (void)score_backward(cs, cache, e.grad);
    return e.value;
  };
  MlpNet* nets[] = {&cs.head1, &cs.head2, &cs.critic};
  const GradCheckResult r = finite_diff_check(loss, nets, 1e-4, 1e-5, kGradFloor);
  EXPECT_TRUE(r.passed) << r.max_relative_error << " at " << r.worst_index << ": "
                        << r.worst_analytic << " vs " << r.worst_numeric;
}

INSTANTIATE_TEST_SUITE_P(
    All, EstimatorGradients,
    ::testing::Values(GradCase{CondKind::none, false, false}, GradCase{CondKind::none, true, false},
                      GradCase{CondKind::label, false, false}, GradCase{CondKind::label, true, false},
                      GradCase{CondKind::augmented_pair, false, false},
                      GradCase{CondKind::augmented_pair, true, false},
                      GradCase{CondKind::none, false, true}));

TEST(ScoreBackward, InputAndConditioningGradients) {
  Rng rng(11);
  const std::size_t n = 6;
  CriticSet cs = make_critic_set(small_spec(CondKind::augmented_pair, 3, 3), rng);
  Matrix z1 = rng.normal_matrix(n, 6);
  Matrix z2 = rng.normal_matrix(n, 4);
  Matrix a1 = rng.normal_matrix(n, 3);
  Matrix a2 = rng.normal_matrix(n, 3);
  auto value = [&] {
    const Conditioning c = conditional_pack(CondKind::augmented_pair, {}, 0, &a1, &a2);
    return infonce_estimate(score_matrix(cs, z1, z2, &c)).value;
  };
  const Conditioning c = conditional_pack(CondKind::augmented_pair, {}, 0, &a1, &a2);
  ScoreCache cache;
  const Estimate e = infonce_estimate(score_matrix(cs, z1, z2, &c, &cache));
  const ScoreGrads g = score_backward(cs, cache, e.grad);
  for (auto [m, gm] : {std::pair{&z1, &g.z1}, std::pair{&z2, &g.z2}, std::pair{&a1, &g.cond_left},
                       std::pair{&a2, &g.cond_right}}) {
    ASSERT_EQ(gm->rows(), m->rows());
    ASSERT_EQ(gm->cols(), m->cols());
    for (std::size_t i = 0; i < m->size(); ++i) {
      const double saved = m->data()[i];
      m->data()[i] = saved + 1e-5;
      const double up = value();
      m->data()[i] = saved - 1e-5;
      const double down = value();
      m->data()[i] = saved;
      const double num = (up - down) / 2e-5;
      EXPECT_LT(std::abs(num - gm->data()[i]) / std::max({std::abs(num), std::abs(gm->data()[i]), 1e-8}),
                1e-4);
    }
  }
}

TEST(ScoreBackward, ScopeLimitsAccumulation) {
  Rng rng(12);
  CriticSet cs = make_critic_set(small_spec(), rng);
  ScoreCache cache;
  const Matrix s = score_matrix(cs, rng.normal_matrix(4, 6), rng.normal_matrix(4, 4), nullptr, &cache);
  (void)score_backward(cs, cache, infonce_estimate(s).grad, BackwardScope{true, false});
  EXPECT_EQ(cs.head1.grad_norm(), 0.0);
  EXPECT_EQ(cs.head2.grad_norm(), 0.0);
  EXPECT_GT(cs.critic.grad_norm(), 0.0);
}

TEST(ConditionalPack, Kinds) {
  const std::vector<int> y = {0, 1};
  const Conditioning c = conditional_pack(CondKind::label, y, 2, nullptr, nullptr);
  EXPECT_EQ(c.left, (Matrix{{1, 0}, {0, 1}}));
  EXPECT_EQ(c.right, c.left);
  EXPECT_TRUE(c.mask().has_value());
  const Conditioning none = conditional_pack(CondKind::none, {}, 0, nullptr, nullptr);
  EXPECT_EQ(none.left_dims() + none.right_dims(), 0U);
  EXPECT_FALSE(none.mask().has_value());
  EXPECT_THROW((void)conditional_pack(CondKind::label, {}, 2, nullptr, nullptr), UsageError);
  EXPECT_THROW((void)conditional_pack(CondKind::augmented_pair, {}, 0, nullptr, nullptr), UsageError);
  EXPECT_THROW((void)one_hot(std::vector<int>{2}, 2), UsageError);
}

TEST(CriticSet, InputWidthIsHeadsPlusConditioning) {
  Rng rng(13);
  const CriticSet cs = make_critic_set(small_spec(CondKind::label, 2, 2), rng);
  EXPECT_EQ(cs.critic_input_dim(), 5U + 5U + 2U + 2U);
  EXPECT_EQ(cs.critic.output_dim(), 1U);
  CriticSpec label_view = small_spec();
  label_view.head2_dims.clear();
  label_view.identity_dim2 = 3;
  const CriticSet lv = make_critic_set(label_view, rng);
  EXPECT_TRUE(lv.head2.empty());
  EXPECT_EQ(lv.critic_input_dim(), 8U);
}

}  // namespace
}  // namespace fcl::est
