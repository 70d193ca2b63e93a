#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fcl/matrix.hpp"
#include "fcl/mlp.hpp"
#include "fcl/rng.hpp"

namespace fcl {
namespace {

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

TEST(Matrix, RejectsBadDataLength) {
  EXPECT_THROW(Matrix(2, 3, std::vector<double>(5)), ShapeError);
}

TEST(Matrix, ProductsAgreeWithNaiveLoops) {
  Rng rng(3);
  const Matrix a = rng.normal_matrix(7, 5);
  const Matrix b = rng.normal_matrix(5, 9);
  const Matrix ref = naive_matmul(a, b);
  EXPECT_LT(frobenius_distance(matmul(a, b), ref), 1e-12);
  EXPECT_LT(frobenius_distance(matmul_nt(a, transpose(b)), ref), 1e-12);
  EXPECT_LT(frobenius_distance(matmul_tn(transpose(a), b), ref), 1e-12);
  EXPECT_THROW((void)matmul(a, a), ShapeError);
}

TEST(Matrix, ConcatSliceGather) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{5}, {6}};
  const Matrix c = hconcat(a, b);
  EXPECT_EQ(c, (Matrix{{1, 2, 5}, {3, 4, 6}}));
  EXPECT_EQ(col_slice(c, 1, 2), (Matrix{{2, 5}, {4, 6}}));
  const std::size_t idx[] = {1, 1, 0};
  EXPECT_EQ(gather_rows(b, idx), (Matrix{{6}, {6}, {5}}));
}

TEST(Mlp, IdentityLayerPassesInputThrough) {
  MlpNet net = MlpNet::zeros({3, 3});
  for (std::size_t i = 0; i < 3; ++i) net.layers()[0].weight(i, i) = 1.0;
  const Matrix x{{1.5, -2.0, 0.25}};
  EXPECT_EQ(net.predict(x), x);
}

TEST(Mlp, HiddenReluClampsNegative) {
  MlpNet net = MlpNet::zeros({1, 1, 1});
  net.layers()[0].weight(0, 0) = 1.0;
  net.layers()[1].weight(0, 0) = 1.0;
  const Activations acts = net.forward(Matrix{{-1.0}});
  EXPECT_EQ(acts.pre[0](0, 0), -1.0);
  EXPECT_EQ(acts.post[1](0, 0), 0.0);
}

TEST(Mlp, ForwardMatchesStraightLineRecomputation) {
  Rng rng(11);
  MlpNet net({4, 6, 3}, rng);
  const Matrix x = rng.normal_matrix(5, 4);
  const Matrix out = net.predict(x);
  const auto& l0 = net.layers()[0];
  const auto& l1 = net.layers()[1];
  for (std::size_t r = 0; r < 5; ++r) {
    std::vector<double> h(6);
    for (std::size_t j = 0; j < 6; ++j) {
      double s = l0.bias(0, j);
      for (std::size_t k = 0; k < 4; ++k) s += l0.weight(j, k) * x(r, k);
      h[j] = s > 0.0 ? s : 0.0;
    }
    for (std::size_t j = 0; j < 3; ++j) {
      double s = l1.bias(0, j);
      for (std::size_t k = 0; k < 6; ++k) s += l1.weight(j, k) * h[k];
      EXPECT_NEAR(out(r, j), s, 1e-12);
    }
  }
}

TEST(Mlp, ForwardRejectsWrongWidth) {
  Rng rng(1);
  MlpNet net({4, 2}, rng);
  EXPECT_THROW((void)net.forward(Matrix(3, 5)), ShapeError);
}

TEST(Mlp, ZeroUpstreamGradientGivesZeroGrads) {
  Rng rng(5);
  MlpNet net({3, 8, 2}, rng);
  const Matrix x = rng.normal_matrix(4, 3);
  const Activations acts = net.forward(x);
  (void)net.backward(acts, Matrix(4, 2));
  net.for_each_parameter([](double&, double& g) { EXPECT_EQ(g, 0.0); });
}

TEST(Mlp, SumLossWeightGradIsOuterProductOfOnesAndInputs) {
  MlpNet net = MlpNet::zeros({3, 2});
  for (std::size_t i = 0; i < 2; ++i) net.layers()[0].weight(i, i) = 1.0;
  const Matrix x{{1.0, 2.0, 3.0}, {-1.0, 0.5, 4.0}};
  const Activations acts = net.forward(x);
  const Matrix g_in = net.backward(acts, Matrix(2, 2, 1.0));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      EXPECT_DOUBLE_EQ(net.layers()[0].grad_weight(i, k), x(0, k) + x(1, k));
  EXPECT_DOUBLE_EQ(net.layers()[0].grad_bias(0, 0), 2.0);
  EXPECT_EQ(g_in, (Matrix{{1, 1, 0}, {1, 1, 0}}));
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng(21);
  MlpNet net({5, 7, 7, 3}, rng);
  const Matrix x = rng.normal_matrix(6, 5);
  const Matrix target = rng.normal_matrix(6, 3);
  auto loss = [&](bool accumulate) {
    const Activations acts = net.forward(x);
    Matrix g(6, 3);
    double l = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double d = acts.output().data()[i] - target.data()[i];
      l += 0.5 * d * d + std::sin(acts.output().data()[i]);
      g.data()[i] = d + std::cos(acts.output().data()[i]);
    }
    if (accumulate) (void)net.backward(acts, g);
    return l;
  };
  const GradCheckResult r = finite_diff_check(loss, net, 1e-4);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
  EXPECT_EQ(r.parameters_checked, net.parameter_count());
}

TEST(Mlp, InputGradientMatchesFiniteDifferences) {
  Rng rng(8);
  MlpNet net({4, 9, 2}, rng);
  Matrix x = rng.normal_matrix(3, 4);
  const Activations acts = net.forward(x);
  const Matrix g_in = net.backward(acts, Matrix(3, 2, 1.0));
  auto sum_out = [&] {
    const Matrix out = net.predict(x);
    double s = 0.0;
    for (double v : out.values()) s += v;
    return s;
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + 1e-6;
    const double up = sum_out();
    x.data()[i] = saved - 1e-6;
    const double down = sum_out();
    x.data()[i] = saved;
    EXPECT_NEAR(g_in.data()[i], (up - down) / 2e-6, 1e-6);
  }
}

TEST(Mlp, QuadraticLossOnLinearNetIsExact) {
  Rng rng(2);
  MlpNet net({3, 2}, rng);
  const Matrix x = rng.normal_matrix(4, 3);
  auto loss = [&](bool accumulate) {
    const Activations acts = net.forward(x);
    double l = 0.0;
    for (double v : acts.output().values()) l += 0.5 * v * v;
    if (accumulate) (void)net.backward(acts, acts.output());
    return l;
  };
  EXPECT_LT(finite_diff_check(loss, net, 1e-6).max_relative_error, 1e-6);
}

TEST(Mlp, ConstantLossPassesTrivially) {
  Rng rng(2);
  MlpNet net({3, 4, 2}, rng);
  const GradCheckResult r = finite_diff_check([](bool) { return 1.25; }, net, 1e-4);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.max_relative_error, 0.0);
}

TEST(Mlp, NonFiniteLossIsReported) {
  Rng rng(2);
  MlpNet net({2, 2}, rng);
  EXPECT_THROW((void)finite_diff_check([](bool) { return std::nan(""); }, net, 1e-4), NumericError);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Rng rng(4);
  MlpNet net({3, 5, 2}, rng);
  const std::uint64_t before = net.parameter_hash();
  adam_step(net, AdamHyper{});
  EXPECT_EQ(net.parameter_hash(), before);
  EXPECT_EQ(net.step_count(), 1U);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  MlpNet net = MlpNet::zeros({1, 1});
  net.layers()[0].weight(0, 0) = 0.3;
  net.layers()[0].grad_weight(0, 0) = -2.5;
  AdamHyper hyper;
  hyper.learning_rate = 1e-3;
  adam_step(net, hyper);
  // m̂ = g, v̂ = g², step = lr·g/(|g| + ε)
  EXPECT_NEAR(net.layers()[0].weight(0, 0), 0.3 + 1e-3 * 2.5 / (2.5 + 1e-8), 1e-15);
  EXPECT_EQ(net.layers()[0].grad_weight(0, 0), 0.0);
}

TEST(Adam, IdenticalNetsAndGradsStayIdentical) {
  Rng r1(9), r2(9);
  MlpNet a({3, 4, 2}, r1);
  MlpNet b({3, 4, 2}, r2);
  Rng g(10);
  for (int step = 0; step < 3; ++step) {
    std::vector<double> grads;
    a.for_each_parameter([&](double&, double& gr) { gr = g.normal(); grads.push_back(gr); });
    std::size_t i = 0;
    b.for_each_parameter([&](double&, double& gr) { gr = grads[i++]; });
    adam_step(a, AdamHyper{});
    adam_step(b, AdamHyper{});
  }
  EXPECT_EQ(a.parameter_hash(), b.parameter_hash());
}

TEST(Mlp, TextRoundTripIsExact) {
  Rng rng(12);
  MlpNet net({3, 5, 2}, rng);
  std::stringstream ss;
  net.write(ss);
  const MlpNet back = MlpNet::read(ss);
  EXPECT_EQ(back.layer_dims(), net.layer_dims());
  EXPECT_EQ(back.parameter_hash(), net.parameter_hash());
}

TEST(Mlp, LargeParametersStayFinite) {
  Rng rng(13);
  MlpNet net({4, 16, 3}, rng);
  net.for_each_parameter([&](double& p, double&) { p = 1e3 * (rng.uniform(-1, 1)); });
  const Matrix x = rng.normal_matrix(5, 4);
  const Activations acts = net.forward(x);
  EXPECT_TRUE(acts.output().all_finite());
  const Matrix g = net.backward(acts, Matrix(5, 3, 1.0));
  EXPECT_TRUE(g.all_finite());
}

TEST(Rng, SplitStreamsAreIndependentOfConsumption) {
  Rng a(42), b(42);
  (void)a.normal();
  (void)a.normal();
  Rng ca = a.split("data");
  Rng cb = b.split("data");
  EXPECT_EQ(ca.next(), cb.next());
  EXPECT_NE(a.split("data").next(), a.split("model").next());
}

}  // namespace
}  // namespace fcl
