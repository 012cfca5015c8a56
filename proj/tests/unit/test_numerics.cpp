#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hictl/numerics/adam.hpp"
#include "hictl/numerics/functions.hpp"
#include "hictl/numerics/grad_check.hpp"
#include "hictl/numerics/kernels.hpp"
#include "hictl/numerics/ops.hpp"
#include "test_support.hpp"

using namespace hictl;
using namespace hictl::num;
using hictl::testing::random_tensor;
using hictl::testing::weighted_sum;

TEST(Cosine, IdentityAndOrthogonal) {
  EXPECT_FLOAT_EQ(cosine(Tensor<float>::vector({1, 0}), Tensor<float>::vector({1, 0})), 1.0f);
  EXPECT_FLOAT_EQ(cosine(Tensor<float>::vector({1, 0}), Tensor<float>::vector({0, 1})), 0.0f);
}

TEST(Cosine, HandArithmetic) {
  // 32 / (sqrt(14) * sqrt(77))
  const double expected = 32.0 / (std::sqrt(14.0) * std::sqrt(77.0));
  EXPECT_NEAR(expected, 0.9746318, 1e-7);
  EXPECT_NEAR(cosine(Tensor<double>::vector({1, 2, 3}), Tensor<double>::vector({4, 5, 6})), expected, 1e-12);
}

TEST(Cosine, ZeroNormIsAnError) {
  EXPECT_THROW(cosine(Tensor<double>::vector({0, 0}), Tensor<double>::vector({1, 0})), DegenerateInputError);
  EXPECT_THROW(cosine(Tensor<double>::vector({1, 0}), Tensor<double>::vector({0, 0})), DegenerateInputError);
}

TEST(Cosine, SelfSimilarityAndSymmetry) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(64));
    auto u = random_tensor<float>({d}, rng, 1.0 + trial);
    auto v = random_tensor<float>({d}, rng);
    EXPECT_NEAR(cosine(u, u), 1.0f, 1e-6f);
    EXPECT_EQ(cosine(u, v), cosine(v, u));
    EXPECT_LE(std::abs(cosine(u, v)), 1.0f);
  }
}

TEST(Softmax, Examples) {
  auto uniform = softmax(Tensor<double>::vector({0, 0, 0}));
  for (double p : uniform.values()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);

  auto stable = softmax(Tensor<float>::vector({1000, 0}));
  EXPECT_NEAR(stable[0], 1.0f, 1e-6f);
  EXPECT_NEAR(stable[1], 0.0f, 1e-6f);

  auto two = softmax(Tensor<double>::vector({1, 2}));
  EXPECT_NEAR(two[0], 1.0 / (1.0 + std::exp(1.0)), 1e-12);
  EXPECT_NEAR(two[0], 0.2689414, 1e-7);
  EXPECT_NEAR(two[1], 0.7310586, 1e-7);
}

TEST(Softmax, SumsToOneForLongInputs) {
  Rng rng(5);
  for (int len : {1, 7, 1000, 100000}) {
    auto x = random_tensor<float>({len}, rng, 30.0);
    auto p = softmax(x);
    double total = 0.0;
    for (float v : p.values()) {
      EXPECT_GT(v, -1e-30f);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-6) << "len=" << len;
  }
}

TEST(Softmax, RejectsNonFinite) {
  EXPECT_THROW(softmax(Tensor<float>::vector({1.0f, NAN})), NumericalError);
}

TEST(Gelu, Examples) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(30.0), 30.0, 1e-9);
  const double expected = 0.5 * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (1.0 + 0.044715)));
  EXPECT_NEAR(gelu(1.0), expected, 1e-12);
  EXPECT_NEAR(gelu(1.0), 0.8411920, 1e-7);
}

TEST(Gelu, MonotoneOnTestedRange) {
  double prev = gelu(-0.7);
  for (double x = -0.7; x <= 20.0; x += 0.01) {
    const double y = gelu(x);
    EXPECT_GE(y, prev - 1e-15) << x;
    prev = y;
  }
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  ParameterStore<float> ps;
  ps.add("w", Tensor<float>::vector({1.5f, -2.0f}));
  AdamState<float> st;
  for (int i = 0; i < 5; ++i) {
    ps[0].grad = Tensor<float>({2});
    adam_step(ps, st, 0.1);
  }
  EXPECT_EQ(ps[0].value, Tensor<float>::vector({1.5f, -2.0f}));
  EXPECT_EQ(st.step, 5);
}

TEST(Adam, SingleStepHandComputation) {
  // m_hat = g = 1, v_hat = g^2 = 1, so the update is lr * 1 / (1 + eps).
  ParameterStore<double> ps;
  ps.add("w", Tensor<double>::vector({0.25}));
  ps[0].grad = Tensor<double>::vector({1.0});
  AdamState<double> st;
  adam_step(ps, st, 0.1);
  EXPECT_NEAR(ps[0].value[0], 0.25 - 0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(0.25 - ps[0].value[0], 0.1, 1e-7);
}

TEST(Adam, PureFunctionOfInputs) {
  Rng rng(3);
  ParameterStore<float> a;
  a.add("w", random_tensor<float>({4, 3}, rng));
  AdamState<float> sa;
  a[0].grad = random_tensor<float>({4, 3}, rng);
  adam_step(a, sa, 0.01);
  ParameterStore<float> b = a;
  AdamState<float> sb = sa;
  const auto g = random_tensor<float>({4, 3}, rng);
  a[0].grad = g;
  b[0].grad = g;
  adam_step(a, sa, 0.01);
  adam_step(b, sb, 0.01);
  EXPECT_EQ(a[0].value, b[0].value);
  EXPECT_EQ(sa.m[0], sb.m[0]);
  EXPECT_EQ(sa.v[0], sb.v[0]);
}

TEST(Adam, DimMismatch) {
  ParameterStore<float> ps;
  ps.add("w", Tensor<float>({2}));
  ps[0].grad = Tensor<float>({3});
  AdamState<float> st;
  EXPECT_THROW(adam_step(ps, st, 0.1), DimError);
}

TEST(GradCheck, QuadraticLoss) {
  Rng rng(1);
  ParameterStore<double> ps;
  ps.add("p", random_tensor<double>({5}, rng));
  // |p|^2 = p . p^T
  auto quad = [&](Tape<double>& tp) {
    Var p = tp.param(ps[0]);
    return ops::matmul_nt(tp, p, ops::stack_rows(tp, std::vector<Var>{p}));
  };
  GradCheckOptions opt;
  opt.h = 1e-3;
  const auto res = grad_check<double>({&ps}, quad, opt);
  EXPECT_LT(res.max_rel_error, 1e-4);
  EXPECT_EQ(res.coords_checked, 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(ps[0].grad[i], 2.0 * ps[0].value[i], 1e-12);
}

// Serial and OpenMP kernels must agree bit for bit.
TEST(Kernels, ParallelMatchesSerialExactly) {
  Rng rng(99);
  for (auto [m, kk, n] : {std::tuple{3, 5, 7}, {64, 64, 64}, {130, 64, 256}, {1, 300, 2}}) {
    auto a = random_tensor<float>({m, kk}, rng);
    auto b = random_tensor<float>({kk, n}, rng);
    auto bt = random_tensor<float>({n, kk}, rng);
    auto at = random_tensor<float>({kk, m}, rng);
    std::vector<float> c1(static_cast<std::size_t>(m) * n), c2(c1.size());
    kernels::serial::matmul(a.data(), b.data(), c1.data(), m, kk, n, false);
    kernels::parallel::matmul(a.data(), b.data(), c2.data(), m, kk, n, false);
    EXPECT_EQ(c1, c2);
    kernels::serial::matmul_nt(a.data(), bt.data(), c1.data(), m, kk, n, true);
    kernels::parallel::matmul_nt(a.data(), bt.data(), c2.data(), m, kk, n, true);
    EXPECT_EQ(c1, c2);
    kernels::serial::matmul_tn(at.data(), b.data(), c1.data(), kk, m, n, false);
    kernels::parallel::matmul_tn(at.data(), b.data(), c2.data(), kk, m, n, false);
    EXPECT_EQ(c1, c2);

    std::vector<float> s1(a.values()), s2(a.values());
    kernels::serial::softmax_rows(s1.data(), m, kk);
    kernels::parallel::softmax_rows(s2.data(), m, kk);
    EXPECT_EQ(s1, s2);

    std::vector<float> g1(a.size()), g2(a.size());
    kernels::serial::gelu(a.data(), g1.data(), a.size());
    kernels::parallel::gelu(a.data(), g2.data(), a.size());
    EXPECT_EQ(g1, g2);

    auto gamma = random_tensor<float>({kk}, rng);
    auto beta = random_tensor<float>({kk}, rng);
    auto dy = random_tensor<float>({m, kk}, rng);
    std::vector<float> y1(a.size()), y2(a.size()), mu1(m), mu2(m), rs1(m), rs2(m);
    kernels::serial::layer_norm(a.data(), gamma.data(), beta.data(), y1.data(), mu1.data(), rs1.data(), m, kk, 1e-5f);
    kernels::parallel::layer_norm(a.data(), gamma.data(), beta.data(), y2.data(), mu2.data(), rs2.data(), m, kk, 1e-5f);
    EXPECT_EQ(y1, y2);
    std::vector<float> dx1(a.size()), dx2(a.size()), dg1(kk), dg2(kk), db1(kk), db2(kk);
    kernels::serial::layer_norm_backward(a.data(), gamma.data(), mu1.data(), rs1.data(), dy.data(), dx1.data(), dg1.data(), db1.data(), m, kk);
    kernels::parallel::layer_norm_backward(a.data(), gamma.data(), mu2.data(), rs2.data(), dy.data(), dx2.data(), dg2.data(), db2.data(), m, kk);
    EXPECT_EQ(dx1, dx2);
    EXPECT_EQ(dg1, dg2);
    EXPECT_EQ(db1, db2);
  }
}

TEST(Kernels, MatmulMatchesNaiveLoop) {
  Rng rng(4);
  const int m = 6, kk = 5, n = 4;
  auto a = random_tensor<double>({m, kk}, rng);
  auto b = random_tensor<double>({kk, n}, rng);
  std::vector<double> c(static_cast<std::size_t>(m) * n);
  kernels::serial::matmul(a.data(), b.data(), c.data(), m, kk, n, false);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int p = 0; p < kk; ++p) s += a(i, p) * b(p, j);
      EXPECT_NEAR(c[static_cast<std::size_t>(i) * n + j], s, 1e-12);
    }
  }
}

// Every differentiable op: tape gradient vs central differences, 10 seeded
// trials, h = 1e-3, fp64.
class OpGradient : public ::testing::Test {
 protected:
  void check(const std::function<Var(Tape<double>&, std::vector<Var>&)>& build,
             const std::vector<Shape>& input_dims, std::uint64_t seed) {
    for (int trial = 0; trial < 10; ++trial) {
      Rng rng(seed * 1000 + trial);
      ParameterStore<double> ps;
      for (std::size_t i = 0; i < input_dims.size(); ++i) {
        ps.add("in" + std::to_string(i), random_tensor<double>(input_dims[i], rng));
      }
      Tensor<double> weights;
      auto loss = [&](Tape<double>& tp) {
        std::vector<Var> ins;
        for (auto& p : ps) ins.push_back(tp.param(p));
        Var out = build(tp, ins);
        if (weights.size() != tp.value(out).size()) {
          Rng wr(seed + 17);
          weights = random_tensor<double>(tp.value(out).dims(), wr);
        }
        return weighted_sum(tp, out, weights);
      };
      GradCheckOptions opt;
      opt.h = 1e-3;
      const auto res = grad_check<double>({&ps}, loss, opt);
      EXPECT_LT(res.max_rel_error, 1e-3) << "trial " << trial << " worst " << res.worst_param << "["
                                         << res.worst_index << "] analytic " << res.worst_analytic
                                         << " numeric " << res.worst_numeric;
    }
  }
};

TEST_F(OpGradient, Matmul) {
  check([](auto& tp, auto& in) { return ops::matmul(tp, in[0], in[1]); }, {{3, 4}, {4, 5}}, 1);
}
TEST_F(OpGradient, MatmulNt) {
  check([](auto& tp, auto& in) { return ops::matmul_nt(tp, in[0], in[1]); }, {{3, 4}, {5, 4}}, 2);
}
TEST_F(OpGradient, Linear) {
  check([](auto& tp, auto& in) { return ops::linear(tp, in[0], in[1], in[2]); }, {{3, 4}, {4, 6}, {6}}, 3);
}
TEST_F(OpGradient, AddScaleGelu) {
  check([](auto& tp, auto& in) { return ops::gelu(tp, ops::scale(tp, ops::add(tp, in[0], in[1]), 1.7)); },
        {{3, 4}, {3, 4}}, 4);
}
TEST_F(OpGradient, LayerNorm) {
  check([](auto& tp, auto& in) { return ops::layer_norm(tp, in[0], in[1], in[2]); }, {{4, 6}, {6}, {6}}, 5);
}
TEST_F(OpGradient, GatherSelectStack) {
  check(
      [](auto& tp, auto& in) {
        const std::vector<int> ids{2, 0, 2, 4};
        Var g = ops::gather_rows(tp, in[0], ids);
        std::vector<Var> rows{ops::select_row(tp, g, 3), ops::select_row(tp, g, 0), ops::select_row(tp, in[0], 1)};
        return ops::stack_rows(tp, std::span<const Var>(rows));
      },
      {{5, 3}}, 6);
}
TEST_F(OpGradient, CosineMatrix) {
  check([](auto& tp, auto& in) { return ops::cosine_matrix(tp, in[0], in[1]); }, {{3, 8}, {4, 8}}, 7);
  check([](auto& tp, auto& in) { return ops::cosine_matrix(tp, in[0], in[0]); }, {{4, 8}}, 8);
}
TEST_F(OpGradient, Attention) {
  check([](auto& tp, auto& in) { return ops::attention(tp, in[0], in[1], in[2], 2, false); },
        {{3, 8}, {5, 8}, {5, 8}}, 9);
  check([](auto& tp, auto& in) { return ops::attention(tp, in[0], in[1], in[2], 4, true); },
        {{4, 8}, {4, 8}, {4, 8}}, 10);
}
TEST_F(OpGradient, CrossEntropy) {
  check(
      [](auto& tp, auto& in) {
        const std::vector<int> targets{1, 0, 4};
        return ops::cross_entropy_rows(tp, in[0], targets);
      },
      {{3, 5}}, 11);
}
TEST_F(OpGradient, InfoNce) {
  check(
      [](auto& tp, auto& in) {
        const std::vector<int> negs{0, 3, 5};
        return ops::info_nce(tp, in[0], 2, negs, 0.7);
      },
      {{6}}, 12);
}

TEST(Ops, CrossEntropyHandValue) {
  Tape<double> tp;
  Var l = tp.constant(Tensor<double>({1, 3}, {1.0, 0.0, 0.0}));
  const std::vector<int> target{0};
  const double v = tp.value(ops::cross_entropy_rows(tp, l, target)).item();
  EXPECT_NEAR(v, std::log(std::exp(1.0) + 2.0) - 1.0, 1e-12);
}

TEST(Ops, EmptyCrossEntropyIsZero) {
  Tape<double> tp;
  Var l = tp.constant(Tensor<double>({0, 3}));
  EXPECT_EQ(tp.value(ops::cross_entropy_rows(tp, l, std::vector<int>{})).item(), 0.0);
}

TEST(Ops, NormalizeZeroRowThrows) {
  Tape<double> tp;
  Var x = tp.constant(Tensor<double>({2, 2}, {1, 0, 0, 0}));
  EXPECT_THROW(ops::l2_normalize_rows(tp, x), DegenerateInputError);
}

TEST(Ops, GatherGradientTouchesOnlySelectedRows) {
  ParameterStore<double> ps;
  Rng rng(2);
  ps.add("table", random_tensor<double>({6, 3}, rng));
  Tape<double> tp;
  Var g = ops::gather_rows(tp, tp.param(ps[0]), std::vector<int>{1, 4, 1});
  Tensor<double> ones({3, 3}, 1.0);
  tp.backward(weighted_sum(tp, g, ones));
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 3; ++c) {
      const double expected = r == 1 ? 2.0 : (r == 4 ? 1.0 : 0.0);
      EXPECT_EQ(ps[0].grad(r, c), expected);
    }
  }
}

TEST(Ops, FrozenParameterReceivesNoGradient) {
  ParameterStore<double> ps;
  Rng rng(8);
  ps.add("w", random_tensor<double>({3, 3}, rng));
  ps.add("x", random_tensor<double>({2, 3}, rng));
  ps[0].trainable = false;
  Tape<double> tp;
  Var y = ops::matmul(tp, tp.param(ps[1]), tp.param(ps[0]));
  tp.backward(weighted_sum(tp, y, Tensor<double>({2, 3}, 1.0)));
  EXPECT_TRUE(ps[0].grad.empty());
  EXPECT_FALSE(ps[1].grad.empty());
}
