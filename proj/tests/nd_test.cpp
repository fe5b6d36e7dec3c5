#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "docqg/nd/grad_check.hpp"
#include "docqg/nd/graph.hpp"

using docqg::nd::Array;
using docqg::nd::Graph;
using docqg::nd::NamedArray;
using docqg::nd::Var;
namespace nd = docqg::nd;

namespace {

Array<double> random_array(std::mt19937_64& rng, nd::Shape shape, double lo = -1.0,
                           double hi = 1.0) {
  Array<double> a(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : a.values()) v = dist(rng);
  return a;
}

}  // namespace

TEST(Kernels, SoftmaxOfZerosIsUniform) {
  Graph<double> g;
  auto y = g.softmax(g.constant(Array<double>::row({0.0, 0.0, 0.0})));
  for (double v : y.value().values()) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(Kernels, SoftmaxMatchesDirectEvaluation) {
  // tests/oracles/softmax_oracle.py
  Graph<double> g;
  auto y = g.softmax(g.constant(Array<double>::row({0.9, 0.5, 0.3})));
  EXPECT_NEAR(y.value()[0], 0.45062670595568977, 1e-15);
  EXPECT_NEAR(y.value()[1], 0.30206411428110647, 1e-15);
  EXPECT_NEAR(y.value()[2], 0.24730917976320385, 1e-15);
}

TEST(Kernels, SoftmaxRowsAreProbabilityVectors) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Graph<double> g;
    auto y = g.softmax(g.constant(random_array(rng, {4, 7}, -30.0, 30.0)));
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (double v : y.value().row_span(r)) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Kernels, SoftmaxSurvivesLargeLogits) {
  Graph<double> g;
  auto y = g.softmax(g.constant(Array<double>::row({1000.0, 999.0})));
  EXPECT_TRUE(y.value().all_finite());
  EXPECT_NEAR(y.value()[0] + y.value()[1], 1.0, 1e-12);
}

TEST(Kernels, MatmulIdentity) {
  Graph<double> g;
  auto I = g.constant(Array<double>::matrix({{1, 0}, {0, 1}}));
  auto B = g.constant(Array<double>::matrix({{3, 4}, {5, 6}}));
  auto C = nd::matmul(I, B);
  EXPECT_EQ(C.value(), Array<double>::matrix({{3, 4}, {5, 6}}));
}

TEST(Kernels, MatmulTransposedRight) {
  Graph<double> g;
  auto A = g.constant(Array<double>::matrix({{1, 2}, {3, 4}}));
  auto B = g.constant(Array<double>::matrix({{1, 0}, {1, 1}, {0, 2}}));
  EXPECT_EQ(nd::matmul(A, B, true).value(),
            Array<double>::matrix({{1, 3, 4}, {3, 7, 8}}));
}

TEST(Kernels, SigmoidStaysStrictlyInsideUnitInterval) {
  Graph<double> g;
  auto y = g.sigmoid(g.constant(Array<double>::row({-1000.0, -40.0, 0.0, 40.0, 1000.0})));
  for (double v : y.value().values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_DOUBLE_EQ(y.value()[2], 0.5);
}

TEST(Kernels, MaxOverAxisBothDirections) {
  Graph<double> g;
  auto M = g.constant(Array<double>::matrix({{0.2, 0.9}, {0.5, 0.1}, {0.3, 0.3}}));
  EXPECT_EQ(g.max_over_axis(M, 1).value(), Array<double>::row({0.9, 0.5, 0.3}));
  EXPECT_EQ(g.max_over_axis(M, 0).value(), Array<double>::row({0.5, 0.9}));
}

TEST(Kernels, ConcatAlongBothAxes) {
  Graph<double> g;
  auto a = g.constant(Array<double>::row({1, 2}));
  auto b = g.constant(Array<double>::row({3}));
  EXPECT_EQ(g.concat({a, b}, 1).value(), Array<double>::row({1, 2, 3}));
  auto c = g.constant(Array<double>::row({5, 6}));
  EXPECT_EQ(g.concat({a, c}, 0).value(), Array<double>::matrix({{1, 2}, {5, 6}}));
}

TEST(Kernels, EmbeddingLookupAndScaleRows) {
  Graph<double> g;
  auto table = g.constant(Array<double>::matrix({{0, 0}, {1, 2}, {3, 4}}));
  auto rows = g.embedding_lookup(table, {2, 1});
  EXPECT_EQ(rows.value(), Array<double>::matrix({{3, 4}, {1, 2}}));
  auto scaled = g.scale_rows(rows, g.constant(Array<double>::row({0.5, 2.0})));
  EXPECT_EQ(scaled.value(), Array<double>::matrix({{1.5, 2}, {2, 4}}));
  EXPECT_THROW(g.embedding_lookup(table, {3}), nd::ShapeError);
}

TEST(Kernels, ShapeMismatchNamesKernelAndShapes) {
  Graph<double> g;
  auto a = g.constant(Array<double>({2, 3}));
  auto b = g.constant(Array<double>({4, 5}));
  try {
    nd::matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const nd::ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos);
    EXPECT_NE(msg.find("[2x3]"), std::string::npos);
    EXPECT_NE(msg.find("[4x5]"), std::string::npos);
  }
  EXPECT_THROW(nd::add(a, b), nd::ShapeError);
  EXPECT_THROW(nd::mul(a, b), nd::ShapeError);
  EXPECT_THROW(g.scale_rows(a, g.constant(Array<double>::row({1, 2, 3}))), nd::ShapeError);
}

TEST(Kernels, NonFiniteInputsRejected) {
  Graph<double> g;
  EXPECT_THROW(g.constant(Array<double>::row({1.0, NAN})), nd::NonFiniteError);
  Array<double> inf = Array<double>::row({INFINITY});
  EXPECT_THROW(g.parameter(inf), nd::NonFiniteError);
  auto big = g.constant(Array<double>::row({1e300}));
  EXPECT_THROW(g.mul(big, big), nd::NonFiniteError);
}

TEST(Backward, SumHasUnitGradient) {
  Graph<double> g;
  auto x = g.input(Array<double>::vector({1.0, -2.0, 3.0}));
  auto grads = g.backward(nd::sum(x));
  EXPECT_EQ(grads.at(x).storage(), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, SigmoidAtZeroHasQuarterSlope) {
  Graph<double> g;
  auto x = g.input(Array<double>::row({0.0, 0.0, 0.0, 0.0}));
  auto grads = g.backward(nd::sum(g.sigmoid(x)));
  for (double v : grads.at(x).values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Backward, LossGradientIsOne) {
  Graph<double> g;
  auto x = g.input(Array<double>::row({2.0}));
  auto loss = g.tanh(x);
  auto grads = g.backward(loss);
  EXPECT_DOUBLE_EQ(grads.at(loss)[0], 1.0);
}

TEST(Backward, NonScalarLossRejected) {
  Graph<double> g;
  auto x = g.input(Array<double>::row({1.0, 2.0}));
  EXPECT_THROW(g.backward(g.tanh(x)), nd::ShapeError);
}

TEST(Backward, GradientBuffersMatchParameterShapes) {
  std::mt19937_64 rng(1);
  Array<double> W = random_array(rng, {3, 2});
  Array<double> b = random_array(rng, {1, 2});
  Graph<double> g;
  auto w = g.parameter(W);
  auto bias = g.parameter(b);
  auto x = g.constant(random_array(rng, {4, 3}));
  auto grads = g.backward(nd::sum(g.tanh(g.add(nd::matmul(x, w), bias))));
  EXPECT_EQ(grads.at(w).shape(), W.shape());
  EXPECT_EQ(grads.at(bias).shape(), b.shape());
}

TEST(Record, IsTopologicallyOrdered) {
  Graph<double> g;
  auto a = g.input(Array<double>::row({0.1, 0.2}));
  auto b = g.softmax(g.tanh(a));
  nd::sum(g.concat({a, b}, 1));
  for (std::size_t id = 0; id < g.size(); ++id) {
    for (auto in : g.node(id).inputs) EXPECT_LT(in, id);
  }
}

TEST(Record, ReplayIsBitIdentical) {
  std::mt19937_64 rng(5);
  Array<double> W = random_array(rng, {3, 3});
  auto build = [&](Graph<double>& g) {
    auto w = g.parameter(W);
    auto x = g.constant(random_array(rng, {2, 3}));
    return nd::sum(g.softmax(g.tanh(nd::matmul(x, w))));
  };
  std::mt19937_64 saved = rng;
  Graph<double> g1;
  auto l1 = build(g1);
  const double first = l1.value()[0];
  g1.forward();
  EXPECT_EQ(l1.value()[0], first);
  rng = saved;
  Graph<double> g2;
  auto l2 = build(g2);
  EXPECT_EQ(l2.value()[0], first);
}

TEST(GradCheck, QuadraticMatchesAnalytic) {
  Array<double> x = Array<double>::vector({1.0, 2.0});
  std::vector<NamedArray<double>> params{{"x", &x}};
  auto f = [](Graph<double>&, std::span<const Var<double>> v) {
    return nd::sum(nd::mul(v[0], v[0]));
  };
  Graph<double> g;
  auto xv = g.parameter(x);
  auto grads = g.backward(nd::sum(nd::mul(xv, xv)));
  EXPECT_DOUBLE_EQ(grads.at(xv)[0], 2.0);
  EXPECT_DOUBLE_EQ(grads.at(xv)[1], 4.0);
  auto report = nd::grad_check<double>(f, params, 1e-5, 1e-6);
  ASSERT_EQ(report.params.size(), 1u);
  EXPECT_TRUE(report.passed());
  EXPECT_LT(report.params[0].max_rel_error, 1e-6);
}

TEST(GradCheck, ConstantFunctionHasZeroGradient) {
  Array<double> x = Array<double>::vector({0.3, -0.7, 1.1});
  std::vector<NamedArray<double>> params{{"x", &x}};
  auto f = [](Graph<double>& g, std::span<const Var<double>>) {
    return g.constant(Array<double>({1, 1}, 4.2));
  };
  auto report = nd::grad_check<double>(f, params, 1e-5, 1e-6);
  EXPECT_TRUE(report.passed());
  EXPECT_EQ(report.params[0].max_abs_error, 0.0);
}

TEST(GradCheck, ReportsInjectedFault) {
  Array<double> x = Array<double>::vector({1.0, 2.0});
  std::vector<NamedArray<double>> params{{"x", &x}};
  auto f = [](Graph<double>&, std::span<const Var<double>> v) {
    return nd::sum(nd::mul(v[0], v[0]));
  };
  auto tamper = +[](std::size_t, Array<double>& grad) { grad[0] *= 1.01; };
  auto report = nd::grad_check<double>(f, params, 1e-5, 1e-4, tamper);
  EXPECT_FALSE(report.passed());
}

// Composite touching every kernel; five parameter arrays.
TEST(GradCheck, RandomCompositeOfAllKernelsOverManySeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    Array<double> A = random_array(rng, {3, 4});
    Array<double> B = random_array(rng, {4, 3});
    Array<double> bias = random_array(rng, {1, 3});
    Array<double> table = random_array(rng, {5, 3});
    Array<double> scale = random_array(rng, {3, 3});
    std::vector<NamedArray<double>> params{
        {"A", &A}, {"B", &B}, {"bias", &bias}, {"table", &table}, {"scale", &scale}};
    auto f = [](Graph<double>& g, std::span<const Var<double>> v) {
      auto emb = g.embedding_lookup(v[3], {1, 4, 1});
      auto h = g.tanh(g.add(nd::matmul(v[0], v[1]), v[2]));
      auto m = g.mul(h, g.sigmoid(emb));
      auto wide = g.concat({m, emb}, 1);
      auto tall = g.concat({m, v[4]}, 0);
      auto attn = g.softmax(g.max_over_axis(wide, 1));
      auto cols = g.softmax(g.max_over_axis(tall, 0));
      auto ctx = g.scale_rows(nd::matmul(m, v[4], true), attn);
      auto logp = g.log_floor(cols, 1e-12);
      return g.add(nd::sum(g.mul(ctx, ctx)), nd::sum(logp));
    };
    auto report = nd::grad_check<double>(f, params, 1e-5, 1e-4);
    for (const auto& p : report.params) {
      EXPECT_TRUE(p.passed) << "seed " << seed << " param " << p.name << " rel "
                            << p.max_rel_error;
    }
  }
}
