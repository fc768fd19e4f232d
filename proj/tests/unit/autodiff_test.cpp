#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>

#include "oracles.hpp"
#include "venngan/autodiff.hpp"
#include "venngan/networks.hpp"

namespace venngan {
namespace {

using testing::check_gradients;
using testing::ReferenceMlp;
using testing::RowMat;
using testing::to_matrix;

constexpr double kGradTolerance = 1e-4;
constexpr double kKinkMargin = 1e-3;
constexpr int kProbes = 100;

TEST(Tensor, StorageIsCacheLineAligned) {
  for (std::size_t n = 1; n < 20; ++n) {
    const Tensor t(n, 3);
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(t.data()) % 64, 0u);
    const Tensor copy = t;
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(copy.data()) % 64, 0u);
  }
}

TEST(Autodiff, MatmulIdentity) {
  auto a = ad::constant(Tensor{{1, 0}, {0, 1}});
  auto b = ad::constant(Tensor{{3}, {4}});
  EXPECT_EQ(ad::matmul(a, b)->value(), (Tensor{{3}, {4}}));
}

TEST(Autodiff, MatmulHandArithmetic) {
  auto out = ad::matmul(ad::constant(Tensor{{1, 2}}), ad::constant(Tensor{{3}, {4}}));
  EXPECT_EQ(out->value(), (Tensor{{11}}));
}

TEST(Autodiff, MatmulShapeMismatch) {
  EXPECT_THROW(ad::matmul(ad::constant(Tensor(2, 3)), ad::constant(Tensor(2, 3))), ShapeError);
}

TEST(Autodiff, MatmulGradientMatchesFiniteDifferences) {
  auto a = ad::parameter(Tensor{{1, 2}});
  auto b = ad::constant(Tensor{{3}, {4}});
  auto build = [&] { return ad::reduce_sum(ad::matmul(a, b)); };
  ad::backward(build());
  EXPECT_NEAR((*a->grad())(0, 0), 3.0, 1e-12);
  EXPECT_NEAR((*a->grad())(0, 1), 4.0, 1e-12);
  a->zero_grad();
  const auto check = check_gradients(build, {a});
  EXPECT_LT(check.max_relative_error, 1e-8) << check.worst;
}

TEST(Autodiff, ElementwiseExamples) {
  EXPECT_DOUBLE_EQ(ad::leaky_relu(ad::constant(Tensor{{-1.0}}))->value()(0, 0), -0.2);
  EXPECT_DOUBLE_EQ(ad::reduce_mean(ad::constant(Tensor{{2, 4}}))->value()(0, 0), 3.0);
  EXPECT_NEAR(ad::log_sigmoid(ad::constant(Tensor{{0.0}}))->value()(0, 0), -std::log(2.0), 1e-15);
}

TEST(Autodiff, ElementwiseShapeMismatch) {
  auto a = ad::constant(Tensor(2, 3));
  auto b = ad::constant(Tensor(3, 2));
  EXPECT_THROW(ad::add(a, b), ShapeError);
  EXPECT_THROW(ad::sub(a, b), ShapeError);
  EXPECT_THROW(ad::mul(a, b), ShapeError);
  EXPECT_THROW(ad::add_row(a, ad::constant(Tensor(1, 2))), ShapeError);
  EXPECT_THROW(ad::mul_row(a, ad::constant(Tensor(2, 3))), ShapeError);
}

TEST(Autodiff, LeakyReluDerivativeAtZeroIsOne) {
  auto p = ad::parameter(Tensor{{0.0, -0.5, 0.5}});
  ad::backward(ad::reduce_sum(ad::leaky_relu(p)));
  EXPECT_EQ(*p->grad(), (Tensor{{1.0, 0.2, 1.0}}));
}

TEST(Autodiff, LogSigmoidIsStableForLargeInputs) {
  auto out = ad::log_sigmoid(ad::constant(Tensor{{-800.0, 800.0}}));
  EXPECT_DOUBLE_EQ(out->value()(0, 0), -800.0);
  EXPECT_DOUBLE_EQ(out->value()(0, 1), 0.0);
}

TEST(Autodiff, NonFiniteValuesAreReported) {
  EXPECT_THROW(Tensor(1, 1, std::nan("")), NumericError);
  EXPECT_THROW(Tensor(1, 2, std::vector<double>{1.0, INFINITY}), NumericError);
  EXPECT_THROW(ad::square(ad::constant(Tensor{{1e200}})), NumericError);
}

TEST(Autodiff, SoftmaxCrossEntropyUniform) {
  const std::size_t target[] = {1};
  auto loss = ad::softmax_cross_entropy(ad::constant(Tensor{{0, 0, 0}}), target);
  EXPECT_NEAR(loss->value()(0, 0), std::log(3.0), 1e-15);
}

TEST(Autodiff, SoftmaxCrossEntropyConfident) {
  const std::size_t target[] = {0};
  auto loss = ad::softmax_cross_entropy(ad::constant(Tensor{{10, 0, 0}}), target);
  // -log(e^10 / (e^10 + 2)) evaluated directly.
  const double expected = -std::log(std::exp(10.0) / (std::exp(10.0) + 2.0));
  EXPECT_NEAR(loss->value()(0, 0), expected, 1e-15);
  EXPECT_NEAR(loss->value()(0, 0), 9.08e-5, 1e-7);
}

TEST(Autodiff, SoftmaxCrossEntropyGradient) {
  Rng rng(11);
  auto logits = ad::parameter(rng.uniform_tensor(2, 4, -2.0, 2.0));
  const std::vector<std::size_t> targets{3, 1};
  const auto check = check_gradients([&] { return ad::softmax_cross_entropy(logits, targets); }, {logits});
  EXPECT_LT(check.max_relative_error, kGradTolerance) << check.worst;
}

TEST(Autodiff, SoftmaxCrossEntropyTargetOutOfRange) {
  const std::size_t target[] = {3};
  EXPECT_THROW(ad::softmax_cross_entropy(ad::constant(Tensor{{0, 0, 0}}), target), std::out_of_range);
  const std::size_t too_few[] = {0};
  EXPECT_THROW(ad::softmax_cross_entropy(ad::constant(Tensor(2, 3)), too_few), ShapeError);
}

TEST(Autodiff, BackwardOfSumIsOnes) {
  Rng rng(3);
  auto p = ad::parameter(rng.normal_tensor(3, 4));
  ad::backward(ad::reduce_sum(p));
  EXPECT_EQ(*p->grad(), Tensor::ones(3, 4));
}

TEST(Autodiff, BackwardOfMeanSquareSingleElement) {
  auto p = ad::parameter(Tensor{{3.0}});
  ad::backward(ad::reduce_mean(ad::square(p)));
  EXPECT_DOUBLE_EQ((*p->grad())(0, 0), 6.0);
}

TEST(Autodiff, BackwardRejectsNonScalarRoot) {
  auto p = ad::parameter(Tensor(2, 2, 1.0));
  EXPECT_THROW(ad::backward(ad::square(p)), ShapeError);
}

TEST(Autodiff, RepeatedBackwardAccumulates) {
  auto p = ad::parameter(Tensor{{1.5, -2.0}});
  auto root = ad::reduce_sum(ad::square(p));
  ad::backward(root);
  ad::backward(root);
  EXPECT_EQ(*p->grad(), (Tensor{{6.0, -8.0}}));
  p->zero_grad();
  EXPECT_FALSE(p->grad().has_value());
}

TEST(Autodiff, ConstantsCollectNoGradient) {
  auto c = ad::constant(Tensor{{1.0}});
  auto p = ad::parameter(Tensor{{2.0}});
  ad::backward(ad::reduce_sum(ad::mul(c, p)));
  EXPECT_FALSE(c->grad().has_value());
  EXPECT_DOUBLE_EQ((*p->grad())(0, 0), 1.0);
}

TEST(Autodiff, SharedNodeAccumulatesBothContributions) {
  // f(p) = sum(tanh(p) * p) with p used twice, against g(p, q) = sum(tanh(p) * q)
  // whose partials at q = p must add up to df/dp.
  Rng rng(5);
  const Tensor init = rng.uniform_tensor(2, 3, -1.0, 1.0);
  auto p = ad::parameter(init);
  ad::backward(ad::reduce_sum(ad::mul(ad::tanh(p), p)));

  auto a = ad::parameter(init);
  auto b = ad::parameter(init);
  auto split = [&] { return ad::reduce_sum(ad::mul(ad::tanh(a), b)); };
  const auto ca = check_gradients(split, {a, b});
  ASSERT_LT(ca.max_relative_error, kGradTolerance);

  const double h = 1e-5;
  for (std::size_t k = 0; k < init.size(); ++k) {
    double numeric = 0.0;
    for (auto* leaf : {&a, &b}) {
      double& x = (*leaf)->mutable_value().values()[k];
      const double x0 = x;
      x = x0 + h;
      const double up = split()->value()(0, 0);
      x = x0 - h;
      const double down = split()->value()(0, 0);
      x = x0;
      numeric += (up - down) / (2 * h);
    }
    EXPECT_LT(testing::relative_error(p->grad()->values()[k], numeric), kGradTolerance) << "entry " << k;
  }
}

TEST(Autodiff, EveryPrimitiveMatchesFiniteDifferences) {
  Rng rng(2024);
  for (ad::Op op : testing::primitive_ops()) {
    double worst = 0.0;
    std::string where;
    for (int probe = 0; probe < kProbes; ++probe) {
      testing::RandomGraph g = testing::random_primitive(rng, op);
      while (testing::near_kink(g.build(), kKinkMargin)) g = testing::random_primitive(rng, op);
      const auto check = check_gradients(g.build, g.leaves);
      if (check.max_relative_error > worst) {
        worst = check.max_relative_error;
        where = check.worst;
      }
    }
    EXPECT_LT(worst, kGradTolerance) << ad::op_name(op) << ": " << where;
  }
}

TEST(Autodiff, RandomCompositionsMatchFiniteDifferences) {
  Rng rng(77);
  double worst = 0.0;
  std::string where;
  for (int probe = 0; probe < kProbes; ++probe) {
    testing::RandomGraph g = testing::random_composition(rng, 6);
    while (testing::near_kink(g.build(), kKinkMargin)) g = testing::random_composition(rng, 6);
    const auto check = check_gradients(g.build, g.leaves);
    if (check.max_relative_error > worst) {
      worst = check.max_relative_error;
      where = "probe " + std::to_string(probe) + " depth " + std::to_string(g.depth) + ", " + check.worst;
    }
  }
  EXPECT_LT(worst, kGradTolerance) << where;
}

TEST(Autodiff, MlpGradientsMatchFiniteDifferences) {
  Rng rng(8);
  const Mlp mlp(MlpSpec{{3, 6, 5, 2}, OutputActivation::Tanh}, rng);
  auto x = ad::constant(rng.normal_tensor(4, 3));
  const auto params = mlp.parameters("mlp");
  std::vector<ad::NodePtr> leaves;
  for (const auto& p : params) leaves.push_back(p.node);
  auto build = [&] { return ad::reduce_mean(ad::square(mlp.forward(x))); };
  ASSERT_FALSE(testing::near_kink(build(), kKinkMargin));
  const auto check = check_gradients(build, leaves);
  EXPECT_LT(check.max_relative_error, kGradTolerance) << check.worst;
}

TEST(InputGradient, LinearNetwork) {
  auto w = ad::parameter(Tensor{{2}, {-1}});
  Rng rng(1);
  auto x = ad::constant(rng.normal_tensor(5, 2));
  auto g = ad::input_gradient_graph(ad::matmul(x, w), x);
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_DOUBLE_EQ(g->value()(r, 0), 2.0);
    EXPECT_DOUBLE_EQ(g->value()(r, 1), -1.0);
  }
}

TEST(InputGradient, SquaredLinear) {
  auto w = ad::parameter(Tensor{{1}, {0}});
  auto x = ad::constant(Tensor{{3, 5}});
  auto g = ad::input_gradient_graph(ad::square(ad::matmul(x, w)), x);
  EXPECT_EQ(g->value(), (Tensor{{6, 0}}));
}

TEST(InputGradient, LinearNetworkIsConstantInInput) {
  Rng rng(4);
  const Mlp linear(MlpSpec{{2, 1}}, rng);
  const auto at = [&](const Tensor& xs) {
    auto x = ad::constant(xs);
    return ad::input_gradient_graph(linear.forward(x), x)->value();
  };
  const Tensor a = at(rng.normal_tensor(6, 2));
  const Tensor b = at(rng.normal_tensor(6, 2, 3.0, 10.0));
  EXPECT_EQ(a, b);
  for (std::size_t r = 1; r < 6; ++r) {
    EXPECT_EQ(a(r, 0), a(0, 0));
    EXPECT_EQ(a(r, 1), a(0, 1));
  }
}

TEST(InputGradient, MatchesReferenceBackpropagation) {
  Rng rng(12);
  const Mlp mlp(MlpSpec{{2, 7, 7, 1}}, rng);
  const Tensor xs = rng.normal_tensor(9, 2);
  auto x = ad::constant(xs);
  const Tensor g = ad::input_gradient_graph(mlp.forward(x), x)->value();
  const RowMat expected = ReferenceMlp::from(mlp).input_gradient(to_matrix(xs));
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(g.values()[k], expected.data()[k], 1e-12);
}

TEST(InputGradient, UnsupportedOp) {
  auto x = ad::constant(Tensor{{1, 2}});
  auto w = ad::parameter(Tensor{{1}, {1}});
  EXPECT_THROW(ad::input_gradient_graph(ad::log_sigmoid(ad::matmul(x, w)), x), ad::UnsupportedOpError);
}

TEST(InputGradient, RejectsMultiColumnOutput) {
  auto x = ad::constant(Tensor{{1, 2}});
  EXPECT_THROW(ad::input_gradient_graph(ad::square(x), x), ShapeError);
}

// R1 penalty mean_r |dD/dx(x_r)|^2 built in the engine, differentiated with
// respect to parameters, against finite differences of the hand-written penalty.
TEST(InputGradient, PenaltyParameterGradientMatchesFiniteDifferences) {
  Rng rng(31);
  const Mlp mlp(MlpSpec{{2, 8, 8, 1}}, rng);
  const Tensor xs = rng.normal_tensor(6, 2);
  auto x = ad::constant(xs);
  auto out = mlp.forward(x);
  auto penalty = ad::scale(ad::reduce_sum(ad::square(ad::input_gradient_graph(out, x))), 1.0 / 6.0);
  ASSERT_FALSE(testing::near_kink(out, kKinkMargin));
  const auto params = mlp.parameters("d");
  zero_grads(params);
  ad::backward(penalty);

  ReferenceMlp ref = ReferenceMlp::from(mlp);
  const RowMat xm = to_matrix(xs);
  EXPECT_NEAR(ref.r1_penalty(xm), penalty->value()(0, 0), 1e-12);
  const auto ref_params = ref.parameters();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    // The output bias does not reach the input gradient and collects nothing.
    const auto& node = params[k].node;
    const Tensor analytic = node->grad() ? *node->grad() : Tensor::zeros(node->shape().rows, node->shape().cols);
    for (Eigen::Index i = 0; i < ref_params[k]->size(); ++i) {
      double& v = ref_params[k]->data()[i];
      const double v0 = v;
      v = v0 + h;
      const double up = ref.r1_penalty(xm);
      v = v0 - h;
      const double down = ref.r1_penalty(xm);
      v = v0;
      worst = std::max(worst, testing::relative_error(analytic.values()[i], (up - down) / (2 * h)));
    }
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(InputGradient, LinearPenaltyGradientIsTwiceTheWeights) {
  Rng rng(2);
  const Mlp linear(MlpSpec{{2, 1}}, rng);
  auto x = ad::constant(rng.normal_tensor(10, 2));
  auto grad_x = ad::input_gradient_graph(linear.forward(x), x);
  auto penalty = ad::scale(ad::reduce_sum(ad::square(grad_x)), 1.0 / 10.0);
  const auto params = linear.parameters("d");
  ad::backward(penalty);
  const Tensor& w = params[0].node->value();
  const Tensor& gw = *params[0].node->grad();
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(gw.values()[k], 2.0 * w.values()[k], 1e-9);
  if (params[1].node->grad()) {
    for (double v : params[1].node->grad()->values()) EXPECT_NEAR(v, 0.0, 1e-9);
  }
}

}  // namespace
}  // namespace venngan
