#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "signdet/tinynet.hpp"

using namespace signdet;

namespace {

std::vector<double> as_double(const std::vector<float>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(TinyNet, DeskDefaultLayout) {
  ModelConfig mc;
  TinyNet<float> net(mc);
  EXPECT_EQ(net.anchors().size(), 720u);
  std::vector<float> img(net.input_size(), 0.3f);
  const Predictions p = net.infer(img);
  EXPECT_EQ(p.size(), 720u);
  EXPECT_EQ(p.num_logits, 27u);
  EXPECT_EQ(p.logits.size(), 720u * 27u);
}

TEST(TinyNet, ZeroHeadsGiveZeroOutputs) {
  ModelConfig mc = gradcheck_model_config();
  mc.background_bias = 0.0;
  TinyNet<double> net(mc);
  for (auto* t : net.parameters()) {
    if (t->name.rfind("head", 0) == 0) std::fill(t->values.begin(), t->values.end(), 0.0);
  }
  const auto ex = gradcheck_example(1, 2, 32);
  const Predictions p = net.infer(as_double(ex.image));
  for (const auto& l : p.loc) {
    for (std::size_t m = 0; m < 4; ++m) EXPECT_EQ(l[m], 0.0);
  }
  for (double v : p.logits) EXPECT_EQ(v, 0.0);
}

TEST(TinyNet, ForwardIsDeterministic) {
  const ModelConfig mc = gradcheck_model_config();
  TinyNet<double> a(mc), b(mc);
  const auto ex = gradcheck_example(2, 2, 32);
  const auto input = as_double(ex.image);
  const Predictions pa = a.infer(input), pb = b.infer(input), pa2 = a.infer(input);
  EXPECT_EQ(pa.logits, pb.logits);
  EXPECT_EQ(pa.logits, pa2.logits);
  EXPECT_EQ(pa.loc, pb.loc);
}

TEST(TinyNet, SeedControlsInitialization) {
  ModelConfig mc = gradcheck_model_config();
  TinyNet<double> a(mc);
  mc.seed = 2;
  TinyNet<double> b(mc);
  EXPECT_NE(a.parameters()[0]->values, b.parameters()[0]->values);
  b.initialize(1);
  for (std::size_t k = 0; k < a.parameters().size(); ++k) {
    EXPECT_EQ(a.parameters()[k]->values, b.parameters()[k]->values);
  }
}

TEST(TinyNet, RejectsWrongInputSize) {
  TinyNet<double> net(gradcheck_model_config());
  std::vector<double> img(net.input_size() - 1, 0.0);
  EXPECT_THROW(net.infer(img), Error);
}

TEST(TinyNet, RejectsMismatchedAnchorGrid) {
  ModelConfig mc = gradcheck_model_config();
  mc.anchors.layers[0].grid_w = 3;
  EXPECT_THROW(TinyNet<double>{mc}, Error);
  mc = gradcheck_model_config();
  mc.head_kernel = 2;
  EXPECT_THROW(TinyNet<double>{mc}, Error);
}

TEST(TinyNet, GradientsMatchFiniteDifferences) {
  for (int kernel : {1, 3}) {
    ModelConfig mc = gradcheck_model_config();
    mc.head_kernel = kernel;
    TinyNet<double> net(mc);
    ASSERT_LE(net.parameter_count(), 5000u);
    const GradCheckResult r = check_gradients(net, gradcheck_example(3, 2, 32));
    EXPECT_EQ(r.checked, net.parameter_count());
    EXPECT_LT(r.worst_relative_error, 1e-3) << "kernel " << kernel << " worst at " << r.worst_parameter;
  }
}

TEST(TinyNet, RegularizationGradientIsDecayTimesWeight) {
  ModelConfig mc = gradcheck_model_config();
  mc.weight_decay = 0.01;
  TinyNet<double> net(mc);
  net.zero_grad();
  net.add_regularization_grad();
  double sum = 0.0;
  for (const auto* t : net.parameters()) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      EXPECT_DOUBLE_EQ(t->grad[i], t->is_weight ? 0.01 * t->values[i] : 0.0);
      if (t->is_weight) sum += t->values[i] * t->values[i];
    }
  }
  EXPECT_NEAR(net.regularization(), 0.01 * sum / 2.0, 1e-15);
}

TEST(TinyNet, ZeroLossGradientGivesZeroParameterGradients) {
  TinyNet<double> net(gradcheck_model_config());
  const auto ex = gradcheck_example(4, 2, 32);
  typename TinyNet<double>::Cache cache;
  net.forward(as_double(ex.image), cache);
  const std::vector<OffsetVector> gl(net.anchors().size());
  const std::vector<double> gc(net.anchors().size() * net.num_logits(), 0.0);
  std::vector<std::vector<double>> grads;
  net.backward(cache, gl, gc, grads);
  for (const auto& g : grads) {
    for (double v : g) EXPECT_EQ(v, 0.0);
  }
}

TEST(TinyNet, BackwardWithoutForwardFails) {
  TinyNet<double> net(gradcheck_model_config());
  typename TinyNet<double>::Cache cache;
  const std::vector<OffsetVector> gl(net.anchors().size());
  const std::vector<double> gc(net.anchors().size() * net.num_logits(), 0.0);
  std::vector<std::vector<double>> grads;
  EXPECT_THROW(net.backward(cache, gl, gc, grads), Error);
}

TEST(TinyNet, SmallGradientStepLowersLoss) {
  TinyNet<double> net(gradcheck_model_config());
  const auto ex = gradcheck_example(5, 2, 32);
  auto prepared = prepare_example(net, ex, 0.5);
  const std::vector<const PreparedExample<double>*> batch{&prepared};
  const double before = batch_loss(net, batch, 3.0, true).total_loss;
  for (auto* t : net.parameters()) {
    for (std::size_t i = 0; i < t->size(); ++i) t->values[i] -= 1e-3 * t->grad[i];
  }
  const double after = batch_loss(net, batch, 3.0, false).total_loss;
  EXPECT_LT(after, before);
}
