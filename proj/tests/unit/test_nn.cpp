#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "dmn/nn.hpp"
#include "support.hpp"

using namespace dmn;

namespace {

// y = w * x elementwise with one shared weight; the backward pass can be
// deliberately wrong to prove that the gradient check notices.
class ScaleLayer final : public Layer {
 public:
  ScaleLayer(Shape shape, double error_factor)
      : shape_(shape), factor_(error_factor), w_("scale.weight", {1}, ParamRole::weight) {
    w_.value = {0.7};
  }
  std::string kind() const override { return "scale"; }
  Shape input_shape() const override { return shape_; }
  Shape output_shape() const override { return shape_; }
  Tensor forward(const Tensor& input) override {
    input_ = input;
    return scaled(input, w_.value[0]);
  }
  Tensor backward(const Tensor& grad_out) override {
    double g = 0.0;
    for (std::size_t k = 0; k < grad_out.size(); ++k) g += grad_out.data()[k] * input_.data()[k];
    w_.grad[0] += factor_ * g;
    return scaled(grad_out, w_.value[0]);
  }
  std::vector<Parameter*> parameters() override { return {&w_}; }

 private:
  Shape shape_;
  double factor_;
  Parameter w_;
  Tensor input_;
};

Network small_mlp(double error_factor = 1.0) {
  Network net("mlp", Shape{6, 1, 1}, 3);
  net.add(std::make_unique<FullyConnected>(6, 5, "l0"));
  net.add(std::make_unique<ReLU>(Shape{5, 1, 1}));
  net.add(std::make_unique<ScaleLayer>(Shape{5, 1, 1}, error_factor));
  net.add(std::make_unique<FullyConnected>(5, 3, "l3"));
  return net;
}

Split toy_split(Rng& rng) {
  Split s;
  for (std::size_t k = 0; k < 30; ++k) {
    Sample x{test::random_tensor(rng, Shape{6, 1, 1}, -1, 1), k % 3, k};
    x.image.data()[k % 3] += 2.0;
    (k < 18 ? s.train : k < 24 ? s.validation : s.test).push_back(x);
  }
  return s;
}

}  // namespace

TEST_CASE("fully connected forward and backward") {
  const std::vector<double> w{1, 2, 3, 4};
  const std::vector<double> b{0, 1};
  const std::vector<double> x{1, 1};
  CHECK(fully_connected_forward(w, b, x) == std::vector<double>{3, 8});
  const std::vector<double> g{1, -1};
  const auto grads = fully_connected_backward(w, x, g);
  CHECK(grads.input == std::vector<double>{-2, -2});
  CHECK(grads.weights == std::vector<double>{1, 1, -1, -1});
  CHECK(grads.bias == g);
  CHECK_THROWS_AS(fully_connected_forward(w, b, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST_CASE("relu") {
  const Tensor x(Shape{1, 1, 4}, {-1.0, 0.0, 0.5, 2.0});
  CHECK(relu_forward(x) == Tensor(Shape{1, 1, 4}, {0.0, 0.0, 0.5, 2.0}));
  CHECK(relu_backward(x, Tensor(x.shape(), 3.0)) == Tensor(Shape{1, 1, 4}, {0.0, 0.0, 3.0, 3.0}));
}

TEST_CASE("softmax cross-entropy") {
  const std::vector<double> zero{0.0, 0.0};
  const auto r = softmax_cross_entropy(zero, 0);
  CHECK(r.loss == doctest::Approx(std::log(2.0)));
  CHECK(r.grad == std::vector<double>{-0.5, 0.5});
  const std::vector<double> big{1000.0, 0.0, -1000.0};
  const auto s = softmax_cross_entropy(big, 0);
  CHECK(s.loss == doctest::Approx(0.0));
  CHECK(std::isfinite(softmax_cross_entropy(big, 2).loss));
  CHECK_THROWS_AS(softmax_cross_entropy(big, 3), std::out_of_range);
  CHECK_THROWS_AS(softmax_cross_entropy(std::vector<double>{1.0}, 0), std::invalid_argument);
}

TEST_CASE("max pooling") {
  const Tensor x(Shape{1, 2, 4}, {1, 5, 2, 2, 3, 4, 7, 0});
  const auto r = maxpool2d_forward(x, 2, 2);
  CHECK(r.output == Tensor(Shape{1, 1, 2}, {5, 7}));
  CHECK(r.argmax == std::vector<std::uint32_t>{1, 6});
  const Tensor g = maxpool2d_backward(x.shape(), r.argmax, Tensor(Shape{1, 1, 2}, {1.0, 2.0}));
  CHECK(g == Tensor(Shape{1, 2, 4}, {0, 1, 0, 0, 0, 0, 2, 0}));
  CHECK(argmax(std::vector<double>{1, 3, 3}) == 1);
}

TEST_CASE("sgd step") {
  Parameter p("p", {2}, ParamRole::weight);
  p.value = {1.0, -2.0};
  TrainConfig c;
  c.learning_rate = 0.1;
  c.momentum = 0.0;
  c.weight_decay = 0.0;
  std::vector<Parameter*> ps{&p};

  SUBCASE("plain rule") {
    p.grad = {0.5, 1.0};
    sgd_step(ps, c);
    CHECK(p.value == std::vector<double>{1.0 - 0.1 * 0.5, -2.0 - 0.1 * 1.0});
    CHECK(p.grad == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("zero gradient and zero momentum buffer leave the value unchanged") {
    sgd_step(ps, c);
    CHECK(p.value == std::vector<double>{1.0, -2.0});
  }
  SUBCASE("momentum recurrence unrolled by hand") {
    c.momentum = 0.9;
    const double g = 0.5;
    p.grad = {g, g};
    sgd_step(ps, c);
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 * g));
    p.grad = {g, g};
    sgd_step(ps, c);
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 * g - 0.1 * g * 1.9));
  }
  SUBCASE("weight decay joins the gradient") {
    c.weight_decay = 0.01;
    sgd_step(ps, c);
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 * 0.01));
  }
}

TEST_CASE("training config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.momentum = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.weight_decay = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("network rejects mismatched layers") {
  Network net("n", Shape{4, 1, 1}, 2);
  CHECK_THROWS_AS(net.add(std::make_unique<FullyConnected>(5, 2, "l0")), ShapeError);
  CHECK_THROWS_AS(Network("n", Shape{4, 1, 1}, 1), std::invalid_argument);
}

TEST_CASE("gradient check passes a correct network and flags a corrupted backward") {
  Rng rng(3);
  const Tensor x = test::random_tensor(rng, Shape{6, 1, 1}, -1, 1);
  Network good = small_mlp();
  good.initialize(1);
  const auto ok = gradcheck(good, x, 2);
  CHECK(ok.max_rel_error < 1e-4);
  CHECK(ok.groups.size() == 5);

  Network bad = small_mlp(1.5);
  bad.initialize(1);
  const auto report = gradcheck(bad, x, 2);
  CHECK(report.max_rel_error > 1e-4);
}

TEST_CASE("training with a zero learning rate leaves parameters bit-identical") {
  Rng rng(4);
  const Split split = toy_split(rng);
  Network net = small_mlp();
  net.initialize(9);
  std::vector<std::vector<double>> before;
  for (auto* p : net.parameters()) before.push_back(p->value);
  TrainConfig c;
  c.learning_rate = 0.0;
  c.epochs = 3;
  const double untrained = evaluate(net, split.test);
  const Metrics m = train(net, split, c);
  std::size_t k = 0;
  for (auto* p : net.parameters()) CHECK(p->value == before[k++]);
  CHECK(m.test_accuracy == untrained);
}

TEST_CASE("training is deterministic and learns a separable toy problem") {
  Rng rng(5);
  const Split split = toy_split(rng);
  TrainConfig c;
  c.epochs = 30;
  c.batch_size = 4;
  auto run = [&] {
    Network net = small_mlp();
    net.initialize(2);
    std::ostringstream csv;
    write_metrics_csv(train(net, split, c), csv);
    return csv.str();
  };
  const std::string first = run();
  CHECK(first == run());
  CHECK(first.rfind("epoch,train_loss,train_acc,val_acc\n", 0) == 0);
  Network net = small_mlp();
  net.initialize(2);
  CHECK(train(net, split, c).epochs.back().train_acc == 100.0);
}

TEST_CASE("training aborts on a non-finite loss") {
  Rng rng(6);
  const Split split = toy_split(rng);
  Network net = small_mlp();
  net.initialize(2);
  net.parameters().back()->value[0] = std::nan("");
  CHECK_THROWS_AS(train(net, split, TrainConfig{}), DivergenceError);
}

TEST_CASE("evaluate and format_accuracy") {
  Rng rng(7);
  const Split split = toy_split(rng);
  Network net = small_mlp();
  net.initialize(3);
  const double acc = evaluate(net, split.test);
  CHECK(acc >= 0.0);
  CHECK(acc <= 100.0);
  CHECK_THROWS(evaluate(net, std::vector<Sample>{}));
  CHECK(format_accuracy(100.0) == "100.00");
  CHECK(format_accuracy(86.5) == "86.50");
}
