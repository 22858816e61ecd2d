#include "dmn/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace dmn {

std::vector<double> fully_connected_forward(std::span<const double> weights,
                                            std::span<const double> bias,
                                            std::span<const double> input) {
  const std::size_t out = bias.size();
  const std::size_t in = input.size();
  if (weights.size() != out * in) {
    throw ShapeError("fully_connected: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(out) + "x" + std::to_string(in));
  }
  std::vector<double> y(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double* w = weights.data() + o * in;
    double acc = bias[o];
    for (std::size_t i = 0; i < in; ++i) acc += w[i] * input[i];
    y[o] = acc;
  }
  return y;
}

FullyConnectedGrads fully_connected_backward(std::span<const double> weights,
                                             std::span<const double> input,
                                             std::span<const double> grad_out) {
  const std::size_t out = grad_out.size();
  const std::size_t in = input.size();
  if (weights.size() != out * in) {
    throw ShapeError("fully_connected_backward: " + std::to_string(weights.size()) +
                     " weights for " + std::to_string(out) + "x" + std::to_string(in));
  }
  FullyConnectedGrads g{std::vector<double>(in, 0.0), std::vector<double>(out * in, 0.0),
                        std::vector<double>(grad_out.begin(), grad_out.end())};
  for (std::size_t o = 0; o < out; ++o) {
    const double go = grad_out[o];
    if (go == 0.0) continue;
    const double* w = weights.data() + o * in;
    double* gw = g.weights.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) {
      gw[i] = go * input[i];
      g.input[i] += go * w[i];
    }
  }
  return g;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape());
  auto out = y.data();
  auto in = x.data();
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0 ? in[k] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  if (x.shape() != grad_out.shape()) {
    throw ShapeError("relu_backward: " + x.shape().str() + " vs " + grad_out.shape().str());
  }
  Tensor g(x.shape());
  auto out = g.data();
  auto in = x.data();
  auto go = grad_out.data();
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0 ? go[k] : 0.0;
  return g;
}

LossResult softmax_cross_entropy(std::span<const double> logits, std::size_t target) {
  if (logits.size() < 2) throw std::invalid_argument("softmax_cross_entropy: need >= 2 classes");
  if (target >= logits.size()) {
    throw std::out_of_range("softmax_cross_entropy: target " + std::to_string(target) +
                            " out of range for " + std::to_string(logits.size()) + " classes");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - top);
  const double log_z = std::log(z);
  LossResult r;
  r.loss = log_z - (logits[target] - top);
  r.grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) r.grad[k] = std::exp(logits[k] - top - log_z);
  r.grad[target] -= 1.0;
  return r;
}

MaxPoolResult maxpool2d_forward(const Tensor& input, std::size_t window, std::size_t stride) {
  const std::size_t oh = conv_output_dim(input.height(), window, stride, 0);
  const std::size_t ow = conv_output_dim(input.width(), window, stride, 0);
  MaxPoolResult r{Tensor(input.channels(), oh, ow), {}};
  r.argmax.resize(r.output.size());
  const std::size_t w = input.width();
  std::size_t o = 0;
  for (std::size_t c = 0; c < input.channels(); ++c) {
    const auto plane = input.plane(c);
    const std::size_t base = c * input.height() * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j, ++o) {
        std::size_t best = (i * stride) * w + j * stride;
        for (std::size_t m = 0; m < window; ++m) {
          for (std::size_t n = 0; n < window; ++n) {
            const std::size_t k = (i * stride + m) * w + j * stride + n;
            if (plane[k] > plane[best]) best = k;
          }
        }
        r.output.data()[o] = plane[best];
        r.argmax[o] = static_cast<std::uint32_t>(base + best);
      }
    }
  }
  return r;
}

Tensor maxpool2d_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax,
                          const Tensor& grad_out) {
  if (argmax.size() != grad_out.size()) {
    throw ShapeError("maxpool2d_backward: trace does not match gradient " +
                     grad_out.shape().str());
  }
  Tensor g(input_shape);
  auto gi = g.data();
  auto go = grad_out.data();
  for (std::size_t k = 0; k < argmax.size(); ++k) gi[argmax[k]] += go[k];
  return g;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of an empty range");
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

namespace {

void require_shape(const Tensor& t, const Shape& expected, const char* who) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(who) + ": expected " + expected.str() + ", got " +
                     t.shape().str());
  }
}

void uniform_fill(std::vector<double>& v, Rng& rng, double bound) {
  for (double& x : v) x = rng.uniform(-bound, bound);
}

}  // namespace

FullyConnected::FullyConnected(std::size_t in, std::size_t out, const std::string& name)
    : in_(in),
      out_(out),
      weights_(name + ".weight", {out, in}, ParamRole::weight),
      bias_(name + ".bias", {out}, ParamRole::bias) {
  if (in == 0 || out == 0) throw ShapeError(name + ": fully connected sizes must be positive");
}

Tensor FullyConnected::forward(const Tensor& input) {
  if (input.size() != in_) {
    throw ShapeError("fully connected expects " + std::to_string(in_) + " inputs, got " +
                     input.shape().str());
  }
  input_ = input;
  return Tensor(Shape{out_, 1, 1}, fully_connected_forward(weights_.value, bias_.value,
                                                           input.data()));
}

Tensor FullyConnected::backward(const Tensor& grad_out) {
  require_shape(grad_out, output_shape(), "fully connected backward");
  auto g = fully_connected_backward(weights_.value, input_.data(), grad_out.data());
  for (std::size_t k = 0; k < g.weights.size(); ++k) weights_.grad[k] += g.weights[k];
  for (std::size_t k = 0; k < g.bias.size(); ++k) bias_.grad[k] += g.bias[k];
  return Tensor(input_.shape(), std::move(g.input));
}

void FullyConnected::initialize(Rng& rng) {
  uniform_fill(weights_.value, rng, 1.0 / std::sqrt(static_cast<double>(in_)));
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

Tensor ReLU::forward(const Tensor& input) {
  require_shape(input, shape_, "relu");
  input_ = input;
  return relu_forward(input);
}

Tensor ReLU::backward(const Tensor& grad_out) { return relu_backward(input_, grad_out); }

Tensor Flatten::forward(const Tensor& input) {
  require_shape(input, shape_, "flatten");
  return input.reshaped(output_shape());
}

Tensor Flatten::backward(const Tensor& grad_out) {
  require_shape(grad_out, output_shape(), "flatten backward");
  return grad_out.reshaped(shape_);
}

MaxPool2d::MaxPool2d(Shape input, std::size_t window, std::size_t stride)
    : input_(input),
      output_{input.channels, conv_output_dim(input.height, window, stride, 0),
              conv_output_dim(input.width, window, stride, 0)},
      window_(window),
      stride_(stride) {}

Tensor MaxPool2d::forward(const Tensor& input) {
  require_shape(input, input_, "maxpool");
  auto r = maxpool2d_forward(input, window_, stride_);
  argmax_ = std::move(r.argmax);
  return std::move(r.output);
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  require_shape(grad_out, output_, "maxpool backward");
  return maxpool2d_backward(input_, argmax_, grad_out);
}

Conv2d::Conv2d(Shape input, std::size_t out_channels, std::size_t kernel, std::size_t stride,
               std::size_t padding, const std::string& name)
    : input_(input),
      output_{out_channels, conv_output_dim(input.height, kernel, stride, padding),
              conv_output_dim(input.width, kernel, stride, padding)},
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      weights_(name + ".weight", {out_channels, input.channels, kernel, kernel},
               ParamRole::weight),
      bias_(name + ".bias", {out_channels}, ParamRole::bias) {
  if (out_channels == 0) throw ShapeError(name + ": convolution needs output channels");
}

std::vector<Tensor> Conv2d::kernels() const {
  const std::size_t per = input_.channels * kernel_ * kernel_;
  std::vector<Tensor> ks;
  ks.reserve(output_.channels);
  for (std::size_t k = 0; k < output_.channels; ++k) {
    ks.emplace_back(Shape{input_.channels, kernel_, kernel_},
                    std::vector<double>(weights_.value.begin() + k * per,
                                        weights_.value.begin() + (k + 1) * per));
  }
  return ks;
}

Tensor Conv2d::forward(const Tensor& input) {
  require_shape(input, input_, "conv");
  cached_input_ = input;
  const auto ks = kernels();
  return conv2d_standard(input, ks, stride_, padding_, bias_.value);
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  require_shape(grad_out, output_, "conv backward");
  const auto ks = kernels();
  auto g = conv2d_standard_backward(cached_input_, ks, stride_, padding_, grad_out);
  const std::size_t per = input_.channels * kernel_ * kernel_;
  for (std::size_t k = 0; k < g.kernels.size(); ++k) {
    const auto gk = g.kernels[k].data();
    for (std::size_t i = 0; i < per; ++i) weights_.grad[k * per + i] += gk[i];
    bias_.grad[k] += g.bias[k];
  }
  return std::move(g.input);
}

void Conv2d::initialize(Rng& rng) {
  const double fan_in = static_cast<double>(input_.channels * kernel_ * kernel_);
  uniform_fill(weights_.value, rng, 1.0 / std::sqrt(fan_in));
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

MorphLayer::MorphLayer(Shape input, const std::vector<NeuronSpec>& specs, const std::string& name)
    : input_(input) {
  if (specs.empty()) throw ShapeError(name + ": morphological layer needs at least one neuron");
  neurons_.reserve(specs.size());
  for (std::size_t n = 0; n < specs.size(); ++n) {
    neurons_.emplace_back(specs[n], input, name + ".n" + std::to_string(n));
    if (neurons_[n].output_shape() != neurons_.front().output_shape()) {
      throw ShapeError(name + ": neuron " + std::to_string(n) + " outputs " +
                       neurons_[n].output_shape().str() + " but neuron 0 outputs " +
                       neurons_.front().output_shape().str());
    }
  }
  const Shape one = neurons_.front().output_shape();
  output_ = Shape{neurons_.size(), one.height, one.width};
  caches_.resize(neurons_.size());
}

Tensor MorphLayer::forward(const Tensor& input) {
  require_shape(input, input_, "morphological layer");
  Tensor out(output_);
  for (std::size_t n = 0; n < neurons_.size(); ++n) {
    const Tensor y = neurons_[n].forward(input, &caches_[n]);
    std::copy(y.data().begin(), y.data().end(), out.plane(n).begin());
  }
  return out;
}

Tensor MorphLayer::backward(const Tensor& grad_out) {
  require_shape(grad_out, output_, "morphological layer backward");
  Tensor grad_in(input_);
  auto gi = grad_in.data();
  for (std::size_t n = 0; n < neurons_.size(); ++n) {
    const Tensor g = neurons_[n].backward(caches_[n], grad_out.channel(n));
    const auto gn = g.data();
    for (std::size_t k = 0; k < gi.size(); ++k) gi[k] += gn[k];
  }
  return grad_in;
}

std::vector<Parameter*> MorphLayer::parameters() {
  std::vector<Parameter*> out;
  for (auto& n : neurons_) {
    for (auto* p : n.parameters()) out.push_back(p);
  }
  return out;
}

void MorphLayer::initialize(Rng& rng) {
  for (auto& n : neurons_) n.initialize(rng);
}

Network::Network(std::string name, Shape input_shape, std::size_t classes)
    : name_(std::move(name)), input_shape_(input_shape), classes_(classes) {
  if (classes_ < 2) throw std::invalid_argument("network needs at least two classes");
}

void Network::add(std::unique_ptr<Layer> layer) {
  const Shape expected = output_shape();
  if (layer->input_shape() != expected) {
    throw ShapeError(name_ + ": layer " + std::to_string(layers_.size()) + " (" + layer->kind() +
                     ") expects " + layer->input_shape().str() + " but receives " +
                     expected.str());
  }
  layers_.push_back(std::move(layer));
}

Shape Network::output_shape() const {
  return layers_.empty() ? input_shape_ : layers_.back()->output_shape();
}

std::vector<double> Network::forward(const Tensor& input) {
  require_shape(input, input_shape_, name_.c_str());
  Tensor x = input;
  for (auto& l : layers_) x = l->forward(x);
  return std::move(x.values());
}

void Network::backward(std::span<const double> grad_logits) {
  Tensor g(output_shape(), std::vector<double>(grad_logits.begin(), grad_logits.end()));
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    for (auto* p : l->parameters()) out.push_back(p);
  }
  return out;
}

std::size_t Network::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->size();
  return n;
}

void Network::initialize(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "init"));
  for (auto& l : layers_) l->initialize(rng);
  for (auto* p : parameters()) {
    std::fill(p->velocity.begin(), p->velocity.end(), 0.0);
    p->zero_grad();
  }
}

void Network::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be a finite value >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw std::invalid_argument("weight_decay must be a finite value >= 0");
  }
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
}

void sgd_step(std::span<Parameter* const> params, const TrainConfig& config) {
  const double lr = config.learning_rate;
  const double m = config.momentum;
  const double wd = config.weight_decay;
  for (Parameter* p : params) {
    for (std::size_t k = 0; k < p->size(); ++k) {
      p->velocity[k] = m * p->velocity[k] - lr * (p->grad[k] + wd * p->value[k]);
      p->value[k] += p->velocity[k];
    }
    p->zero_grad();
  }
}

double evaluate(Network& net, std::span<const Sample> samples) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (argmax(net.forward(s.image)) == s.label) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(samples.size());
}

namespace {

std::string divergence_report(Network& net, std::size_t epoch, std::size_t batch,
                              const Sample& sample, double loss) {
  std::ostringstream os;
  os << "training diverged: non-finite loss " << loss << " at epoch " << epoch << ", batch "
     << batch << ", sample id " << sample.id << "\nparameter state (name, max |value|, max |grad|):";
  for (auto* p : net.parameters()) {
    double mv = 0.0;
    double mg = 0.0;
    for (double v : p->value) mv = std::max(mv, std::abs(v));
    for (double g : p->grad) mg = std::max(mg, std::abs(g));
    os << "\n  " << p->name << " " << mv << " " << mg;
  }
  return os.str();
}

}  // namespace

Metrics train(Network& net, const Split& split, const TrainConfig& config, std::ostream* progress) {
  config.validate();
  if (split.train.empty() || split.validation.empty() || split.test.empty()) {
    throw std::invalid_argument("train: every split must be non-empty");
  }
  if (net.output_shape().size() != net.classes()) {
    throw ShapeError("train: network emits " + net.output_shape().str() + " for " +
                     std::to_string(net.classes()) + " classes");
  }
  const auto start = std::chrono::steady_clock::now();
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto params = net.parameters();
  net.zero_grad();

  Metrics metrics;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      for (std::size_t k = begin; k < end; ++k) {
        const Sample& s = split.train[order[k]];
        const auto logits = net.forward(s.image);
        const auto loss = softmax_cross_entropy(logits, s.label);
        if (!std::isfinite(loss.loss)) {
          throw DivergenceError(divergence_report(net, epoch, batch, s, loss.loss));
        }
        loss_sum += loss.loss;
        if (argmax(logits) == s.label) ++correct;
        net.backward(loss.grad);
      }
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (auto* p : params) {
        for (double& g : p->grad) g *= scale;
      }
      sgd_step(params, config);
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_sum / static_cast<double>(order.size());
    em.train_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(order.size());
    em.val_acc = evaluate(net, split.validation);
    metrics.epochs.push_back(em);
    if (progress) {
      *progress << "epoch " << epoch << " train_loss=" << std::fixed << std::setprecision(6)
                << em.train_loss << " train_acc=" << format_accuracy(em.train_acc)
                << " val_acc=" << format_accuracy(em.val_acc) << std::endl;
    }
  }
  metrics.test_accuracy = evaluate(net, split.test);
  metrics.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return metrics;
}

std::string format_accuracy(double percent) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << percent;
  return os.str();
}

void write_metrics_csv(const Metrics& metrics, std::ostream& out) {
  out << "epoch,train_loss,train_acc,val_acc\n";
  for (const auto& e : metrics.epochs) {
    std::ostringstream loss;
    loss << std::fixed << std::setprecision(8) << e.train_loss;
    out << e.epoch << ',' << loss.str() << ',' << format_accuracy(e.train_acc) << ','
        << format_accuracy(e.val_acc) << '\n';
  }
}

void jitter_biases(Network& net, std::uint64_t seed, double scale) {
  Rng rng(derive_seed(seed, "jitter"));
  for (auto* p : net.parameters()) {
    if (p->role != ParamRole::bias) continue;
    for (double& v : p->value) v = rng.uniform(-scale, scale);
  }
}

GradcheckReport gradcheck(Network& net, const Tensor& input, std::size_t label, double epsilon,
                          std::size_t max_entries, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradcheck: epsilon must be positive");
  Rng rng(seed);
  auto loss_of = [&] { return softmax_cross_entropy(net.forward(input), label).loss; };

  net.zero_grad();
  net.backward(softmax_cross_entropy(net.forward(input), label).grad);

  GradcheckReport report;
  for (Parameter* p : net.parameters()) {
    if (!p->finite_difference_checkable()) continue;
    std::vector<std::size_t> picks;
    if (p->size() <= max_entries) {
      picks.resize(p->size());
      std::iota(picks.begin(), picks.end(), std::size_t{0});
    } else {
      std::unordered_set<std::size_t> seen;
      while (picks.size() < max_entries) {
        const auto k = static_cast<std::size_t>(rng.below(p->size()));
        if (seen.insert(k).second) picks.push_back(k);
      }
    }
    GradcheckGroup group{p->name, picks.size(), 0.0};
    for (std::size_t k : picks) {
      const double saved = p->value[k];
      p->value[k] = saved + epsilon;
      const double up = loss_of();
      p->value[k] = saved - epsilon;
      const double down = loss_of();
      p->value[k] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = p->grad[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      group.max_rel_error = std::max(group.max_rel_error, std::abs(analytic - numeric) / denom);
    }
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.groups.push_back(std::move(group));
  }
  net.zero_grad();
  return report;
}

}  // namespace dmn
