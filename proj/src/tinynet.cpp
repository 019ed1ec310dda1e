#include "bciflow/tinynet.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace bciflow::sig {

namespace {

Eigen::VectorXd activate(const Eigen::VectorXd& pre, Activation activation) {
  if (activation == Activation::Identity) return pre;
  return pre.cwiseMax(0.0);
}

Eigen::VectorXd activate_grad(const Eigen::VectorXd& pre, Activation activation) {
  if (activation == Activation::Identity) return Eigen::VectorXd::Ones(pre.size());
  return (pre.array() > 0.0).cast<double>();
}

struct ForwardTrace {
  std::vector<Eigen::VectorXd> pre;   // pre-activation per layer
  std::vector<Eigen::VectorXd> post;  // post-activation per layer
};

void check_shapes(const TinyNet& net, const Signal& signal) {
  if (net.layers.empty()) {
    raise(Errc::InvalidParams, "net has no layers");
  }
  if (signal.channels() != net.input_channels || signal.length() != net.input_length) {
    raise(Errc::ShapeMismatch,
          "signal is " + std::to_string(signal.channels()) + "x" +
              std::to_string(signal.length()) + ", net expects " +
              std::to_string(net.input_channels) + "x" + std::to_string(net.input_length));
  }
  Eigen::Index width = net.input_size();
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const DenseLayer& layer = net.layers[i];
    if (layer.weights.cols() != width || layer.weights.rows() != layer.bias.size()) {
      raise(Errc::ShapeMismatch, "layer " + std::to_string(i) + " dimensions do not chain");
    }
    width = layer.weights.rows();
  }
}

ForwardTrace run_forward(const TinyNet& net, const Eigen::VectorXd& input) {
  ForwardTrace trace;
  Eigen::VectorXd h = input;
  for (const DenseLayer& layer : net.layers) {
    Eigen::VectorXd pre = layer.weights * h + layer.bias;
    h = activate(pre, layer.activation);
    trace.pre.push_back(std::move(pre));
    trace.post.push_back(h);
  }
  return trace;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::ArrayXd shifted = logits.array() - logits.maxCoeff();
  Eigen::ArrayXd exps = shifted.exp();
  return (exps / exps.sum()).matrix();
}

double cross_entropy(const Eigen::VectorXd& logits, int label) {
  if (label < 0 || label >= logits.size()) {
    raise(Errc::ShapeMismatch, "label " + std::to_string(label) + " out of range");
  }
  double max = logits.maxCoeff();
  double lse = max + std::log((logits.array() - max).exp().sum());
  return lse - logits(label);
}

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
  Eigen::VectorXd input;
};

Gradients run_backward(const TinyNet& net, const Eigen::VectorXd& input,
                       const ForwardTrace& trace, int label) {
  Gradients grads;
  grads.weights.resize(net.layers.size());
  grads.bias.resize(net.layers.size());
  // d(loss)/d(logits) for softmax cross-entropy.
  Eigen::VectorXd delta = softmax(trace.post.back());
  delta(label) -= 1.0;
  for (std::size_t i = net.layers.size(); i-- > 0;) {
    const DenseLayer& layer = net.layers[i];
    Eigen::VectorXd dpre = delta.cwiseProduct(activate_grad(trace.pre[i], layer.activation));
    const Eigen::VectorXd& below = i == 0 ? input : trace.post[i - 1];
    grads.weights[i] = dpre * below.transpose();
    grads.bias[i] = dpre;
    delta = layer.weights.transpose() * dpre;
  }
  grads.input = delta;
  return grads;
}

}  // namespace

Eigen::VectorXd flatten(const Signal& signal) {
  Eigen::VectorXd flat(signal.data.size());
  const Eigen::Index length = signal.length();
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    flat.segment(c * length, length) = signal.data.row(c).transpose();
  }
  return flat;
}

Eigen::VectorXd forward(const TinyNet& net, const Signal& signal) {
  check_shapes(net, signal);
  return run_forward(net, flatten(signal)).post.back();
}

double loss(const TinyNet& net, const Signal& signal, int label) {
  return cross_entropy(forward(net, signal), label);
}

Eigen::MatrixXd input_gradient(const TinyNet& net, const Signal& signal, int label) {
  check_shapes(net, signal);
  if (label < 0 || label >= net.num_classes()) {
    raise(Errc::ShapeMismatch, "label " + std::to_string(label) + " out of range");
  }
  Eigen::VectorXd input = flatten(signal);
  ForwardTrace trace = run_forward(net, input);
  Gradients grads = run_backward(net, input, trace, label);
  Eigen::MatrixXd shaped(signal.channels(), signal.length());
  const Eigen::Index length = signal.length();
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    shaped.row(c) = grads.input.segment(c * length, length).transpose();
  }
  return shaped;
}

int predict(const TinyNet& net, const Signal& signal) {
  Eigen::Index best = 0;
  forward(net, signal).maxCoeff(&best);
  return static_cast<int>(best);
}

double accuracy(const TinyNet& net, const Dataset& dataset) {
  if (dataset.samples.empty()) {
    raise(Errc::InvalidParams, "empty dataset");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (predict(net, dataset.samples[i]) == dataset.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.samples.size());
}

namespace {

constexpr Eigen::Index kToyChannels = 2;
constexpr Eigen::Index kToyLength = 32;
constexpr double kToyFreq = 250.0;
// Odd cycle counts: a half-length shift flips the phase of both classes,
// which keeps the delay attack observable on this problem.
constexpr double kClassCycles[2] = {3.0, 5.0};

}  // namespace

Dataset make_toy_dataset(std::uint64_t seed, std::size_t n_samples) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.45);
  std::normal_distribution<double> jitter(0.0, 0.15);
  std::uniform_int_distribution<int> coin(0, 1);
  Dataset dataset;
  dataset.samples.reserve(n_samples);
  dataset.labels.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    int label = coin(rng);
    Signal signal;
    signal.freq = kToyFreq;
    signal.data.resize(kToyChannels, kToyLength);
    double phase = jitter(rng);
    for (Eigen::Index c = 0; c < kToyChannels; ++c) {
      for (Eigen::Index t = 0; t < kToyLength; ++t) {
        double angle = 2.0 * std::numbers::pi * kClassCycles[label] *
                           static_cast<double>(t) / static_cast<double>(kToyLength) +
                       phase + 0.4 * static_cast<double>(c);
        signal.data(c, t) = std::sin(angle) + noise(rng);
      }
    }
    dataset.samples.push_back(std::move(signal));
    dataset.labels.push_back(label);
  }
  return dataset;
}

ToyProblem train_toy(std::uint64_t seed, std::size_t n_samples) {
  if (n_samples < 100) {
    raise(Errc::InvalidParams, "train_toy needs at least 100 samples");
  }
  Dataset all = make_toy_dataset(seed, n_samples);
  ToyProblem problem;
  std::size_t split = n_samples * 4 / 5;
  for (std::size_t i = 0; i < n_samples; ++i) {
    Dataset& part = i < split ? problem.train : problem.test;
    part.samples.push_back(all.samples[i]);
    part.labels.push_back(all.labels[i]);
  }

  TinyNet& net = problem.net;
  net.input_channels = kToyChannels;
  net.input_length = kToyLength;
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto init_layer = [&](Eigen::Index out, Eigen::Index in, Activation act) {
    DenseLayer layer;
    double scale = std::sqrt(2.0 / static_cast<double>(in));
    layer.weights = Eigen::MatrixXd::NullaryExpr(out, in, [&]() { return scale * gauss(rng); });
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.activation = act;
    return layer;
  };
  net.layers.push_back(init_layer(16, net.input_size(), Activation::ReLU));
  net.layers.push_back(init_layer(2, 16, Activation::Identity));

  constexpr int kEpochs = 300;
  constexpr double kLearningRate = 0.1;
  const double batch = static_cast<double>(problem.train.size());
  for (int epoch = 0; epoch < kEpochs; ++epoch) {
    std::vector<Eigen::MatrixXd> dw;
    std::vector<Eigen::VectorXd> db;
    for (const DenseLayer& layer : net.layers) {
      dw.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
      db.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }
    for (std::size_t i = 0; i < problem.train.size(); ++i) {
      Eigen::VectorXd input = flatten(problem.train.samples[i]);
      ForwardTrace trace = run_forward(net, input);
      Gradients grads = run_backward(net, input, trace, problem.train.labels[i]);
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        dw[l] += grads.weights[l];
        db[l] += grads.bias[l];
      }
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      net.layers[l].weights -= (kLearningRate / batch) * dw[l];
      net.layers[l].bias -= (kLearningRate / batch) * db[l];
    }
  }

  double held_out = accuracy(net, problem.test);
  if (held_out < 0.90) {
    raise(Errc::ConvergenceFailure,
          "held-out accuracy " + std::to_string(held_out) + " below 0.90");
  }
  return problem;
}

}  // namespace bciflow::sig
