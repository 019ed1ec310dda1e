#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bciflow/signal.hpp"

namespace bciflow::sig {

enum class Activation { ReLU, Identity };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::Identity;
};

/// A small dense classifier over flattened signals with softmax
/// cross-entropy loss. Stands in for the full EEG architectures; gradients
/// are written out by hand so the attack math has an exact oracle-checkable
/// backward pass.
struct TinyNet {
  Eigen::Index input_channels = 0;
  Eigen::Index input_length = 0;
  std::vector<DenseLayer> layers;

  Eigen::Index input_size() const { return input_channels * input_length; }
  Eigen::Index num_classes() const { return layers.empty() ? 0 : layers.back().bias.size(); }
};

/// Row-major flattening: channel 0's samples first.
Eigen::VectorXd flatten(const Signal& signal);

Eigen::VectorXd forward(const TinyNet& net, const Signal& signal);

/// Softmax cross-entropy against the integer label; always >= 0.
double loss(const TinyNet& net, const Signal& signal, int label);

/// Analytic gradient of the loss w.r.t. the input signal, via
/// backpropagation through the layer chain. Shape matches the signal.
Eigen::MatrixXd input_gradient(const TinyNet& net, const Signal& signal, int label);

int predict(const TinyNet& net, const Signal& signal);

double accuracy(const TinyNet& net, const Dataset& dataset);

struct ToyProblem {
  TinyNet net;
  Dataset train;
  Dataset test;
};

/// Generates the two-class synthetic multichannel problem (class-dependent
/// sinusoid plus noise) and trains the net by full-batch gradient descent.
/// Deterministic per seed; throws ConvergenceFailure if the held-out
/// accuracy stays below 0.90 after the fixed epoch budget.
ToyProblem train_toy(std::uint64_t seed, std::size_t n_samples);

/// The raw synthetic dataset behind train_toy, exposed for oracles.
Dataset make_toy_dataset(std::uint64_t seed, std::size_t n_samples);

}  // namespace bciflow::sig
