#include "bciflow/attacks.hpp"

#include <random>

namespace bciflow::sig {

namespace {

Eigen::MatrixXd sign_of(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double v) { return v > 0.0 ? 1.0 : v < 0.0 ? -1.0 : 0.0; });
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ (0x9E3779B97F4A7C15ull * (index + 1));
}

}  // namespace

void AttackParams::validate() const {
  if (epsilon < 0.0) raise(Errc::InvalidParams, "epsilon must be nonnegative");
  if (epsilon1 < 0.0) raise(Errc::InvalidParams, "epsilon1 must be nonnegative");
  if (epsilon1 >= epsilon) raise(Errc::InvalidParams, "epsilon1 must be smaller than epsilon");
  if (alpha <= 0.0) raise(Errc::InvalidParams, "alpha must be positive");
  if (iterations < 1) raise(Errc::InvalidParams, "iterations must be at least 1");
}

Signal fgsm(const TinyNet& net, const Signal& signal, int label, double epsilon) {
  if (epsilon < 0.0) raise(Errc::InvalidParams, "epsilon must be nonnegative");
  Eigen::MatrixXd grad = input_gradient(net, signal, label);
  Signal adversarial = signal;
  adversarial.data = signal.data + epsilon * sign_of(grad);
  return adversarial;
}

Signal pgd(const TinyNet& net, const Signal& signal, int label, const AttackParams& params,
           std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd start_noise =
      Eigen::MatrixXd::NullaryExpr(signal.channels(), signal.length(), [&]() { return gauss(rng); });

  const Eigen::MatrixXd lower = signal.data.array() - params.epsilon;
  const Eigen::MatrixXd upper = signal.data.array() + params.epsilon;

  Signal current = signal;
  current.data = signal.data + params.epsilon1 * sign_of(start_noise);
  for (int step = 0; step < params.iterations; ++step) {
    Eigen::MatrixXd grad = input_gradient(net, current, label);
    current.data = current.data + params.alpha * sign_of(grad);
    current.data = current.data.cwiseMax(lower).cwiseMin(upper);
  }
  return current;
}

Signal delay_attack(const Signal& signal, Eigen::Index tau) {
  if (tau < 0 || tau > signal.length()) {
    raise(Errc::TauOutOfRange, "tau " + std::to_string(tau) + " outside [0, " +
                                   std::to_string(signal.length()) + "]");
  }
  Signal delayed = signal;
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    double mean = signal.data.row(c).mean();
    for (Eigen::Index t = 0; t < signal.length(); ++t) {
      delayed.data(c, t) = t < tau ? mean : signal.data(c, t - tau);
    }
  }
  return delayed;
}

const char* to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::Fgsm: return "fgsm";
    case AttackKind::Pgd: return "pgd";
    case AttackKind::Delay: return "delay";
  }
  return "fgsm";
}

std::optional<AttackKind> attack_kind_from(const std::string& name) {
  if (name == "fgsm") return AttackKind::Fgsm;
  if (name == "pgd") return AttackKind::Pgd;
  if (name == "delay") return AttackKind::Delay;
  return std::nullopt;
}

Signal apply_attack(const TinyNet& net, const Signal& signal, int label, const AttackSpec& spec,
                    std::uint64_t sample_index) {
  switch (spec.kind) {
    case AttackKind::Fgsm:
      return fgsm(net, signal, label, spec.epsilon);
    case AttackKind::Pgd: {
      if (spec.epsilon == 0.0) return signal;  // clean point
      AttackParams params;
      params.epsilon = spec.epsilon;
      params.epsilon1 = spec.epsilon1 >= 0.0 ? spec.epsilon1 : spec.epsilon / 2.0;
      params.iterations = spec.iterations;
      params.alpha =
          spec.alpha > 0.0 ? spec.alpha : 2.5 * spec.epsilon / static_cast<double>(spec.iterations);
      return pgd(net, signal, label, params, derive_seed(spec.seed, sample_index));
    }
    case AttackKind::Delay:
      return delay_attack(signal, spec.tau);
  }
  raise(Errc::InvalidParams, "unknown attack kind");
}

AccuracyTable evaluate_under_attack(const TinyNet& net, const Dataset& dataset, AttackSpec spec,
                                    const std::vector<double>& grid) {
  if (dataset.samples.empty()) raise(Errc::InvalidParams, "empty dataset");
  AccuracyTable table;
  table.param_name = spec.kind == AttackKind::Delay ? "tau" : "epsilon";
  for (double point : grid) {
    if (spec.kind == AttackKind::Delay) {
      spec.tau = static_cast<Eigen::Index>(point);
    } else {
      spec.epsilon = point;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
      Signal adversarial = apply_attack(net, dataset.samples[i], dataset.labels[i], spec, i);
      if (predict(net, adversarial) == dataset.labels[i]) ++hits;
    }
    table.rows.emplace_back(point,
                            static_cast<double>(hits) / static_cast<double>(dataset.size()));
  }
  return table;
}

}  // namespace bciflow::sig
