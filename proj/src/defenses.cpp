#include "bciflow/defenses.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace bciflow::sig {

namespace {

void check_window(const Signal& signal, int window) {
  if (window < 1 || window > signal.length() || window % 2 == 0) {
    raise(Errc::BadWindow, "window " + std::to_string(window) + " must be odd and within [1, " +
                               std::to_string(signal.length()) + "]");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ (0xD1B54A32D192ED03ull * (index + 1));
}

}  // namespace

Signal moving_average(const Signal& signal, int window) {
  validate(signal);
  check_window(signal, window);
  const int half = window / 2;
  Signal out = signal;
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    for (Eigen::Index i = 0; i < signal.length(); ++i) {
      Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
      Eigen::Index hi = std::min<Eigen::Index>(signal.length() - 1, i + half);
      out.data(c, i) = signal.data.row(c).segment(lo, hi - lo + 1).mean();
    }
  }
  return out;
}

Signal median_filter(const Signal& signal, int window) {
  validate(signal);
  check_window(signal, window);
  const int half = window / 2;
  Signal out = signal;
  std::vector<double> scratch;
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    for (Eigen::Index i = 0; i < signal.length(); ++i) {
      Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
      Eigen::Index hi = std::min<Eigen::Index>(signal.length() - 1, i + half);
      scratch.assign(signal.data.row(c).segment(lo, hi - lo + 1).begin(),
                     signal.data.row(c).segment(lo, hi - lo + 1).end());
      auto mid = scratch.begin() + scratch.size() / 2;
      std::nth_element(scratch.begin(), mid, scratch.end());
      if (scratch.size() % 2 == 1) {
        out.data(c, i) = *mid;
      } else {
        double upper = *mid;
        double lower = *std::max_element(scratch.begin(), mid);
        out.data(c, i) = (lower + upper) / 2.0;
      }
    }
  }
  return out;
}

Signal savgol_filter(const Signal& signal, int window, int order) {
  validate(signal);
  check_window(signal, window);
  if (order < 0 || order >= window) {
    raise(Errc::BadOrder, "order " + std::to_string(order) + " must lie in [0, window)");
  }
  const int half = window / 2;
  Signal out = signal;
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    for (Eigen::Index i = 0; i < signal.length(); ++i) {
      Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
      Eigen::Index hi = std::min<Eigen::Index>(signal.length() - 1, i + half);
      Eigen::Index m = hi - lo + 1;
      // Shrunken edge windows hold fewer points than the nominal order
      // supports; clamp so the fit stays determined.
      Eigen::Index eff_order = std::min<Eigen::Index>(order, m - 1);
      Eigen::MatrixXd vandermonde(m, eff_order + 1);
      for (Eigen::Index r = 0; r < m; ++r) {
        double t = static_cast<double>(lo + r - i);  // abscissa relative to the center
        double power = 1.0;
        for (Eigen::Index k = 0; k <= eff_order; ++k) {
          vandermonde(r, k) = power;
          power *= t;
        }
      }
      Eigen::VectorXd values = signal.data.row(c).segment(lo, m).transpose();
      Eigen::VectorXd coeffs = vandermonde.colPivHouseholderQr().solve(values);
      out.data(c, i) = coeffs(0);  // polynomial evaluated at t = 0
    }
  }
  return out;
}

Signal gaussian_augment(const Signal& signal, const Eigen::VectorXd& sigma_per_step,
                        std::uint64_t seed) {
  validate(signal);
  if (sigma_per_step.size() != signal.length()) {
    raise(Errc::ShapeMismatch, "sigma vector has " + std::to_string(sigma_per_step.size()) +
                                   " entries for a length-" + std::to_string(signal.length()) +
                                   " signal");
  }
  if ((sigma_per_step.array() < 0.0).any()) {
    raise(Errc::InvalidParams, "sigma entries must be nonnegative");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Signal out = signal;
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    for (Eigen::Index t = 0; t < signal.length(); ++t) {
      out.data(c, t) += sigma_per_step(t) * gauss(rng);
    }
  }
  return out;
}

Signal gaussian_augment(const Signal& signal, double sigma, std::uint64_t seed) {
  return gaussian_augment(signal, Eigen::VectorXd::Constant(signal.length(), sigma), seed);
}

Dataset augment_dataset(const Dataset& dataset, double sigma, double ratio, std::uint64_t seed,
                        AugmentMode mode) {
  if (ratio < 0.0 || ratio > 1.0) {
    raise(Errc::InvalidParams, "ratio must lie in [0, 1]");
  }
  std::size_t count = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(dataset.size())));
  std::vector<std::size_t> indices(dataset.size());
  std::iota(indices.begin(), indices.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  indices.resize(count);
  std::sort(indices.begin(), indices.end());

  Dataset out = dataset;
  for (std::size_t i : indices) {
    Signal noisy = gaussian_augment(dataset.samples[i], sigma, derive_seed(seed, i));
    if (mode == AugmentMode::Replace) {
      out.samples[i] = std::move(noisy);
    } else {
      out.samples.push_back(std::move(noisy));
      out.labels.push_back(dataset.labels[i]);
    }
  }
  return out;
}

const char* to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::Identity: return "identity";
    case DefenseKind::MovingAverage: return "mavg";
    case DefenseKind::Median: return "median";
    case DefenseKind::SavitzkyGolay: return "savgol";
    case DefenseKind::Noise: return "noise";
  }
  return "identity";
}

std::optional<DefenseKind> defense_kind_from(const std::string& name) {
  if (name == "identity") return DefenseKind::Identity;
  if (name == "mavg") return DefenseKind::MovingAverage;
  if (name == "median") return DefenseKind::Median;
  if (name == "savgol") return DefenseKind::SavitzkyGolay;
  if (name == "noise") return DefenseKind::Noise;
  return std::nullopt;
}

Signal apply_defense(const Signal& signal, const DefenseSpec& spec, std::uint64_t sample_index) {
  switch (spec.kind) {
    case DefenseKind::Identity: return signal;
    case DefenseKind::MovingAverage: return moving_average(signal, spec.window);
    case DefenseKind::Median: return median_filter(signal, spec.window);
    case DefenseKind::SavitzkyGolay: return savgol_filter(signal, spec.window, spec.order);
    case DefenseKind::Noise:
      return gaussian_augment(signal, spec.sigma, derive_seed(spec.seed, sample_index));
  }
  raise(Errc::InvalidParams, "unknown defense kind");
}

DefenseOutcome evaluate_defense(const TinyNet& net, const Dataset& dataset,
                                const AttackSpec& attack, const DefenseSpec& defense) {
  if (dataset.samples.empty()) raise(Errc::InvalidParams, "empty dataset");
  std::size_t attacked_hits = 0;
  std::size_t defended_hits = 0;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    Signal adversarial = apply_attack(net, dataset.samples[i], dataset.labels[i], attack, i);
    if (predict(net, adversarial) == dataset.labels[i]) ++attacked_hits;
    Signal squeezed = apply_defense(adversarial, defense, i);
    if (predict(net, squeezed) == dataset.labels[i]) ++defended_hits;
  }
  double n = static_cast<double>(dataset.size());
  return DefenseOutcome{static_cast<double>(attacked_hits) / n,
                        static_cast<double>(defended_hits) / n};
}

}  // namespace bciflow::sig
