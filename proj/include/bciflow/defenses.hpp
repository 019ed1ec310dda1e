#pragma once

#include <cstdint>

#include "bciflow/attacks.hpp"

namespace bciflow::sig {

/// Centered sliding mean; windows shrink at the edges (no padding), so a
/// constant signal passes through unchanged. Window must be odd.
Signal moving_average(const Signal& signal, int window);

/// Centered sliding median with the same edge handling.
Signal median_filter(const Signal& signal, int window);

/// Local least-squares polynomial fit of the given order, evaluated at each
/// window center. At the edges the window shrinks and the effective order is
/// clamped to keep the fit determined; order=0 reduces to moving_average.
Signal savgol_filter(const Signal& signal, int window, int order);

/// Element-wise additive noise with per-time-step deviations: sample k of
/// every channel gets N(0, sigma[k]^2). Deterministic per seed.
Signal gaussian_augment(const Signal& signal, const Eigen::VectorXd& sigma_per_step,
                        std::uint64_t seed);
Signal gaussian_augment(const Signal& signal, double sigma, std::uint64_t seed);

enum class AugmentMode {
  Replace,  // size preserved: chosen samples swapped for noisy copies
  Append,   // noisy copies appended (doubled at ratio 1)
};

/// Augments a ratio-fraction of the samples (default style: 50:50 split at
/// ratio 0.5). The chosen subset is a seeded shuffle, so runs reproduce.
Dataset augment_dataset(const Dataset& dataset, double sigma, double ratio, std::uint64_t seed,
                        AugmentMode mode = AugmentMode::Replace);

enum class DefenseKind { Identity, MovingAverage, Median, SavitzkyGolay, Noise };

const char* to_string(DefenseKind kind);
std::optional<DefenseKind> defense_kind_from(const std::string& name);

struct DefenseSpec {
  DefenseKind kind = DefenseKind::Identity;
  int window = 3;
  int order = 2;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

Signal apply_defense(const Signal& signal, const DefenseSpec& spec,
                     std::uint64_t sample_index = 0);

struct DefenseOutcome {
  double attacked = 0.0;  // accuracy on the raw adversarial test set
  double defended = 0.0;  // accuracy with the filter applied pre-classification
};

/// Attacks the whole dataset, then measures accuracy with and without the
/// defense filter in front of the classifier.
DefenseOutcome evaluate_defense(const TinyNet& net, const Dataset& dataset,
                                const AttackSpec& attack, const DefenseSpec& defense);

}  // namespace bciflow::sig
