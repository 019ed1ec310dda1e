#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bciflow/tinynet.hpp"

namespace bciflow::sig {

/// Budget and schedule for the iterated signed-gradient attack.
struct AttackParams {
  double epsilon = 0.0;   // l-infinity budget
  double epsilon1 = 0.0;  // random-start radius, must stay below epsilon
  double alpha = 0.0;     // per-step size
  int iterations = 1;

  void validate() const;
};

/// Single signed-gradient step: x + epsilon * sign(grad L). Every element
/// moves by exactly +-epsilon or 0 (sign(0) = 0).
Signal fgsm(const TinyNet& net, const Signal& signal, int label, double epsilon);

/// Random start inside the epsilon1 ball (sign of seeded Gaussian draws),
/// then `iterations` signed-gradient ascent steps, each projected back onto
/// the epsilon ball around the input. Deterministic given the seed.
Signal pgd(const TinyNet& net, const Signal& signal, int label, const AttackParams& params,
           std::uint64_t seed);

/// Black-box peripheral delay: the first tau samples become the per-channel
/// mean, the rest are the signal shifted right by tau.
Signal delay_attack(const Signal& signal, Eigen::Index tau);

enum class AttackKind { Fgsm, Pgd, Delay };

const char* to_string(AttackKind kind);
std::optional<AttackKind> attack_kind_from(const std::string& name);

/// One concrete attack configuration. For Pgd, negative epsilon1/alpha pick
/// the defaults epsilon/2 and 2.5*epsilon/iterations.
struct AttackSpec {
  AttackKind kind = AttackKind::Fgsm;
  double epsilon = 0.0;
  double epsilon1 = -1.0;
  double alpha = -1.0;
  int iterations = 10;
  Eigen::Index tau = 0;
  std::uint64_t seed = 0;
};

/// Applies the attack to one sample; sample_index decorrelates per-sample
/// randomness while keeping the whole run deterministic.
Signal apply_attack(const TinyNet& net, const Signal& signal, int label, const AttackSpec& spec,
                    std::uint64_t sample_index = 0);

/// Accuracy over the dataset at each grid point. The grid overrides epsilon
/// (fgsm/pgd) or tau (delay); a zero grid point reproduces clean accuracy.
AccuracyTable evaluate_under_attack(const TinyNet& net, const Dataset& dataset, AttackSpec spec,
                                    const std::vector<double>& grid);

}  // namespace bciflow::sig
