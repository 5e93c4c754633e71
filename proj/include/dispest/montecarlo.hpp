#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dispest/fisher.hpp"
#include "dispest/protocols.hpp"
#include "dispest/rng.hpp"

// Monte Carlo check that the protocol estimators saturate the Cramer-Rao
// bound. An experiment is `repeats` independent repetitions of an N-probe
// run; each repetition gets its own generator derived from the master seed,
// so results are reproducible and independent of repetition order.

namespace dispest {

// A repetition produced data from which a parameter cannot be estimated
// (for the separable protocol: one of the branches received no probes).
struct IdentifiabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ProtocolKind { Entangled, Separable };

struct ExperimentConfig {
  ProtocolKind protocol = ProtocolKind::Entangled;
  double r = 1.0;
  double w1 = 0.5;  // separable branch weight
  DisplacementParams truth;
  long long probes = 1;
  int repeats = 2;
  SplitMode split = SplitMode::Random;
  std::uint64_t seed = 1;
};

// Entangled-protocol estimator: the readout means are (mu, nu)/sqrt2, so the
// estimate is sqrt2 times the sample means.
inline Eigen::Vector2d estimate_entangled(const std::vector<std::pair<double, double>>& samples) {
  if (samples.empty()) throw std::invalid_argument("estimate_entangled: no samples");
  double sx = 0.0, sp = 0.0;
  for (const auto& [x, p] : samples) {
    sx += x;
    sp += p;
  }
  const double n = static_cast<double>(samples.size());
  return std::numbers::sqrt2 * Eigen::Vector2d(sx / n, sp / n);
}

// Separable-protocol estimator: per-label sample means (label 1 estimates mu,
// label 2 estimates nu). A label with no probes leaves its parameter
// unidentified.
inline Eigen::Vector2d estimate_separable(const std::vector<std::pair<int, double>>& samples) {
  if (samples.empty()) throw std::invalid_argument("estimate_separable: no samples");
  double sum1 = 0.0, sum2 = 0.0;
  long long n1 = 0, n2 = 0;
  for (const auto& [label, value] : samples) {
    if (label == 1) {
      sum1 += value;
      ++n1;
    } else if (label == 2) {
      sum2 += value;
      ++n2;
    } else {
      throw std::invalid_argument("estimate_separable: label must be 1 or 2");
    }
  }
  if (n1 == 0 || n2 == 0) {
    throw IdentifiabilityError(n1 == 0 ? "estimate_separable: no label-1 probes, mu unidentified"
                                       : "estimate_separable: no label-2 probes, nu unidentified");
  }
  return {sum1 / static_cast<double>(n1), sum2 / static_cast<double>(n2)};
}

struct ExperimentRecord {
  ExperimentConfig config;
  std::vector<Eigen::Vector2d> estimates;  // one row per repetition, NaN on failure
  int failures = 0;
  Eigen::Matrix2d empirical_cov;   // Bessel-corrected over successful repetitions
  Eigen::Matrix2d crb;             // analytic bound, C^{-1}/probes
  Eigen::Vector2d variance_ratio;  // empirical diagonal over bound diagonal
};

inline ExperimentRecord run_experiment(const ExperimentConfig& config) {
  if (config.probes < 1) throw std::invalid_argument("run_experiment: need at least one probe");
  if (config.repeats < 2) throw std::invalid_argument("run_experiment: need at least two repetitions");
  const FisherMatrix info = (config.protocol == ProtocolKind::Entangled)
                                ? cfi_entangled(config.r)
                                : cfi_separable(config.r, config.w1);
  ExperimentRecord record;
  record.config = config;
  record.crb = crb(info, config.probes).bound;
  record.estimates.reserve(static_cast<std::size_t>(config.repeats));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < config.repeats; ++i) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i)));
    try {
      if (config.protocol == ProtocolKind::Entangled) {
        const auto samples =
            sample_entangled(config.r, config.truth.mu, config.truth.nu, rng, config.probes);
        record.estimates.push_back(estimate_entangled(samples));
      } else {
        const auto samples = sample_separable(config.r, config.w1, config.truth.mu, config.truth.nu,
                                              config.split, rng, config.probes);
        record.estimates.push_back(estimate_separable(samples));
      }
    } catch (const IdentifiabilityError&) {
      ++record.failures;
      record.estimates.push_back(Eigen::Vector2d(nan, nan));
    }
  }

  const int successes = config.repeats - record.failures;
  if (successes < 2) {
    record.empirical_cov.setConstant(nan);
    record.variance_ratio.setConstant(nan);
    return record;
  }
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& e : record.estimates) {
    if (!e.hasNaN()) mean += e;
  }
  mean /= static_cast<double>(successes);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& e : record.estimates) {
    if (!e.hasNaN()) cov += (e - mean) * (e - mean).transpose();
  }
  record.empirical_cov = cov / static_cast<double>(successes - 1);
  record.variance_ratio = Eigen::Vector2d(record.empirical_cov(0, 0) / record.crb(0, 0),
                                          record.empirical_cov(1, 1) / record.crb(1, 1));
  return record;
}

}  // namespace dispest
