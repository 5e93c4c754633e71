#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dispest/fisher.hpp"
#include "dispest/gaussian.hpp"
#include "dispest/protocols.hpp"
#include "dispest/simplex.hpp"

// Lossy-channel analysis. Arm 1 (the displaced arm) has transmissivity eta1,
// arm 2 (the reference arm of the interferometer) eta2. V_S and V_A are the
// squeezed and anti-squeezed quadrature variances of the input probes
// (e^{-2r}/2 and e^{+2r}/2 for pure squeezing).
//
// Normalization note: the two balanced-scheme informations below
// (cfi_separable_lossy, cfi_entangled_lossy) are quoted as 2/V, the Fisher
// information of a location family written as exp(-(x-m)^2/V); that is 4x the
// per-probe weighted convention used by the lossless protocol formulas. The
// generalized-interferometer result is per-probe. Determinant ratios always
// compare matched conventions, so the factor drops out of every comparison.

namespace dispest {

// Raised when requested variances cannot come from a physical state.
struct PhysicalityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void check_eta(double eta, const char* who) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument(std::string(who) + ": eta must be in [0, 1]");
}
inline void check_variances(double vs, double va, const char* who) {
  if (!(vs > 0.0) || !(va >= vs)) {
    throw std::invalid_argument(std::string(who) + ": need 0 < V_S <= V_A");
  }
}
}  // namespace detail

// Measured-quadrature variance of a probe of variance vs after loss eta1:
// eta1 vs + (1 - eta1)/2.
inline double v_out(double eta1, double vs) {
  detail::check_eta(eta1, "v_out");
  if (!(vs > 0.0)) throw std::invalid_argument("v_out: variance must be positive");
  return eta1 * vs + (1.0 - eta1) * kVacuumVariance;
}

// Single-channel protocol under loss, both Cartesian entries 2/V_out
// (location-family normalization; see header note).
inline FisherMatrix cfi_separable_lossy(double eta1, double vs) {
  const double c = 2.0 / v_out(eta1, vs);
  return FisherMatrix(Chart::Cartesian, Eigen::Vector2d(c, c).asDiagonal());
}

// Measured-port variance of the balanced interferometer scheme with per-arm
// losses (eta1, eta2):
//   V_m = [ (V_S + V_A - 1)(eta1 + eta2) + 2 sqrt(eta1 eta2) (V_S - V_A) + 2 ] / 4.
// Both readout ports have this variance. At eta1 = eta2 it reduces to v_out.
inline double v_m(double vs, double va, double eta1, double eta2) {
  detail::check_variances(vs, va, "v_m");
  detail::check_eta(eta1, "v_m");
  detail::check_eta(eta2, "v_m");
  return ((vs + va - 1.0) * (eta1 + eta2) + 2.0 * std::sqrt(eta1 * eta2) * (vs - va) + 2.0) / 4.0;
}

// Balanced interferometer scheme under loss, both Cartesian entries 2/V_m
// (same normalization as cfi_separable_lossy).
inline FisherMatrix cfi_entangled_lossy(double vs, double va, double eta1, double eta2) {
  const double c = 2.0 / v_m(vs, va, eta1, eta2);
  return FisherMatrix(Chart::Cartesian, Eigen::Vector2d(c, c).asDiagonal());
}

// Covariance of the balanced scheme's output: with O the balanced splitter
// and Y = diag(sqrt(eta1), sqrt(eta1), sqrt(eta2), sqrt(eta2)),
//   Sigma_out = (O^T Y O) Sigma_in (O^T Y O) + I/2 - O^T Y^2 O / 2.
// This closed form is exactly the pipeline "splitter, per-arm loss, inverse
// splitter" (conjugating the loss map by O preserves I/2). Errors if the
// result violates the uncertainty relation.
inline Eigen::Matrix4d sigma_out(const Eigen::Matrix4d& sigma_in, double eta1, double eta2,
                                 double t = 1.0 / std::numbers::sqrt2) {
  detail::check_eta(eta1, "sigma_out");
  detail::check_eta(eta2, "sigma_out");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("sigma_out: t must be in [0, 1]");
  const double rr = std::sqrt(1.0 - t * t);
  Eigen::Matrix4d o = Eigen::Matrix4d::Zero();
  for (int q = 0; q < 2; ++q) {
    o(0 + q, 0 + q) = t;
    o(0 + q, 2 + q) = rr;
    o(2 + q, 0 + q) = -rr;
    o(2 + q, 2 + q) = t;
  }
  Eigen::Vector4d y(std::sqrt(eta1), std::sqrt(eta1), std::sqrt(eta2), std::sqrt(eta2));
  const Eigen::Matrix4d a = o.transpose() * y.asDiagonal() * o;
  const Eigen::Matrix4d out = a * sigma_in * a + 0.5 * Eigen::Matrix4d::Identity() -
                              0.5 * o.transpose() * y.asDiagonal().toDenseMatrix() *
                                  y.asDiagonal().toDenseMatrix() * o;
  GaussianState check(Eigen::Vector4d::Zero(), (out + out.transpose()) * 0.5);
  if (!is_physical(check)) {
    throw PhysicalityError("sigma_out: output covariance violates the uncertainty relation");
  }
  return out;
}

// Same map applied to the standard input of the balanced scheme,
// Sigma_in = diag(V_S, V_A, V_A, V_S): an x-squeezed probe in arm 1 and a
// p-squeezed one in arm 2. Its (x1, x1) and (p2, p2) output entries equal
// v_m(vs, va, eta1, eta2).
inline Eigen::Matrix4d sigma_out(double vs, double va, double eta1, double eta2) {
  detail::check_variances(vs, va, "sigma_out");
  return sigma_out(Eigen::Vector4d(vs, va, va, vs).asDiagonal().toDenseMatrix(), eta1, eta2);
}

// Reference-arm transmissivity minimizing V_m at fixed eta1:
// sqrt(eta2) = sqrt(eta1) (V_A - V_S)/(V_A + V_S - 1), clamped into [0, 1].
// Undefined when V_A + V_S <= 1 (the denominator changes sign).
inline double optimal_eta2(double vs, double va, double eta1) {
  detail::check_variances(vs, va, "optimal_eta2");
  detail::check_eta(eta1, "optimal_eta2");
  if (!(va + vs > 1.0)) {
    throw std::domain_error("optimal_eta2: undefined for V_A + V_S <= 1");
  }
  const double root = std::sqrt(eta1) * (va - vs) / (va + vs - 1.0);
  const double clamped = std::min(1.0, std::max(0.0, root));
  return clamped * clamped;
}

// General two-splitter interferometer. t1, t2 are the splitter
// transmissivities; r_i = sqrt(1 - t_i^2). `closing` picks the orientation of
// the second splitter: true undoes the first splitter's rotation (the
// balanced scheme at t = 1/sqrt2), false continues it. The orientation only
// flips the sign of the cross term below.
struct InterferometerParams {
  double t1 = 1.0 / std::numbers::sqrt2;
  double t2 = 1.0 / std::numbers::sqrt2;
  bool closing = true;
  double r1() const { return std::sqrt(std::max(0.0, 1.0 - t1 * t1)); }
  double r2() const { return std::sqrt(std::max(0.0, 1.0 - t2 * t2)); }
};

// Readout-port variances (x of port 1, p of port 2) of the general lossy
// interferometer:
//   V1 = +-2 t1 r1 t2 r2 sqrt(eta1 eta2) (V_A - V_S) + (1 - t2^2 eta1 - r2^2 eta2)/2
//        + eta2 r2^2 (t1^2 V_A + r1^2 V_S) + eta1 t2^2 (r1^2 V_A + t1^2 V_S)
//   V2 = +-2 t1 r1 t2 r2 sqrt(eta1 eta2) (V_A - V_S) + (1 - t2^2 eta2 - r2^2 eta1)/2
//        + eta1 r2^2 (t1^2 V_A + r1^2 V_S) + eta2 t2^2 (r1^2 V_A + t1^2 V_S)
// with + for the continuing orientation and - for the closing one.
inline std::pair<double, double> interferometer_variances(double vs, double va, double eta1,
                                                          double eta2, const InterferometerParams& p) {
  detail::check_variances(vs, va, "interferometer_variances");
  detail::check_eta(eta1, "interferometer_variances");
  detail::check_eta(eta2, "interferometer_variances");
  if (!(p.t1 >= 0.0 && p.t1 <= 1.0 && p.t2 >= 0.0 && p.t2 <= 1.0)) {
    throw std::invalid_argument("interferometer_variances: transmissivities must be in [0, 1]");
  }
  const double t1 = p.t1, r1 = p.r1(), t2 = p.t2, r2 = p.r2();
  const double sign = p.closing ? -1.0 : 1.0;
  const double cross = sign * 2.0 * t1 * r1 * t2 * r2 * std::sqrt(eta1 * eta2) * (va - vs);
  const double v1 = cross + (1.0 - t2 * t2 * eta1 - r2 * r2 * eta2) / 2.0 +
                    eta2 * r2 * r2 * (t1 * t1 * va + r1 * r1 * vs) +
                    eta1 * t2 * t2 * (r1 * r1 * va + t1 * t1 * vs);
  const double v2 = cross + (1.0 - t2 * t2 * eta2 - r2 * r2 * eta1) / 2.0 +
                    eta1 * r2 * r2 * (t1 * t1 * va + r1 * r1 * vs) +
                    eta2 * t2 * t2 * (r1 * r1 * va + t1 * t1 * vs);
  return {v1, v2};
}

// Per-probe CFI of the general interferometer readout,
// diag(t2^2 / V1, r2^2 / V2).
inline FisherMatrix cfi_general_interferometer(double vs, double va, double eta1, double eta2,
                                               const InterferometerParams& p) {
  const auto [v1, v2] = interferometer_variances(vs, va, eta1, eta2, p);
  if (!(v1 > 0.0) || !(v2 > 0.0)) {
    throw PhysicalityError("cfi_general_interferometer: nonpositive readout variance");
  }
  return FisherMatrix(Chart::Cartesian,
                      Eigen::Vector2d(p.t2 * p.t2 / v1, p.r2() * p.r2() / v2).asDiagonal());
}

// det(C_interferometer) / det(C_single_channel) with both determinants in the
// same normalization: (2 v_out)^2 t2^2 r2^2 / (V1 V2). Equals 1 at
// eta1 = eta2 for the balanced closing interferometer.
inline double determinant_ratio(double vs, double va, double eta1, double eta2,
                                const InterferometerParams& p) {
  const auto [v1, v2] = interferometer_variances(vs, va, eta1, eta2, p);
  const double base = 2.0 * v_out(eta1, vs);
  const double t2sq = p.t2 * p.t2;
  const double r2sq = 1.0 - t2sq;
  return base * base * t2sq * r2sq / (v1 * v2);
}

struct RatioOptimum {
  double ratio = 0.0;
  InterferometerParams params;
};

// Maximize the determinant ratio over the interferometer: coarse
// resolution x resolution scan of (t1, t2) for both orientations, then
// Nelder-Mead polish of the winner (simplex diameter < 1e-6, clamped to the
// unit square).
inline RatioOptimum optimize_determinant_ratio(double vs, double va, double eta1, double eta2,
                                               int resolution = 101) {
  detail::check_variances(vs, va, "optimize_determinant_ratio");
  if (resolution < 2) throw std::invalid_argument("optimize_determinant_ratio: resolution must be >= 2");
  RatioOptimum best;
  best.ratio = -1.0;
  const double step = 1.0 / (resolution - 1);
  for (const bool closing : {true, false}) {
    for (int i = 0; i < resolution; ++i) {
      for (int j = 0; j < resolution; ++j) {
        const InterferometerParams p{i * step, j * step, closing};
        const double ratio = determinant_ratio(vs, va, eta1, eta2, p);
        if (ratio > best.ratio) {
          best.ratio = ratio;
          best.params = p;
        }
      }
    }
  }
  auto clamp01 = [](double x) { return std::min(1.0, std::max(0.0, x)); };
  const bool closing = best.params.closing;
  auto objective = [&](const Eigen::VectorXd& x) {
    const InterferometerParams p{clamp01(x(0)), clamp01(x(1)), closing};
    return -determinant_ratio(vs, va, eta1, eta2, p);
  };
  Eigen::Vector2d start(best.params.t1, best.params.t2);
  const SimplexResult polished = nelder_mead(objective, start, step);
  if (-polished.value > best.ratio) {
    best.ratio = -polished.value;
    best.params = InterferometerParams{clamp01(polished.x(0)), clamp01(polished.x(1)), closing};
  }
  return best;
}

struct RatioCell {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double ratio = 0.0;
  InterferometerParams params;
};

struct LossGrid {
  std::vector<double> etas;      // shared axis for eta1 and eta2
  std::vector<RatioCell> cells;  // row-major, eta1 outer, eta2 inner
};

// Optimized determinant ratio over an eta1 x eta2 grid (default 101 points
// from 0.01 to 1). The probe variances must belong to a physical state
// (V_S V_A >= 1/4).
inline LossGrid loss_grid(double vs, double va, int resolution = 101, double eta_min = 0.01,
                          double eta_max = 1.0, int optimizer_resolution = 101) {
  detail::check_variances(vs, va, "loss_grid");
  if (vs * va < 0.25 - 1e-12) {
    throw PhysicalityError("loss_grid: V_S V_A < 1/4 cannot come from a physical state");
  }
  if (resolution < 2) throw std::invalid_argument("loss_grid: resolution must be >= 2");
  if (!(eta_min > 0.0 && eta_min < eta_max && eta_max <= 1.0)) {
    throw std::invalid_argument("loss_grid: need 0 < eta_min < eta_max <= 1");
  }
  LossGrid grid;
  grid.etas.resize(resolution);
  for (int i = 0; i < resolution; ++i) {
    grid.etas[i] = eta_min + (eta_max - eta_min) * i / (resolution - 1);
  }
  grid.cells.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const RatioOptimum opt =
          optimize_determinant_ratio(vs, va, grid.etas[i], grid.etas[j], optimizer_resolution);
      grid.cells.push_back(RatioCell{grid.etas[i], grid.etas[j], opt.ratio, opt.params});
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Amplitude estimation under loss

// Benchmark information of an n-photon probe after loss eta:
//   2 sum_k binom(n, k) eta^k (1-eta)^{n-k} (2k + 1).
// Binomials are taken in log space above n = 50.
inline double fock_qfi_lossy(int n, double eta) {
  if (n < 0) throw std::invalid_argument("fock_qfi_lossy: photon number must be >= 0");
  detail::check_eta(eta, "fock_qfi_lossy");
  if (eta == 1.0) return 4.0 * static_cast<double>(n) + 2.0;
  if (eta == 0.0 || n == 0) return 2.0;
  double sum = 0.0;
  if (n <= 50) {
    double binom = 1.0;  // binom(n, 0)
    for (int k = 0; k <= n; ++k) {
      sum += binom * std::pow(eta, k) * std::pow(1.0 - eta, n - k) * (2.0 * k + 1.0);
      binom = binom * (n - k) / (k + 1.0);
    }
  } else {
    const double lg_n = std::lgamma(n + 1.0);
    for (int k = 0; k <= n; ++k) {
      const double log_term = lg_n - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                              k * std::log(eta) + (n - k) * std::log1p(-eta);
      sum += std::exp(log_term) * (2.0 * k + 1.0);
    }
  }
  return 2.0 * sum;
}

// Amplitude-direction CFI of the squeezed-probe protocol after loss,
// 1/(2 V_out) with V_S = e^{-2r}/2 (per-probe convention; e^{2r} at eta = 1).
inline double cfi_separable_amplitude_lossy(double r, double eta) {
  if (!std::isfinite(r) || std::abs(r) > kMaxSqueezing) {
    throw std::invalid_argument("cfi_separable_amplitude_lossy: |r| must be finite and <= 25");
  }
  const double vs = std::exp(-2.0 * r) * kVacuumVariance;
  return 1.0 / (2.0 * v_out(eta, vs));
}

struct AmplitudeComparisonRow {
  int energy = 0;        // probe mean photon number
  double fock = 0.0;     // n-photon benchmark at eta
  double squeezed = 0.0; // squeezed probe of equal energy at eta
  double fock_ideal = 0.0;
  double squeezed_ideal = 0.0;
};

// Fock-vs-squeezed amplitude information at equal probe energy, for energies
// 1..nmax, at transmissivity eta and at the lossless point.
inline std::vector<AmplitudeComparisonRow> amplitude_comparison(int nmax, double eta) {
  if (nmax < 1) throw std::invalid_argument("amplitude_comparison: need nmax >= 1");
  detail::check_eta(eta, "amplitude_comparison");
  std::vector<AmplitudeComparisonRow> rows;
  rows.reserve(static_cast<std::size_t>(nmax));
  for (int n = 1; n <= nmax; ++n) {
    const double r = squeezing_for_mean_photons(static_cast<double>(n));
    rows.push_back(AmplitudeComparisonRow{n, fock_qfi_lossy(n, eta), cfi_separable_amplitude_lossy(r, eta),
                                          fock_qfi_lossy(n, 1.0), cfi_separable_amplitude_lossy(r, 1.0)});
  }
  return rows;
}

}  // namespace dispest
