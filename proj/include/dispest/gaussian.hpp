#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dispest/rng.hpp"

// Gaussian states and channels in the convention hbar = 1, vacuum quadrature
// variance 1/2. Quadratures are interleaved as (x1, p1, x2, p2, ...), so a
// state on M modes has a mean vector of length 2M and a 2M x 2M covariance.
// All channel operations are free functions returning a new state.

namespace dispest {

inline constexpr double kVacuumVariance = 0.5;
// Squeezing beyond this loses all meaning in double precision (e^{2r} spans
// ~43 decades at r = 25).
inline constexpr double kMaxSqueezing = 25.0;
// Marginal variances are clamped here before sampling or division.
inline constexpr double kVarianceFloor = 1e-15;

enum class Quadrature { X, P };

// One-dimensional homodyne outcome distribution.
struct Marginal1D {
  double mean = 0.0;
  double variance = kVacuumVariance;  // > 0
};

class GaussianState {
 public:
  // cov must be square of size 2M, finite, and symmetric within 1e-12; it is
  // symmetrized exactly on construction.
  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov)
      : mean_(std::move(mean)), cov_(std::move(cov)) {
    const auto n = mean_.size();
    if (n < 2 || n % 2 != 0) {
      throw std::invalid_argument("GaussianState: mean length must be even and >= 2");
    }
    if (cov_.rows() != n || cov_.cols() != n) {
      throw std::invalid_argument("GaussianState: covariance shape does not match mean");
    }
    if (!mean_.allFinite() || !cov_.allFinite()) {
      throw std::invalid_argument("GaussianState: non-finite entries");
    }
    const double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) {
      throw std::invalid_argument("GaussianState: covariance asymmetric by " + std::to_string(asym));
    }
    cov_ = ((cov_ + cov_.transpose()) * 0.5).eval();
  }

  int modes() const { return static_cast<int>(mean_.size() / 2); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

// Symplectic form Omega for the interleaved ordering: block-diagonal copies of
// [[0, 1], [-1, 0]].
inline Eigen::MatrixXd symplectic_form(int modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
  for (int m = 0; m < modes; ++m) {
    omega(2 * m, 2 * m + 1) = 1.0;
    omega(2 * m + 1, 2 * m) = -1.0;
  }
  return omega;
}

inline GaussianState vacuum(int modes) {
  if (modes < 1) throw std::invalid_argument("vacuum: need at least one mode");
  return GaussianState(Eigen::VectorXd::Zero(2 * modes),
                       Eigen::MatrixXd::Identity(2 * modes, 2 * modes) * kVacuumVariance);
}

// Single-mode squeezed vacuum: cov = diag(e^{-2r}/2, e^{2r}/2). Positive r
// squeezes X; negative r squeezes P.
inline GaussianState squeezed_vacuum(double r) {
  if (!std::isfinite(r) || std::abs(r) > kMaxSqueezing) {
    throw std::invalid_argument("squeezed_vacuum: |r| must be finite and <= 25");
  }
  Eigen::MatrixXd cov(2, 2);
  cov << std::exp(-2.0 * r) * kVacuumVariance, 0.0, 0.0, std::exp(2.0 * r) * kVacuumVariance;
  return GaussianState(Eigen::VectorXd::Zero(2), cov);
}

// Tensor product; modes of `a` come first.
inline GaussianState tensor(const GaussianState& a, const GaussianState& b) {
  const auto na = a.mean().size(), nb = b.mean().size();
  Eigen::VectorXd mean(na + nb);
  mean << a.mean(), b.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return GaussianState(std::move(mean), std::move(cov));
}

namespace detail {
inline void check_mode(const GaussianState& s, int mode, const char* who) {
  if (mode < 0 || mode >= s.modes()) throw std::invalid_argument(std::string(who) + ": mode out of range");
}
}  // namespace detail

// Beam splitter of transmissivity t (amplitude convention, t in [0, 1],
// r = sqrt(1 - t^2)) on modes (a, b):
//   x_a' =  t x_a + r x_b,   x_b' = -r x_a + t x_b   (same for p).
// The matrix is orthogonal and symplectic. Swapping the mode arguments applies
// the inverse (transposed) convention, so apply_beamsplitter(s, a, b, t)
// followed by apply_beamsplitter(s, b, a, t) is the identity.
inline GaussianState apply_beamsplitter(const GaussianState& s, int mode_a, int mode_b, double t) {
  detail::check_mode(s, mode_a, "apply_beamsplitter");
  detail::check_mode(s, mode_b, "apply_beamsplitter");
  if (mode_a == mode_b) throw std::invalid_argument("apply_beamsplitter: modes must differ");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("apply_beamsplitter: t must be in [0, 1]");
  const double r = std::sqrt(1.0 - t * t);
  const auto n = s.mean().size();
  Eigen::MatrixXd o = Eigen::MatrixXd::Identity(n, n);
  for (int q = 0; q < 2; ++q) {  // x then p row of each mode
    const int ia = 2 * mode_a + q, ib = 2 * mode_b + q;
    o(ia, ia) = t;
    o(ia, ib) = r;
    o(ib, ia) = -r;
    o(ib, ib) = t;
  }
  return GaussianState(o * s.mean(), o * s.cov() * o.transpose());
}

// Pure loss of transmissivity etas[m] on mode m: with Y = diag(sqrt(eta) per
// quadrature), cov -> Y cov Y + (I - Y^2)/2 and mean -> Y mean.
inline GaussianState apply_loss(const GaussianState& s, const std::vector<double>& etas) {
  if (static_cast<int>(etas.size()) != s.modes()) {
    throw std::invalid_argument("apply_loss: need one transmissivity per mode");
  }
  const auto n = s.mean().size();
  Eigen::VectorXd y(n);
  for (int m = 0; m < s.modes(); ++m) {
    const double eta = etas[m];
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("apply_loss: eta must be in [0, 1]");
    y(2 * m) = y(2 * m + 1) = std::sqrt(eta);
  }
  Eigen::MatrixXd cov = y.asDiagonal() * s.cov() * y.asDiagonal();
  cov.diagonal().array() += (1.0 - y.array().square()) * kVacuumVariance;
  return GaussianState(y.asDiagonal() * s.mean(), std::move(cov));
}

// Phase-space displacement of one mode; shifts the mean only.
inline GaussianState apply_displacement(const GaussianState& s, int mode, double dx, double dp) {
  detail::check_mode(s, mode, "apply_displacement");
  if (!std::isfinite(dx) || !std::isfinite(dp)) {
    throw std::invalid_argument("apply_displacement: non-finite shift");
  }
  Eigen::VectorXd mean = s.mean();
  mean(2 * mode) += dx;
  mean(2 * mode + 1) += dp;
  return GaussianState(std::move(mean), s.cov());
}

// Outcome distribution of an ideal homodyne measurement of one quadrature.
inline Marginal1D homodyne_marginal(const GaussianState& s, int mode, Quadrature q) {
  detail::check_mode(s, mode, "homodyne_marginal");
  const int i = 2 * mode + (q == Quadrature::P ? 1 : 0);
  return Marginal1D{s.mean()(i), std::max(s.cov()(i, i), kVarianceFloor)};
}

// Minimum eigenvalue of cov + (i/2) Omega; >= 0 (up to tolerance) iff the
// state satisfies the uncertainty relation.
inline double physicality_margin(const GaussianState& s) {
  const auto n = s.mean().size();
  Eigen::MatrixXcd h = s.cov().cast<std::complex<double>>();
  h += std::complex<double>(0.0, 0.5) * symplectic_form(s.modes()).cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("physicality_margin: eigensolver failed");
  (void)n;
  return es.eigenvalues().minCoeff();
}

inline bool is_physical(const GaussianState& s, double tol = 1e-9) {
  return physicality_margin(s) >= -tol;
}

// Draw `count` homodyne outcomes. Consumes exactly one normal deviate per
// outcome, in order.
inline std::vector<double> sample_homodyne(const Marginal1D& m, Rng& rng, long long count) {
  if (count < 0) throw std::invalid_argument("sample_homodyne: negative count");
  const double sd = std::sqrt(std::max(m.variance, kVarianceFloor));
  std::vector<double> out(static_cast<std::size_t>(count));
  for (auto& v : out) v = m.mean + sd * rng.normal();
  return out;
}

}  // namespace dispest
