#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

// Classical Fisher information for two-parameter estimation from measurement
// outcome distributions, plus the Cramer-Rao bound. Two routes are provided:
// a closed form for Gaussian outcome models and a direct quadrature of the
// defining integral, which serves as the independent oracle for everything
// with a nontrivial derivation.

namespace dispest {

enum class Chart { Cartesian, Polar };

// 2x2 classical Fisher information matrix tagged with the parameter chart.
// Construction validates symmetry (rejected beyond 1e-10, not repaired) and
// positive semidefiniteness (eigenvalues >= -1e-9).
class FisherMatrix {
 public:
  FisherMatrix(Chart chart, const Eigen::Matrix2d& m) : chart_(chart), m_(m) {
    if (!m_.allFinite()) throw std::invalid_argument("FisherMatrix: non-finite entries");
    const double asym = std::abs(m_(0, 1) - m_(1, 0));
    if (asym > 1e-10) {
      throw std::invalid_argument("FisherMatrix: asymmetric by " + std::to_string(asym));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es((m_ + m_.transpose()) * 0.5);
    if (es.eigenvalues().minCoeff() < -1e-9) {
      throw std::invalid_argument("FisherMatrix: not positive semidefinite");
    }
  }

  // Escape hatch for matrices carrying deliberately undefined (NaN) entries,
  // e.g. the phase entry of a polar chart at zero amplitude.
  static FisherMatrix unchecked(Chart chart, const Eigen::Matrix2d& m) {
    FisherMatrix f(chart, Eigen::Matrix2d::Zero());
    f.m_ = m;
    return f;
  }

  Chart chart() const { return chart_; }
  const Eigen::Matrix2d& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Chart chart_;
  Eigen::Matrix2d m_;
};

// Gaussian outcome model: outcomes ~ N(mean_map(theta), cov) with
// theta-independent covariance.
struct GaussianOutcomeModel {
  std::function<Eigen::VectorXd(const Eigen::Vector2d&)> mean_map;
  Eigen::MatrixXd cov;
};

// Closed-form CFI for a Gaussian outcome model: J^T cov^{-1} J with
// J = d mean / d theta taken by central differences (relative step 1e-6).
inline FisherMatrix cfi_gaussian(const GaussianOutcomeModel& model, const Eigen::Vector2d& theta,
                                 Chart chart = Chart::Cartesian) {
  if (!model.mean_map) throw std::invalid_argument("cfi_gaussian: missing mean map");
  Eigen::LLT<Eigen::MatrixXd> llt(model.cov);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("cfi_gaussian: outcome covariance is not positive definite");
  }
  const auto dim = model.cov.rows();
  Eigen::MatrixXd jac(dim, 2);
  for (int j = 0; j < 2; ++j) {
    const double h = 1e-6 * std::max(std::abs(theta(j)), 1.0);
    Eigen::Vector2d tp = theta, tm = theta;
    tp(j) += h;
    tm(j) -= h;
    jac.col(j) = (model.mean_map(tp) - model.mean_map(tm)) / (2.0 * h);
  }
  if (!jac.allFinite()) throw std::runtime_error("cfi_gaussian: non-finite mean-map derivative");
  const Eigen::Matrix2d c = jac.transpose() * llt.solve(jac);
  return FisherMatrix(chart, (c + c.transpose()) * 0.5);
}

// Outcome-space axis for the quadrature oracle: the grid spans
// center +- span_sigmas * sigma.
struct AxisSpec {
  double center = 0.0;
  double sigma = 1.0;
};

// Grid contract: at least 2001 points per axis over at least +-8 sigma. The
// estimate is accepted once doubling the resolution moves it by less than
// refine_tol (relative, Frobenius).
struct GridSpec {
  double span_sigmas = 8.0;
  int points = 2001;
  int max_points = 32001;
  double refine_tol = 1e-8;
  double theta_step_rel = 1e-5;  // central-difference step, relative
  double mass = 1.0;             // expected integral of the pdf over the grid
};

// pdf(outcome, theta): outcome uses the first axes.size() components.
using PdfFn = std::function<double(const Eigen::Vector2d&, const Eigen::Vector2d&)>;

namespace detail {

struct QuadratureResult {
  Eigen::Matrix2d cfi;
  double mass;
};

inline QuadratureResult cfi_quadrature_pass(const PdfFn& pdf, const Eigen::Vector2d& theta,
                                            const std::vector<AxisSpec>& axes, const GridSpec& spec,
                                            int points) {
  const int dim = static_cast<int>(axes.size());
  Eigen::Vector2d h;
  std::array<Eigen::Vector2d, 2> theta_plus, theta_minus;
  for (int j = 0; j < 2; ++j) {
    h(j) = spec.theta_step_rel * std::max(std::abs(theta(j)), 1.0);
    theta_plus[j] = theta;
    theta_plus[j](j) += h(j);
    theta_minus[j] = theta;
    theta_minus[j](j) -= h(j);
  }

  std::vector<double> lo(dim), step(dim);
  for (int a = 0; a < dim; ++a) {
    if (!(axes[a].sigma > 0.0)) throw std::invalid_argument("cfi_numeric: axis sigma must be > 0");
    lo[a] = axes[a].center - spec.span_sigmas * axes[a].sigma;
    step[a] = 2.0 * spec.span_sigmas * axes[a].sigma / (points - 1);
  }

  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  double mass = 0.0;
  double cell = step[0] * (dim == 2 ? step[1] : 1.0);
  const long long rows = (dim == 2) ? points : 1;
  Eigen::Vector2d o(0.0, 0.0);
  for (long long iy = 0; iy < rows; ++iy) {
    const double wy = (dim == 2 && (iy == 0 || iy == points - 1)) ? 0.5 : 1.0;
    if (dim == 2) o(1) = lo[1] + static_cast<double>(iy) * step[1];
    for (long long ix = 0; ix < points; ++ix) {
      const double wx = (ix == 0 || ix == points - 1) ? 0.5 : 1.0;
      o(0) = lo[0] + static_cast<double>(ix) * step[0];
      const double f0 = pdf(o, theta);
      if (!(f0 >= -1e-12)) throw std::invalid_argument("cfi_numeric: pdf is negative on the grid");
      const double w = wx * wy;
      mass += w * f0;
      if (f0 < 1e-300) continue;  // tail cell: no information contribution
      const double d0 = (pdf(o, theta_plus[0]) - pdf(o, theta_minus[0])) / (2.0 * h(0));
      const double d1 = (pdf(o, theta_plus[1]) - pdf(o, theta_minus[1])) / (2.0 * h(1));
      acc(0, 0) += w * d0 * d0 / f0;
      acc(0, 1) += w * d0 * d1 / f0;
      acc(1, 1) += w * d1 * d1 / f0;
    }
  }
  acc(1, 0) = acc(0, 1);
  return QuadratureResult{acc * cell, mass * cell};
}

}  // namespace detail

// Direct quadrature of C(j,l) = int (d_j f)(d_l f)/f over a 1D or 2D outcome
// grid (trapezoid rule, central differences in theta). This is the oracle the
// closed forms are checked against.
inline FisherMatrix cfi_numeric(const PdfFn& pdf, const Eigen::Vector2d& theta,
                                const std::vector<AxisSpec>& axes, const GridSpec& spec = GridSpec{},
                                Chart chart = Chart::Cartesian) {
  if (!pdf) throw std::invalid_argument("cfi_numeric: missing pdf");
  const int dim = static_cast<int>(axes.size());
  if (dim < 1 || dim > 2) throw std::invalid_argument("cfi_numeric: outcome dimension must be 1 or 2");
  if (spec.points < 2001) throw std::invalid_argument("cfi_numeric: need at least 2001 grid points per axis");
  if (spec.span_sigmas < 8.0) throw std::invalid_argument("cfi_numeric: grid must span at least 8 sigma");

  // Convergence check against the half-resolution estimate; double until the
  // estimate is stable.
  int points = spec.points;
  auto coarse = detail::cfi_quadrature_pass(pdf, theta, axes, spec, points / 2 + 1);
  auto fine = detail::cfi_quadrature_pass(pdf, theta, axes, spec, points);
  while ((fine.cfi - coarse.cfi).norm() > spec.refine_tol * (1.0 + fine.cfi.norm()) &&
         2 * points - 1 <= spec.max_points) {
    points = 2 * points - 1;
    coarse = fine;
    fine = detail::cfi_quadrature_pass(pdf, theta, axes, spec, points);
  }
  if (std::abs(fine.mass - spec.mass) > 1e-6 * std::max(1.0, std::abs(spec.mass))) {
    throw std::invalid_argument("cfi_numeric: pdf mass " + std::to_string(fine.mass) +
                                " does not match expected " + std::to_string(spec.mass));
  }
  return FisherMatrix(chart, fine.cfi);
}

// Total CFI of a mixture of labeled branches: sum of w_n * C_n. Weights must
// be nonnegative and sum to 1 within 1e-12; charts must agree.
inline FisherMatrix cfi_mixture(const std::vector<std::pair<double, FisherMatrix>>& parts) {
  if (parts.empty()) throw std::invalid_argument("cfi_mixture: no branches");
  double wsum = 0.0;
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  for (const auto& [w, c] : parts) {
    if (w < 0.0) throw std::invalid_argument("cfi_mixture: negative weight");
    if (c.chart() != parts.front().second.chart()) {
      throw std::invalid_argument("cfi_mixture: mixed parameter charts");
    }
    wsum += w;
    acc += w * c.matrix();
  }
  if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("cfi_mixture: weights must sum to 1");
  return FisherMatrix(parts.front().second.chart(), acc);
}

struct CrbReport {
  Chart chart;
  Eigen::Matrix2d bound;  // covariance lower bound for the given probe count
  long long probes;
};

// Cramer-Rao bound C^{-1}/N. A Fisher matrix with an eigenvalue <= 1e-12 is
// singular for this purpose; the error names the unidentifiable direction.
inline CrbReport crb(const FisherMatrix& fisher, long long probes) {
  if (probes < 1) throw std::invalid_argument("crb: probe count must be >= 1");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(fisher.matrix());
  if (es.eigenvalues().minCoeff() <= 1e-12) {
    const Eigen::Vector2d v = es.eigenvectors().col(0);
    std::ostringstream msg;
    msg << "crb: singular Fisher matrix; unidentifiable direction (" << v(0) << ", " << v(1) << ")";
    throw std::runtime_error(msg.str());
  }
  const Eigen::Matrix2d inv = fisher.matrix().inverse();
  return CrbReport{fisher.chart(), ((inv + inv.transpose()) * 0.5) / static_cast<double>(probes), probes};
}

}  // namespace dispest
