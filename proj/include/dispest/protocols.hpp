#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dispest/fisher.hpp"
#include "dispest/gaussian.hpp"

// Displacement-estimation protocols. The unknown is a phase-space displacement
// (mu, nu) applied to one mode; probes are measured by homodyne detection.
//
//  - Entangled protocol: two opposite squeezed vacua interfered on a balanced
//    splitter, the displacement acts on arm 1, a second balanced splitter
//    closes the interferometer, and the outputs are read as (X of port 1,
//    P of port 2). Every probe is sensitive to both parameters.
//  - Separable protocol: each probe is a single squeezed vacuum; a classical
//    coin with weights (w1, w2) decides whether the X-squeezed probe measures
//    mu or the P-squeezed probe measures nu. Outcomes carry the branch label.
//  - Fock protocol: number-state probes, used through its known amplitude
//    Fisher information 4n + 2 as a benchmark.

namespace dispest {

struct DisplacementParams {
  double mu = 0.0;
  double nu = 0.0;
};

// Polar chart (|alpha|, phi) with mu = |alpha| cos phi, nu = |alpha| sin phi.
struct PolarParams {
  double amplitude = 0.0;
  double phase = 0.0;
};

struct EntangledProtocol {
  double r = 0.0;  // |r| <= 25
};

struct SeparableProtocol {
  double r = 0.0;   // |r| <= 25
  double w1 = 0.5;  // in (0, 1)
  double w2() const { return 1.0 - w1; }
};

struct FockProtocol {
  int n = 0;  // photon number >= 0
};

enum class SplitMode { Random, Fixed };

namespace detail {
inline void check_squeezing(double r, const char* who) {
  if (!std::isfinite(r) || std::abs(r) > kMaxSqueezing) {
    throw std::invalid_argument(std::string(who) + ": |r| must be finite and <= 25");
  }
}
inline void check_weight(double w1, const char* who) {
  if (!(w1 > 0.0 && w1 < 1.0)) {
    throw std::invalid_argument(std::string(who) + ": w1 must lie strictly inside (0, 1)");
  }
}
inline double normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}
}  // namespace detail

// Mean photon number of a squeezed vacuum, sinh^2(r).
inline double mean_photons_for_squeezing(double r) {
  detail::check_squeezing(r, "mean_photons_for_squeezing");
  const double s = std::sinh(r);
  return s * s;
}

// Squeezing parameter whose squeezed vacuum carries mean photon number n.
inline double squeezing_for_mean_photons(double n_mean) {
  if (!(n_mean >= 0.0)) throw std::invalid_argument("squeezing_for_mean_photons: need n >= 0");
  return std::asinh(std::sqrt(n_mean));
}

// ---------------------------------------------------------------------------
// Measurement pipelines (gaussian-core states, no closed forms)

// State of the entangled protocol just before readout: squeezed (x) tensor
// squeezed (p), balanced splitter, displacement on arm 1, closing balanced
// splitter (the inverse convention, i.e. swapped mode arguments).
inline GaussianState entangled_pipeline(double r, double mu, double nu) {
  detail::check_squeezing(r, "entangled_pipeline");
  const double bal = 1.0 / std::numbers::sqrt2;
  GaussianState s = tensor(squeezed_vacuum(r), squeezed_vacuum(-r));
  s = apply_beamsplitter(s, 0, 1, bal);
  s = apply_displacement(s, 0, mu, nu);
  s = apply_beamsplitter(s, 1, 0, bal);
  return s;
}

// Readout distributions of the entangled protocol: (X of port 1, P of port 2).
// The two outcomes are uncorrelated, so the joint density is the product.
inline std::pair<Marginal1D, Marginal1D> entangled_marginals(double r, double mu, double nu) {
  const GaussianState s = entangled_pipeline(r, mu, nu);
  return {homodyne_marginal(s, 0, Quadrature::X), homodyne_marginal(s, 1, Quadrature::P)};
}

// Readout distribution of one separable branch: label 1 is the X-squeezed
// probe measuring mu, label 2 the P-squeezed probe measuring nu.
inline Marginal1D separable_branch_marginal(double r, int label, double mu, double nu) {
  detail::check_squeezing(r, "separable_branch_marginal");
  if (label != 1 && label != 2) {
    throw std::invalid_argument("separable_branch_marginal: label must be 1 or 2");
  }
  if (label == 1) {
    GaussianState s = apply_displacement(squeezed_vacuum(r), 0, mu, nu);
    return homodyne_marginal(s, 0, Quadrature::X);
  }
  GaussianState s = apply_displacement(squeezed_vacuum(-r), 0, mu, nu);
  return homodyne_marginal(s, 0, Quadrature::P);
}

// ---------------------------------------------------------------------------
// Closed-form Fisher information

// Entangled protocol, Cartesian chart: diag(e^{2r}, e^{2r}).
inline FisherMatrix cfi_entangled(double r) {
  detail::check_squeezing(r, "cfi_entangled");
  const double c = std::exp(2.0 * r);
  return FisherMatrix(Chart::Cartesian, Eigen::Vector2d(c, c).asDiagonal());
}

// Separable protocol, Cartesian chart: diag(2 w1 e^{2r}, 2 w2 e^{2r}).
inline FisherMatrix cfi_separable(double r, double w1) {
  detail::check_squeezing(r, "cfi_separable");
  detail::check_weight(w1, "cfi_separable");
  const double c = 2.0 * std::exp(2.0 * r);
  return FisherMatrix(Chart::Cartesian, Eigen::Vector2d(w1 * c, (1.0 - w1) * c).asDiagonal());
}

// Amplitude Fisher information of an n-photon probe.
inline double cfi_fock_amplitude(int n) {
  if (n < 0) throw std::invalid_argument("cfi_fock_amplitude: photon number must be >= 0");
  return 4.0 * static_cast<double>(n) + 2.0;
}

// ---------------------------------------------------------------------------
// Oracle-facing pdfs (evaluated through the state pipeline, not closed forms)

namespace detail {
// The quadrature oracle probes the pdf at a handful of theta values over many
// outcome points; memoize the pipeline marginals per theta. Single-threaded.
struct EntangledPdfCache {
  double r;
  std::vector<std::pair<Eigen::Vector2d, std::pair<Marginal1D, Marginal1D>>> entries;
  const std::pair<Marginal1D, Marginal1D>& at(const Eigen::Vector2d& theta) {
    for (const auto& e : entries) {
      if (e.first(0) == theta(0) && e.first(1) == theta(1)) return e.second;
    }
    entries.emplace_back(theta, entangled_marginals(r, theta(0), theta(1)));
    if (entries.size() > 64) entries.erase(entries.begin());
    return entries.back().second;
  }
};

// Same idea for a single branch marginal built from an arbitrary theta map.
struct MarginalCache {
  std::function<Marginal1D(const Eigen::Vector2d&)> build;
  std::vector<std::pair<Eigen::Vector2d, Marginal1D>> entries;
  const Marginal1D& at(const Eigen::Vector2d& theta) {
    for (const auto& e : entries) {
      if (e.first(0) == theta(0) && e.first(1) == theta(1)) return e.second;
    }
    entries.emplace_back(theta, build(theta));
    if (entries.size() > 64) entries.erase(entries.begin());
    return entries.back().second;
  }
};
}  // namespace detail

// Joint readout density of the entangled protocol as a function of
// theta = (mu, nu), for cfi_numeric. Outcome components: (x, p).
inline PdfFn entangled_joint_pdf(double r) {
  detail::check_squeezing(r, "entangled_joint_pdf");
  auto cache = std::make_shared<detail::EntangledPdfCache>();
  cache->r = r;
  return [cache](const Eigen::Vector2d& o, const Eigen::Vector2d& theta) {
    const auto& [mx, mp] = cache->at(theta);
    return detail::normal_pdf(o(0), mx.mean, mx.variance) *
           detail::normal_pdf(o(1), mp.mean, mp.variance);
  };
}

// Weighted density of one separable branch, w * f_label(value; theta), for
// cfi_numeric with mass = w. Outcome component: the branch's quadrature value.
inline PdfFn separable_branch_pdf(double r, int label, double weight) {
  detail::check_squeezing(r, "separable_branch_pdf");
  if (label != 1 && label != 2) throw std::invalid_argument("separable_branch_pdf: label must be 1 or 2");
  auto cache = std::make_shared<detail::MarginalCache>();
  cache->build = [r, label](const Eigen::Vector2d& theta) {
    return separable_branch_marginal(r, label, theta(0), theta(1));
  };
  return [cache, weight](const Eigen::Vector2d& o, const Eigen::Vector2d& theta) {
    const Marginal1D& m = cache->at(theta);
    return weight * detail::normal_pdf(o(0), m.mean, m.variance);
  };
}

// ---------------------------------------------------------------------------
// Joint-density product form

// Largest deviation, over a grid, between the entangled joint density
// f(x, p) and the product form 2 g_X(scale * x) g_P(scale * p), where g_X, g_P
// are the unit-weight branch densities taken at twice the single-probe
// homodyne variance. At scale = sqrt(2) the rescaling maps g exactly onto the
// joint marginals (mean mu/sqrt2, variance halved), so the deviation is zero
// up to rounding; any other scale breaks it by O(1).
inline double separable_pdf_identity_check(double r, double mu, double nu, int grid_points = 201,
                                           double scale = std::numbers::sqrt2) {
  detail::check_squeezing(r, "separable_pdf_identity_check");
  if (grid_points < 2) throw std::invalid_argument("separable_pdf_identity_check: need >= 2 grid points");
  const auto [mx, mp] = entangled_marginals(r, mu, nu);
  const double var2 = 2.0 * separable_branch_marginal(r, 1, mu, nu).variance;
  const double sx = std::sqrt(mx.variance), sp = std::sqrt(mp.variance);
  double worst = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double x = mx.mean + (-8.0 + 16.0 * i / (grid_points - 1)) * sx;
    for (int j = 0; j < grid_points; ++j) {
      const double p = mp.mean + (-8.0 + 16.0 * j / (grid_points - 1)) * sp;
      const double joint = detail::normal_pdf(x, mx.mean, mx.variance) *
                           detail::normal_pdf(p, mp.mean, mp.variance);
      const double product = 2.0 * detail::normal_pdf(scale * x, mu, var2) *
                             detail::normal_pdf(scale * p, nu, var2);
      worst = std::max(worst, std::abs(joint - product));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Parameter charts

// Push a Cartesian Fisher matrix to the polar chart (|alpha|, phi):
// C_polar = J^T C J with J the Jacobian of (mu, nu) over (|alpha|, phi).
inline FisherMatrix polar_transform(const FisherMatrix& cartesian, double phi, double amplitude) {
  if (cartesian.chart() != Chart::Cartesian) {
    throw std::invalid_argument("polar_transform: input must be in the Cartesian chart");
  }
  if (amplitude == 0.0) {
    throw std::invalid_argument("polar_transform: chart is singular at zero amplitude");
  }
  Eigen::Matrix2d jac;
  jac << std::cos(phi), -amplitude * std::sin(phi), std::sin(phi), amplitude * std::cos(phi);
  const Eigen::Matrix2d c = jac.transpose() * cartesian.matrix() * jac;
  return FisherMatrix(Chart::Polar, (c + c.transpose()) * 0.5);
}

// Inverse chart change, polar back to Cartesian.
inline FisherMatrix cartesian_transform(const FisherMatrix& polar, double phi, double amplitude) {
  if (polar.chart() != Chart::Polar) {
    throw std::invalid_argument("cartesian_transform: input must be in the polar chart");
  }
  if (amplitude == 0.0) {
    throw std::invalid_argument("cartesian_transform: chart is singular at zero amplitude");
  }
  Eigen::Matrix2d jac;
  jac << std::cos(phi), -amplitude * std::sin(phi), std::sin(phi), amplitude * std::cos(phi);
  const Eigen::Matrix2d jinv = jac.inverse();
  const Eigen::Matrix2d c = jinv.transpose() * polar.matrix() * jinv;
  return FisherMatrix(Chart::Cartesian, (c + c.transpose()) * 0.5);
}

// Separable-protocol CFI in the polar chart at balanced weights, computed by
// direct quadrature of the two branch densities with respect to
// (|alpha|, phi). The result is phase-independent and equals
// e^{2r} diag(1, amplitude^2); computing it numerically keeps this entry
// independent of any closed form. For amplitude <= 0 the phase direction is
// undefined and those entries are returned as NaN.
inline FisherMatrix cfi_separable_polar(double r, double amplitude,
                                        const GridSpec& spec = GridSpec{}) {
  detail::check_squeezing(r, "cfi_separable_polar");
  const double a = std::max(amplitude, 0.0);
  const double phi = 0.7;  // generic evaluation point; result is phi-independent
  const Eigen::Vector2d theta(a, phi);
  const double var = separable_branch_marginal(r, 1, 0.0, 0.0).variance;
  const double sigma = std::sqrt(var);

  // Branch densities as functions of the polar parameters.
  auto branch = [r](int label, double weight) -> PdfFn {
    auto cache = std::make_shared<detail::MarginalCache>();
    cache->build = [r, label](const Eigen::Vector2d& th) {
      const double mu = th(0) * std::cos(th(1));
      const double nu = th(0) * std::sin(th(1));
      return separable_branch_marginal(r, label, mu, nu);
    };
    return [cache, weight](const Eigen::Vector2d& o, const Eigen::Vector2d& th) {
      const Marginal1D& m = cache->at(th);
      return weight * detail::normal_pdf(o(0), m.mean, m.variance);
    };
  };
  GridSpec half = spec;
  half.mass = 0.5;
  const FisherMatrix cx = cfi_numeric(branch(1, 0.5), theta, {{a * std::cos(phi), sigma}}, half, Chart::Polar);
  const FisherMatrix cp = cfi_numeric(branch(2, 0.5), theta, {{a * std::sin(phi), sigma}}, half, Chart::Polar);
  Eigen::Matrix2d total = cx.matrix() + cp.matrix();
  if (amplitude <= 0.0) {
    total(0, 1) = total(1, 0) = total(1, 1) = std::numeric_limits<double>::quiet_NaN();
    return FisherMatrix::unchecked(Chart::Polar, total);
  }
  return FisherMatrix(Chart::Polar, total);
}

// Alternative closed form for the polar CFI written in terms of the probe's
// mean photon number: 2(n + 1 + sqrt(n^2 + n)) diag(1, amplitude^2). Its
// prefactor equals e^{2r} + 1, exactly one unit above the quadrature result's
// e^{2r}; it is exposed only for side-by-side comparison output.
inline FisherMatrix cfi_separable_polar_photon_form(double n_mean, double amplitude) {
  if (!(n_mean >= 0.0)) throw std::invalid_argument("cfi_separable_polar_photon_form: need n >= 0");
  const double c = 2.0 * (n_mean + 1.0 + std::sqrt(n_mean * (n_mean + 1.0)));
  Eigen::Matrix2d m = Eigen::Vector2d(c, c * amplitude * amplitude).asDiagonal();
  return FisherMatrix(Chart::Polar, m);
}

// ---------------------------------------------------------------------------
// Outcome samplers

// Entangled protocol outcomes (x of port 1, p of port 2). Draw order per
// probe: x first, then p.
inline std::vector<std::pair<double, double>> sample_entangled(double r, double mu, double nu,
                                                               Rng& rng, long long count) {
  if (count < 0) throw std::invalid_argument("sample_entangled: negative count");
  const auto [mx, mp] = entangled_marginals(r, mu, nu);
  const double sx = std::sqrt(std::max(mx.variance, kVarianceFloor));
  const double sp = std::sqrt(std::max(mp.variance, kVarianceFloor));
  std::vector<std::pair<double, double>> out(static_cast<std::size_t>(count));
  for (auto& [x, p] : out) {
    x = mx.mean + sx * rng.normal();
    p = mp.mean + sp * rng.normal();
  }
  return out;
}

// Separable protocol outcomes as (label, value). Random split draws one
// uniform per probe (label 1 iff u < w1) before the value; fixed split takes
// round(w1 * count) label-1 probes first, then label 2, with no label draws.
inline std::vector<std::pair<int, double>> sample_separable(double r, double w1, double mu, double nu,
                                                            SplitMode split, Rng& rng, long long count) {
  detail::check_weight(w1, "sample_separable");
  if (count < 0) throw std::invalid_argument("sample_separable: negative count");
  const Marginal1D m1 = separable_branch_marginal(r, 1, mu, nu);
  const Marginal1D m2 = separable_branch_marginal(r, 2, mu, nu);
  const double s1 = std::sqrt(std::max(m1.variance, kVarianceFloor));
  const double s2 = std::sqrt(std::max(m2.variance, kVarianceFloor));
  std::vector<std::pair<int, double>> out(static_cast<std::size_t>(count));
  const long long n1 = (split == SplitMode::Fixed) ? std::llround(w1 * static_cast<double>(count)) : 0;
  for (long long i = 0; i < count; ++i) {
    const bool first = (split == SplitMode::Random) ? (rng.uniform() < w1) : (i < n1);
    out[static_cast<std::size_t>(i)] =
        first ? std::pair<int, double>{1, m1.mean + s1 * rng.normal()}
              : std::pair<int, double>{2, m2.mean + s2 * rng.normal()};
  }
  return out;
}

}  // namespace dispest
