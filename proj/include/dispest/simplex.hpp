#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <stdexcept>
#include <vector>

// Deterministic Nelder-Mead minimizer for smooth low-dimensional objectives.
// Standard coefficients (reflection 1, expansion 2, contraction 1/2,
// shrink 1/2); stops when the simplex diameter falls below diameter_tol.

namespace dispest {

struct SimplexOptions {
  double diameter_tol = 1e-6;
  int max_iterations = 2000;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x0, double initial_step,
                                 const SimplexOptions& opt = SimplexOptions{}) {
  if (!f) throw std::invalid_argument("nelder_mead: missing objective");
  const int dim = static_cast<int>(x0.size());
  if (dim < 1) throw std::invalid_argument("nelder_mead: empty start point");

  std::vector<Eigen::VectorXd> pts(dim + 1, x0);
  for (int i = 0; i < dim; ++i) pts[i + 1](i) += initial_step;
  std::vector<double> vals(dim + 1);
  for (int i = 0; i <= dim; ++i) vals[i] = f(pts[i]);

  auto order = [&] {
    std::vector<int> idx(dim + 1);
    for (int i = 0; i <= dim; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    std::vector<Eigen::VectorXd> p2(dim + 1);
    std::vector<double> v2(dim + 1);
    for (int i = 0; i <= dim; ++i) {
      p2[i] = pts[idx[i]];
      v2[i] = vals[idx[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  auto diameter = [&] {
    double d = 0.0;
    for (int i = 0; i <= dim; ++i)
      for (int j = i + 1; j <= dim; ++j) d = std::max(d, (pts[i] - pts[j]).norm());
    return d;
  };

  SimplexResult res;
  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    order();
    if (diameter() < opt.diameter_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < dim; ++i) centroid += pts[i];
    centroid /= dim;

    const Eigen::VectorXd reflected = centroid + (centroid - pts[dim]);
    const double fr = f(reflected);
    if (fr < vals[0]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[dim]);
      const double fe = f(expanded);
      if (fe < fr) {
        pts[dim] = expanded;
        vals[dim] = fe;
      } else {
        pts[dim] = reflected;
        vals[dim] = fr;
      }
      continue;
    }
    if (fr < vals[dim - 1]) {
      pts[dim] = reflected;
      vals[dim] = fr;
      continue;
    }
    const Eigen::VectorXd contracted = centroid + 0.5 * (pts[dim] - centroid);
    const double fc = f(contracted);
    if (fc < vals[dim]) {
      pts[dim] = contracted;
      vals[dim] = fc;
      continue;
    }
    for (int i = 1; i <= dim; ++i) {  // shrink toward the best vertex
      pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
      vals[i] = f(pts[i]);
    }
  }
  order();
  res.x = pts[0];
  res.value = vals[0];
  return res;
}

}  // namespace dispest
