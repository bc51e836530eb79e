#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace netform {

struct SimplexOptions {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double x_tol = 1e-6;   // simplex diameter
  double f_tol = 1e-10;  // spread of objective values
  int max_iter = 2000;
  double initial_step = 0.1;  // relative to max(1, |x_k|)
};

template <typename Scalar>
struct SimplexResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Scalar f = std::numeric_limits<Scalar>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Derivative-free minimization; f may be nonsmooth or piecewise constant.
// Non-finite objective values are treated as +infinity.
template <typename Scalar, typename Objective>
SimplexResult<Scalar> nelder_mead(Objective&& f, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x0,
                                  const SimplexOptions& opt = {}) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index d = x0.size();
  SimplexResult<Scalar> out;
  auto eval = [&](const Vec& x) {
    ++out.evaluations;
    Scalar v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<Scalar>::infinity();
  };

  std::vector<Vec> pts(d + 1, x0);
  std::vector<Scalar> fv(d + 1);
  for (Eigen::Index k = 0; k < d; ++k) pts[k + 1](k) += opt.initial_step * std::max<Scalar>(1, std::abs(x0(k)));
  for (Eigen::Index k = 0; k <= d; ++k) fv[k] = eval(pts[k]);

  std::vector<Eigen::Index> order(d + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    // stable so ties keep their earlier position; keeps runs reproducible
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    std::vector<Vec> p2;
    std::vector<Scalar> f2;
    for (auto k : order) {
      p2.push_back(pts[k]);
      f2.push_back(fv[k]);
    }
    pts.swap(p2);
    fv.swap(f2);
  };

  sort_simplex();
  while (out.iterations < opt.max_iter) {
    Scalar diameter = 0;
    for (Eigen::Index k = 1; k <= d; ++k) diameter = std::max(diameter, (pts[k] - pts[0]).template lpNorm<Eigen::Infinity>());
    const Scalar spread = fv[d] - fv[0];
    if (diameter < opt.x_tol && (spread < opt.f_tol || !std::isfinite(spread))) {
      out.converged = true;
      break;
    }
    ++out.iterations;

    Vec centroid = Vec::Zero(d);
    for (Eigen::Index k = 0; k < d; ++k) centroid += pts[k];
    centroid /= static_cast<Scalar>(d);

    Vec xr = centroid + opt.reflection * (centroid - pts[d]);
    Scalar fr = eval(xr);
    if (fr < fv[0]) {
      Vec xe = centroid + opt.expansion * (xr - centroid);
      Scalar fe = eval(xe);
      if (fe < fr) pts[d] = xe, fv[d] = fe;
      else pts[d] = xr, fv[d] = fr;
    } else if (fr < fv[d - 1]) {
      pts[d] = xr, fv[d] = fr;
    } else {
      bool outside = fr < fv[d];
      Vec xc = outside ? Vec(centroid + opt.contraction * (xr - centroid))
                       : Vec(centroid + opt.contraction * (pts[d] - centroid));
      Scalar fc = eval(xc);
      if (fc < (outside ? fr : fv[d])) {
        pts[d] = xc, fv[d] = fc;
      } else {
        for (Eigen::Index k = 1; k <= d; ++k) {
          pts[k] = pts[0] + opt.shrink * (pts[k] - pts[0]);
          fv[k] = eval(pts[k]);
        }
      }
    }
    sort_simplex();
  }
  out.x = pts[0];
  out.f = fv[0];
  return out;
}

}  // namespace netform
