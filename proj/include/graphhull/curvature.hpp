#ifndef GRAPHHULL_CURVATURE_HPP
#define GRAPHHULL_CURVATURE_HPP

#include "graphhull/common.hpp"

namespace graphhull {

/// Lipschitz constant of the gradient of the negative Bernoulli-logistic loss
/// with respect to the barycentric weights, for a boxed archetype matrix with
/// ||A||_2 <= kappa_star:
///   (1/4) (s kappa*^2 deg_max + (s^2 / 2) kappa*^4 deg_max).
inline double lipschitz_bound(double s, double kappa_star, int deg_max) {
  if (!(s > 0) || !(kappa_star > 0) || deg_max < 0)
    throw Error("lipschitz_bound: need s > 0, kappa_star > 0, deg_max >= 0");
  const double k2 = kappa_star * kappa_star;
  const double d = static_cast<double>(deg_max);
  return 0.25 * (s * k2 * d + 0.5 * s * s * k2 * k2 * d);
}

}  // namespace graphhull

#endif  // GRAPHHULL_CURVATURE_HPP
