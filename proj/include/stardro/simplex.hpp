// Copyright 2026 The stardro Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "stardro/common.hpp"

// Tsallis mirror geometry on the probability simplex.
//
// The adversarial weights live on the simplex Delta_G. For order alpha > 1
// the mirror map sends q to the scaled dual u = q^(alpha-1) (componentwise);
// an ascent step is additive in u; and the way back is the thresholded
// power-law normalization q_g = [u_g - lambda]_+^(1/(alpha-1)) with lambda
// chosen by bisection so the result sums to one. Coordinates whose dual value
// falls below lambda land exactly at zero, which is what makes the update
// sparse. The dense exponentiated-gradient update (softmax geometry) is kept
// alongside as the baseline.

namespace stardro {

using Vector = Eigen::VectorXd;
using DualVector = Eigen::VectorXd;

// Tsallis order alpha. Strictly greater than one; alpha -> 1+ approaches the
// softmax geometry, alpha = 2 is sparsemax.
class TsallisOrder {
 public:
  explicit TsallisOrder(double alpha) : alpha_(alpha) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) {
      throw std::invalid_argument("TsallisOrder: alpha must be finite and > 1");
    }
  }
  double alpha() const { return alpha_; }
  // 1/(alpha-1), the exponent of the primal mapback.
  double exponent() const { return 1.0 / (alpha_ - 1.0); }

 private:
  double alpha_;
};

// A point on the probability simplex: nonnegative entries summing to one
// within tolerance. Validated at construction.
class SimplexVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit SimplexVector(Vector weights, double tol = kSumTolerance)
      : weights_(std::move(weights)) {
    if (weights_.size() == 0) {
      throw std::invalid_argument("SimplexVector: dimension zero");
    }
    double sum = 0.0;
    for (Eigen::Index g = 0; g < weights_.size(); ++g) {
      const double w = weights_[g];
      if (!std::isfinite(w) || w < 0.0) {
        throw std::invalid_argument("SimplexVector: entries must be finite and >= 0");
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw std::invalid_argument("SimplexVector: entries must sum to 1");
    }
  }

  static SimplexVector uniform(Eigen::Index groups) {
    if (groups <= 0) throw std::invalid_argument("SimplexVector: dimension zero");
    return SimplexVector(Vector::Constant(groups, 1.0 / static_cast<double>(groups)));
  }

  const Vector& weights() const { return weights_; }
  Eigen::Index size() const { return weights_.size(); }
  double operator[](Eigen::Index g) const { return weights_[g]; }

 private:
  Vector weights_;
};

// Result of an entmax projection: the simplex point, the threshold, and how
// the bisection went. `converged == false` means the iteration cap was hit
// and the near-feasible point was renormalized; `residual` is |mass - 1| at
// the accepted threshold.
struct Projection {
  SimplexVector q;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = true;
  double residual = 0.0;
};

namespace detail {

// Mass function m(lambda) = sum_g [u_g - lambda]_+^p and its evaluation in
// log space. For alpha close to one the exponent p is large and direct pow()
// can overflow; log-sum-exp sidesteps that.
template <typename Scalar>
Scalar entmax_mass(const Eigen::Vector<Scalar, Eigen::Dynamic>& u, Scalar lambda,
                   Scalar p) {
  Scalar mass = 0;
  for (Eigen::Index g = 0; g < u.size(); ++g) {
    const Scalar x = u[g] - lambda;
    if (x > Scalar(0)) mass += std::pow(x, p);
  }
  return mass;
}

// log of the mass, or -inf when the support is empty.
template <typename Scalar>
Scalar entmax_log_mass(const Eigen::Vector<Scalar, Eigen::Dynamic>& u,
                       Scalar lambda, Scalar p) {
  Scalar max_l = -std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index g = 0; g < u.size(); ++g) {
    const Scalar x = u[g] - lambda;
    if (x > Scalar(0)) max_l = std::max(max_l, p * std::log(x));
  }
  if (!std::isfinite(max_l)) return -std::numeric_limits<Scalar>::infinity();
  Scalar acc = 0;
  for (Eigen::Index g = 0; g < u.size(); ++g) {
    const Scalar x = u[g] - lambda;
    if (x > Scalar(0)) acc += std::exp(p * std::log(x) - max_l);
  }
  return max_l + std::log(acc);
}

}  // namespace detail

// Primal -> scaled dual map: componentwise q^(alpha-1).
inline DualVector to_dual(const SimplexVector& q, TsallisOrder alpha) {
  const double e = alpha.alpha() - 1.0;
  DualVector u(q.size());
  for (Eigen::Index g = 0; g < q.size(); ++g) u[g] = std::pow(q[g], e);
  return u;
}

// Thresholded power-law projection of a dual vector onto the simplex.
// Returns the projected point and the threshold lambda. The bracket
// [min(u)-1, max(u)] always contains the root: at the lower end the largest
// coordinate alone contributes mass >= 1, at the upper end the mass is zero,
// and the mass is continuous and strictly decreasing while positive.
inline Projection entmax_project(const DualVector& u, TsallisOrder alpha,
                                 double tol = 1e-10) {
  if (u.size() == 0) throw std::invalid_argument("entmax_project: dimension zero");
  if (!(tol > 0.0)) throw std::invalid_argument("entmax_project: tol must be > 0");
  for (Eigen::Index g = 0; g < u.size(); ++g) {
    if (!std::isfinite(u[g])) {
      throw std::invalid_argument("entmax_project: non-finite input");
    }
  }
  const Eigen::Index G = u.size();
  if (G == 1) {
    return Projection{SimplexVector(Vector::Ones(1)), u[0] - 1.0, 0, true, 0.0};
  }

  const double p = alpha.exponent();
  const bool log_space = (alpha.alpha() - 1.0) < 0.05;
  // In log space the residual is |log mass|; for |mass-1| <= tol the two
  // agree to first order.
  const auto residual_at = [&](double lambda) {
    if (log_space) {
      const double lm = detail::entmax_log_mass<double>(u, lambda, p);
      return std::isfinite(lm) ? std::abs(std::expm1(lm)) : 1.0;
    }
    return std::abs(detail::entmax_mass<double>(u, lambda, p) - 1.0);
  };
  const auto mass_at_least_one = [&](double lambda) {
    if (log_space) return detail::entmax_log_mass<double>(u, lambda, p) >= 0.0;
    return detail::entmax_mass<double>(u, lambda, p) >= 1.0;
  };

  double lo = u.minCoeff() - 1.0;
  double hi = u.maxCoeff();
  if (!mass_at_least_one(lo)) {
    throw NumericalError("entmax_project: bracket lower bound has mass < 1",
                         residual_at(lo));
  }

  constexpr int kMaxIterations = 200;
  double lambda = lo;
  bool converged = false;
  int it = 0;
  for (; it < kMaxIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual_at(mid) <= tol) {
      lambda = mid;
      converged = true;
      break;
    }
    if (mass_at_least_one(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (!converged) lambda = lo;  // mass >= 1 side: support is non-empty

  Vector q(G);
  if (log_space) {
    const double lm = detail::entmax_log_mass<double>(u, lambda, p);
    for (Eigen::Index g = 0; g < G; ++g) {
      const double x = u[g] - lambda;
      q[g] = x > 0.0 ? std::exp(p * std::log(x) - lm) : 0.0;
    }
  } else {
    for (Eigen::Index g = 0; g < G; ++g) {
      const double x = u[g] - lambda;
      q[g] = x > 0.0 ? std::pow(x, p) : 0.0;
    }
    q /= q.sum();
  }
  return Projection{SimplexVector(std::move(q)), lambda, it, converged,
                    residual_at(lambda)};
}

// One Tsallis mirror-ascent step: additive update in the scaled dual,
// followed by the entmax projection. eta = 0 reproduces q up to tolerance.
inline Projection mirror_ascent_step(const SimplexVector& q,
                                     const Eigen::Ref<const Vector>& ascent,
                                     TsallisOrder alpha, double eta,
                                     double tol = 1e-10) {
  if (ascent.size() != q.size()) {
    throw std::invalid_argument("mirror_ascent_step: ascent length mismatch");
  }
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("mirror_ascent_step: eta must be finite and >= 0");
  }
  DualVector u = to_dual(q, alpha) + (alpha.alpha() - 1.0) * eta * ascent;
  return entmax_project(u, alpha, tol);
}

// Dense exponentiated-gradient ascent step (softmax geometry), the standard
// group-DRO update: q'_g proportional to q_g * exp(eta * loss_g). The max is
// subtracted before exponentiation to guard overflow; zero mass stays zero.
inline SimplexVector exponentiated_gradient_step(
    const SimplexVector& q, const Eigen::Ref<const Vector>& losses, double eta) {
  if (losses.size() != q.size()) {
    throw std::invalid_argument("exponentiated_gradient_step: length mismatch");
  }
  for (Eigen::Index g = 0; g < losses.size(); ++g) {
    if (!std::isfinite(losses[g])) {
      throw std::invalid_argument("exponentiated_gradient_step: non-finite loss");
    }
  }
  const double shift = (eta * losses).maxCoeff();
  Vector w(q.size());
  for (Eigen::Index g = 0; g < q.size(); ++g) {
    w[g] = q[g] * std::exp(eta * losses[g] - shift);
  }
  const double sum = w.sum();
  if (!(sum > 0.0)) {
    throw NumericalError("exponentiated_gradient_step: zero total mass", sum);
  }
  return SimplexVector(w / sum);
}

}  // namespace stardro
