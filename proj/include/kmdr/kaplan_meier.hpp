#pragma once

#include <Eigen/Dense>
#include <span>

#include "kmdr/sample_data.hpp"

namespace kmdr {

// Jumps W_in of the product-limit estimator at the order statistics.
//   W_in = delta_[i:n]/(n-i+1) * prod_{j<i} (1 - delta_[j:n]/(n-j+1))
// Sum is <= 1; the deficit is the mass lost to a censored largest observation.
class KaplanMeierWeights {
 public:
  KaplanMeierWeights(OrderedSample ordered, Eigen::VectorXd w);

  const OrderedSample& ordered() const { return ordered_; }
  const Eigen::VectorXd& w() const { return w_; }
  Index n() const { return w_.size(); }
  // Sum of the weights, equal to the KM CDF at the largest observation.
  double total() const { return cumulative_(n() - 1); }
  // Running sums; cumulative()(i) = sum of w over the first i+1 order statistics.
  const Eigen::VectorXd& cumulative() const { return cumulative_; }

 private:
  OrderedSample ordered_;
  Eigen::VectorXd w_;
  Eigen::VectorXd cumulative_;
};

KaplanMeierWeights km_weights(OrderedSample s);

// F_KM(t) = sum_i W_in 1{Y_{i:n} <= t}. Right-continuous; t = NaN throws.
double km_cdf(const KaplanMeierWeights& km, double t);

// Stute's multivariate estimator sum_i W_in 1{Y_{i:n} <= t, X_[i:n] <= x}
// with coordinatewise comparison.
double km_multivariate(const KaplanMeierWeights& km, double t,
                       std::span<const double> x);

}  // namespace kmdr
