#include "kmdr/kaplan_meier.hpp"

#include <algorithm>
#include <cmath>

#include "kmdr/error.hpp"

namespace kmdr {

KaplanMeierWeights::KaplanMeierWeights(OrderedSample ordered, Eigen::VectorXd w)
    : ordered_(std::move(ordered)), w_(std::move(w)) {
  if (w_.size() != ordered_.n() || w_.size() == 0)
    throw ValidationError("weight vector does not match the ordered sample");
  cumulative_.resize(w_.size());
  double acc = 0.0;
  for (Index i = 0; i < w_.size(); ++i) {
    acc += w_(i);
    cumulative_(i) = acc;
  }
}

KaplanMeierWeights km_weights(OrderedSample s) {
  const Index n = s.n();
  Eigen::VectorXd w(n);
  if (s.delta.sum() == n) {
    // exact 1/n, so the uncensored fit coincides with plain distribution regression
    w.setConstant(1.0 / static_cast<double>(n));
    return KaplanMeierWeights(std::move(s), std::move(w));
  }
  double survivor = 1.0;  // prod_{j<i} (1 - delta_j/(n-j+1))
  for (Index i = 0; i < n; ++i) {
    const double at_risk = static_cast<double>(n - i);
    if (s.delta(i) == 1) {
      w(i) = survivor / at_risk;
      survivor *= 1.0 - 1.0 / at_risk;
    } else {
      w(i) = 0.0;
    }
  }
  return KaplanMeierWeights(std::move(s), std::move(w));
}

double km_cdf(const KaplanMeierWeights& km, double t) {
  if (std::isnan(t)) throw ValidationError("threshold is NaN");
  const auto& y = km.ordered().y;
  const auto it = std::upper_bound(y.data(), y.data() + y.size(), t);
  const auto count = it - y.data();
  return count == 0 ? 0.0 : km.cumulative()(count - 1);
}

double km_multivariate(const KaplanMeierWeights& km, double t,
                       std::span<const double> x) {
  if (std::isnan(t)) throw ValidationError("threshold is NaN");
  const auto& os = km.ordered();
  if (static_cast<Index>(x.size()) != os.k())
    throw ValidationError("covariate dimension mismatch");
  double acc = 0.0;
  for (Index i = 0; i < os.n() && os.y(i) <= t; ++i) {
    bool below = true;
    for (Index j = 0; j < os.k() && below; ++j)
      below = os.x(i, j) <= x[static_cast<std::size_t>(j)];
    if (below) acc += km.w()(i);
  }
  return acc;
}

}  // namespace kmdr
