#include "kmdr/cox_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kmdr/error.hpp"

namespace kmdr {

namespace {

// Ascending order statistics plus their tie groups; sweeping the groups
// backwards accumulates the risk sets {j : Y_j >= t}.
struct RiskSweep {
  OrderedSample os;
  std::vector<std::pair<Index, Index>> groups;  // tie groups in ascending order
};

RiskSweep make_sweep(const CensoredSample& s) {
  RiskSweep r{order_sample(s), {}};
  Index start = 0;
  for (Index i = 1; i <= r.os.n(); ++i) {
    if (i == r.os.n() || r.os.y(i) != r.os.y(start)) {
      r.groups.emplace_back(start, i);
      start = i;
    }
  }
  return r;
}

PartialLikelihood partial_likelihood_sorted(const RiskSweep& r, const Eigen::VectorXd& beta) {
  const auto& os = r.os;
  const Index k = os.k();
  PartialLikelihood out;
  out.score = Eigen::VectorXd::Zero(k);
  out.information = Eigen::MatrixXd::Zero(k, k);

  const Eigen::VectorXd eta = k > 0 ? Eigen::VectorXd(os.x * beta) : Eigen::VectorXd::Zero(os.n());
  const double shift = eta.maxCoeff();
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(k, k);
  for (auto g = r.groups.rbegin(); g != r.groups.rend(); ++g) {
    for (Index i = g->first; i < g->second; ++i) {
      const double ri = std::exp(eta(i) - shift);
      const auto xi = os.x.row(i);
      s0 += ri;
      s1.noalias() += ri * xi.transpose();
      s2.noalias() += ri * xi.transpose() * xi;
    }
    Index events = 0;
    for (Index i = g->first; i < g->second; ++i) {
      if (os.delta(i) == 0) continue;
      ++events;
      out.loglik += eta(i);
      out.score += os.x.row(i).transpose();
    }
    if (events == 0) continue;
    const double d = static_cast<double>(events);
    const Eigen::VectorXd mean = s1 / s0;
    out.loglik -= d * (std::log(s0) + shift);
    out.score -= d * mean;
    out.information += d * (s2 / s0 - mean * mean.transpose());
  }
  return out;
}

BaselineHazard breslow_sorted(const RiskSweep& r, const Eigen::VectorXd& beta) {
  const auto& os = r.os;
  const Eigen::VectorXd eta =
      os.k() > 0 ? Eigen::VectorXd(os.x * beta) : Eigen::VectorXd::Zero(os.n());
  BaselineHazard h;
  std::vector<double> risk(r.groups.size());
  double s0 = 0.0;
  for (std::size_t g = r.groups.size(); g-- > 0;) {
    for (Index i = r.groups[g].first; i < r.groups[g].second; ++i) s0 += std::exp(eta(i));
    risk[g] = s0;
  }
  double cum = 0.0;
  for (std::size_t g = 0; g < r.groups.size(); ++g) {
    Index events = 0;
    for (Index i = r.groups[g].first; i < r.groups[g].second; ++i) events += os.delta(i);
    if (events == 0) continue;
    const double jump = static_cast<double>(events) / risk[g];
    cum += jump;
    h.times.push_back(os.y(r.groups[g].first));
    h.jumps.push_back(jump);
    h.cumulative.push_back(cum);
  }
  return h;
}

}  // namespace

double BaselineHazard::operator()(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return cumulative[static_cast<std::size_t>(it - times.begin() - 1)];
}

PartialLikelihood partial_likelihood(const CensoredSample& s, const Eigen::VectorXd& beta) {
  if (beta.size() != s.k()) throw ValidationError("beta has the wrong length");
  return partial_likelihood_sorted(make_sweep(s), beta);
}

BaselineHazard breslow(const CensoredSample& s, const Eigen::VectorXd& beta) {
  if (beta.size() != s.k()) throw ValidationError("beta has the wrong length");
  return breslow_sorted(make_sweep(s), beta);
}

PhFit fit_ph(const CensoredSample& s, const PhOptions& opts) {
  const RiskSweep sweep = make_sweep(s);
  const Index k = s.k();
  PhFit fit;
  fit.beta = Eigen::VectorXd::Zero(k);

  PartialLikelihood pl = partial_likelihood_sorted(sweep, fit.beta);
  if (k > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(pl.information);
    if (lu.rank() < k) throw NumericalError("singular information: collinear covariates");
  }
  for (int iter = 0;; ++iter) {
    fit.iterations = iter;
    fit.grad_norm = k > 0 ? pl.score.lpNorm<Eigen::Infinity>() : 0.0;
    if (fit.grad_norm <= opts.tol_grad) {
      fit.converged = true;
      break;
    }
    if (iter == opts.max_iter) break;
    Eigen::LLT<Eigen::MatrixXd> llt(pl.information);
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd step = llt.solve(pl.score);
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(pl.loglik);
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, scale *= 0.5) {
      const Eigen::VectorXd cand = fit.beta + scale * step;
      PartialLikelihood next = partial_likelihood_sorted(sweep, cand);
      if (std::isfinite(next.loglik) && next.loglik >= pl.loglik - slack) {
        fit.beta = cand;
        pl = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  // A monotone likelihood drives |beta| off to infinity while the score
  // flattens out; treat an exploding linear predictor as non-convergence.
  if (fit.converged && k > 0) {
    const Eigen::VectorXd range = s.x().colwise().maxCoeff() - s.x().colwise().minCoeff();
    if ((fit.beta.cwiseAbs().array() * range.array()).maxCoeff() > 50.0) fit.converged = false;
  }
  fit.baseline = breslow_sorted(sweep, fit.beta);
  return fit;
}

double ph_cdf(const PhFit& fit, std::span<const double> x, double t) {
  if (static_cast<Index>(x.size()) != fit.beta.size())
    throw ValidationError("covariate dimension mismatch");
  double eta = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) eta += fit.beta(static_cast<Index>(j)) * x[j];
  return -std::expm1(-fit.baseline(t) * std::exp(eta));
}

Eigen::VectorXd ph_adme(const PhFit& fit, const CensoredSample& s, double t) {
  if (s.k() != fit.beta.size()) throw ValidationError("covariate dimension mismatch");
  const double lambda = fit.baseline(t);
  double mean = 0.0;
  for (Index i = 0; i < s.n(); ++i) {
    const double h = lambda * std::exp(s.x().row(i).dot(fit.beta));
    mean += h * std::exp(-h);
  }
  mean /= static_cast<double>(s.n());
  return mean * fit.beta;
}

}  // namespace kmdr
