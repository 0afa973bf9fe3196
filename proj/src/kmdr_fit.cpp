#include "kmdr/kmdr_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kmdr/error.hpp"
#include "kmdr/kernels.hpp"

namespace kmdr {

ThresholdGrid::ThresholdGrid(std::vector<double> thresholds) : t_(std::move(thresholds)) {
  for (std::size_t i = 0; i < t_.size(); ++i) {
    if (!std::isfinite(t_[i])) throw ValidationError("grid point is not finite");
    if (i > 0 && !(t_[i] > t_[i - 1]))
      throw ValidationError("grid must be strictly increasing");
  }
}

std::optional<std::size_t> ThresholdGrid::index_of(double t) const {
  const auto it = std::lower_bound(t_.begin(), t_.end(), t);
  if (it != t_.end() && *it == t) return static_cast<std::size_t>(it - t_.begin());
  return std::nullopt;
}

namespace {

// Left-continuous generalised inverse of the renormalised KM CDF.
double km_quantile(const KaplanMeierWeights& km, double q) {
  const double total = km.total();
  const auto& cum = km.cumulative();
  for (Index i = 0; i < cum.size(); ++i)
    if (cum(i) / total >= q) return km.ordered().y(i);
  return km.ordered().y(cum.size() - 1);
}

}  // namespace

ThresholdGrid build_grid(const KaplanMeierWeights& km, const GridSpec& spec) {
  std::vector<double> candidates;
  if (const auto* q = std::get_if<QuantileGridSpec>(&spec)) {
    if (!(q->lo > 0.0 && q->lo < q->hi && q->hi < 1.0) || q->points < 1)
      throw ValidationError("quantile grid needs 0 < lo < hi < 1 and points >= 1");
    const double t_lo = km_quantile(km, q->lo);
    const double t_hi = km_quantile(km, q->hi);
    if (q->points == 1) {
      candidates.push_back(t_lo);
    } else {
      if (!(t_hi > t_lo)) throw NumericalError("degenerate grid: quantiles coincide");
      for (int j = 0; j < q->points; ++j)
        candidates.push_back(t_lo + (t_hi - t_lo) * j / (q->points - 1));
      candidates.back() = t_hi;
    }
  } else {
    candidates = std::get<ExplicitGridSpec>(spec).values;
    ThresholdGrid check(candidates);  // validates ordering
  }
  const double total = km.total();
  std::vector<double> kept;
  for (double t : candidates) {
    const double f = km_cdf(km, t) / total;
    if (f >= kGridTrim && f <= 1.0 - kGridTrim) kept.push_back(t);
  }
  if (kept.empty()) throw NumericalError("degenerate grid: no threshold survives trimming");
  return ThresholdGrid(std::move(kept));
}

WeightedDesign make_design(const KaplanMeierWeights& km) {
  const auto& os = km.ordered();
  WeightedDesign d;
  d.xaug.resize(os.n(), os.k() + 1);
  d.xaug.col(0).setOnes();
  if (os.k() > 0) d.xaug.rightCols(os.k()) = os.x;
  d.y = os.y;
  d.w = km.w();
  return d;
}

WeightedDesign uniform_design(const KaplanMeierWeights& km) {
  WeightedDesign d = make_design(km);
  d.w.setConstant(1.0 / static_cast<double>(d.n()));
  return d;
}

double objective(const WeightedDesign& design, LinkKind link, double t,
                 const Eigen::VectorXd& theta) {
  double acc = 0.0;
  for (Index i = 0; i < design.n(); ++i) {
    const double w = design.w(i);
    if (w == 0.0) continue;
    const LinkValue v = eval_link(link, design.xaug.row(i).dot(theta));
    acc += w * (design.y(i) <= t ? std::log(v.cdf) : std::log(v.survival));
  }
  return acc;
}

double objective(const KaplanMeierWeights& km, LinkKind link, double t,
                 const Eigen::VectorXd& theta) {
  return objective(make_design(km), link, t, theta);
}

ObjectiveTerms objective_terms(const WeightedDesign& design, LinkKind link, double t,
                               const Eigen::VectorXd& theta) {
  const Index p = design.p();
  ObjectiveTerms out;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.hessian = Eigen::MatrixXd::Zero(p, p);
  out.information = Eigen::MatrixXd::Zero(p, p);
  for (Index i = 0; i < design.n(); ++i) {
    const double w = design.w(i);
    if (w == 0.0) continue;
    const auto x = design.xaug.row(i);
    const LinkValue v = eval_link(link, x.dot(theta));
    if (v.clamped) ++out.clamp_count;
    const int d = design.y(i) <= t ? 1 : 0;
    out.value += w * (d == 1 ? std::log(v.cdf) : std::log(v.survival));
    const double g = score_factor(v, d);
    // d/du of the score factor: (psi'/psi) g - g^2
    const double curv = (v.pdf > 0.0 ? v.dpdf / v.pdf * g : 0.0) - g * g;
    const double info = v.pdf * v.pdf / (v.cdf * v.survival);
    out.gradient.noalias() += (w * g) * x.transpose();
    out.hessian.noalias() += (w * curv) * x.transpose() * x;
    out.information.noalias() += (w * info) * x.transpose() * x;
  }
  return out;
}

namespace {

Eigen::MatrixXd full_sample_fisher(const WeightedDesign& design, LinkKind link,
                                   const Eigen::VectorXd& theta) {
  const Index p = design.p();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(p, p);
  for (Index i = 0; i < design.n(); ++i) {
    const auto x = design.xaug.row(i);
    const LinkValue v = eval_link(link, x.dot(theta));
    f.noalias() += (v.pdf * v.pdf / (v.cdf * v.survival)) * x.transpose() * x;
  }
  return f / static_cast<double>(design.n());
}

// Numerically singular curvature means the maximiser is not identified.
bool well_conditioned(const Eigen::MatrixXd& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return false;
  const auto ev = es.eigenvalues();
  return ev.minCoeff() > 1e-12 * ev.cwiseAbs().maxCoeff();
}

}  // namespace

ThresholdFit fit_threshold(const WeightedDesign& design, LinkKind link, double t,
                           const std::optional<Eigen::VectorXd>& init,
                           const FitOptions& opts) {
  if (std::isnan(t)) throw ValidationError("threshold is NaN");
  const Index p = design.p();
  ThresholdFit fit;
  fit.t = t;

  double total = 0.0, events = 0.0;
  for (Index i = 0; i < design.n(); ++i) {
    total += design.w(i);
    if (design.y(i) <= t) events += design.w(i);
  }
  if (!(events > 0.0) || !(events < total)) {
    // weighted event frequency is 0 or 1: no finite maximiser
    fit.theta = Eigen::VectorXd::Zero(p);
    fit.hessian = Eigen::MatrixXd::Zero(p, p);
    fit.fisher = Eigen::MatrixXd::Zero(p, p);
    fit.diag.status = FitStatus::degenerate;
    return fit;
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  if (init) {
    if (init->size() != p) throw ValidationError("initial value has the wrong length");
    theta = *init;
  } else if (link == LinkKind::exponential) {
    theta(0) = -std::log1p(-events / total);
  }

  ObjectiveTerms terms = objective_terms(design, link, t, theta);
  FitDiagnostics& diag = fit.diag;
  diag.status = FitStatus::not_converged;
  for (int iter = 0;; ++iter) {
    diag.iterations = iter;
    diag.grad_norm = terms.gradient.lpNorm<Eigen::Infinity>();
    if (diag.grad_norm <= opts.tol_grad) {
      diag.status = FitStatus::converged;
      break;
    }
    if (iter == opts.max_iter) break;

    Eigen::VectorXd step;
    Eigen::LLT<Eigen::MatrixXd> newton(-terms.hessian);
    if (newton.info() == Eigen::Success) {
      step = newton.solve(terms.gradient);
    } else {
      Eigen::LLT<Eigen::MatrixXd> scoring(terms.information);
      if (scoring.info() != Eigen::Success) break;
      step = scoring.solve(terms.gradient);
      diag.fisher_fallback = true;
    }
    if (!step.allFinite()) break;

    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(terms.value);
    double scale = 1.0;
    int halvings = 0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double value = 0.0;
    for (; halvings <= opts.max_halvings; ++halvings, scale *= 0.5) {
      candidate = theta + scale * step;
      value = objective(design, link, t, candidate);
      if (std::isfinite(value) && value >= terms.value - slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    const double rel = std::abs(value - terms.value) /
                       std::max(std::abs(terms.value), std::numeric_limits<double>::min());
    theta = candidate;
    terms = objective_terms(design, link, t, theta);
    if (rel <= opts.tol_rel_objective && halvings == 0) {
      diag.iterations = iter + 1;
      diag.grad_norm = terms.gradient.lpNorm<Eigen::Infinity>();
      diag.status = FitStatus::converged;
      break;
    }
  }

  fit.theta = theta;
  fit.objective = terms.value;
  fit.hessian = -terms.hessian;
  fit.fisher = full_sample_fisher(design, link, theta);
  diag.clamp_count = terms.clamp_count;
  if (diag.converged() && !well_conditioned(fit.hessian)) diag.status = FitStatus::not_converged;
  return fit;
}

ThresholdFit fit_threshold(const KaplanMeierWeights& km, LinkKind link, double t,
                           const std::optional<Eigen::VectorXd>& init,
                           const FitOptions& opts) {
  return fit_threshold(make_design(km), link, t, init, opts);
}

std::size_t DrCoefficientPath::converged_count() const {
  return static_cast<std::size_t>(std::count_if(
      fits.begin(), fits.end(), [](const ThresholdFit& f) { return f.diag.converged(); }));
}

DrCoefficientPath fit_path(const WeightedDesign& design, LinkKind link,
                           const ThresholdGrid& grid, PathMode mode,
                           const FitOptions& opts) {
  DrCoefficientPath path;
  path.link = link;
  path.grid = grid;
  if (mode == PathMode::independent) {
    path.fits = kernels::fit_thresholds(design, link, grid.thresholds(), opts,
                                        kernels::Exec::omp);
  } else {
    std::optional<Eigen::VectorXd> start;
    for (double t : grid.thresholds()) {
      path.fits.push_back(fit_threshold(design, link, t, start, opts));
      if (path.fits.back().diag.converged()) start = path.fits.back().theta;
    }
  }
  if (path.converged_count() == 0)
    throw NumericalError("no threshold of the grid converged");
  return path;
}

DrCoefficientPath fit_path(const KaplanMeierWeights& km, LinkKind link,
                           const ThresholdGrid& grid, PathMode mode,
                           const FitOptions& opts) {
  return fit_path(make_design(km), link, grid, mode, opts);
}

double predict_cdf(const DrCoefficientPath& path, std::span<const double> x, double t) {
  const auto idx = path.grid.index_of(t);
  if (!idx) throw ValidationError("threshold is not a grid point");
  const ThresholdFit& f = path.fits[*idx];
  if (static_cast<Index>(x.size()) != f.theta.size() - 1)
    throw ValidationError("covariate dimension mismatch");
  if (f.diag.status == FitStatus::degenerate)
    throw NumericalError("no estimate at a degenerate threshold");
  double u = f.theta(0);
  for (std::size_t j = 0; j < x.size(); ++j) u += f.theta(static_cast<Index>(j) + 1) * x[j];
  return eval_link(path.link, u).cdf;
}

}  // namespace kmdr
