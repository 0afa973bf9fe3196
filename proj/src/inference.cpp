#include "kmdr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kmdr/error.hpp"
#include "kmdr/kernels.hpp"

namespace kmdr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd augment(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd xa(x.rows(), x.cols() + 1);
  xa.col(0).setOnes();
  xa.rightCols(x.cols()) = x;
  return xa;
}

// [begin, end) ranges of equal durations in a sorted vector.
std::vector<std::pair<Index, Index>> tie_groups(const Eigen::VectorXd& y) {
  std::vector<std::pair<Index, Index>> groups;
  Index start = 0;
  for (Index i = 1; i <= y.size(); ++i) {
    if (i == y.size() || y(i) != y(start)) {
      groups.emplace_back(start, i);
      start = i;
    }
  }
  return groups;
}

}  // namespace

AdmeEstimate estimate_adme(const DrCoefficientPath& path, const Eigen::MatrixXd& x) {
  const Index k = path.k();
  if (x.cols() != k) throw ValidationError("covariate dimension mismatch");
  const Eigen::MatrixXd xa = augment(x);
  AdmeEstimate out;
  out.t = path.grid.thresholds();
  out.value = Eigen::MatrixXd::Constant(static_cast<Index>(path.fits.size()), k, kNaN);
  out.valid.assign(path.fits.size(), 0);
  for (std::size_t j = 0; j < path.fits.size(); ++j) {
    const ThresholdFit& f = path.fits[j];
    if (!f.diag.converged()) continue;
    double mean_pdf = 0.0;
    for (Index i = 0; i < xa.rows(); ++i)
      mean_pdf += eval_link(path.link, xa.row(i).dot(f.theta)).pdf;
    mean_pdf /= static_cast<double>(xa.rows());
    out.value.row(static_cast<Index>(j)) = mean_pdf * f.theta.tail(k).transpose();
    out.valid[j] = 1;
  }
  return out;
}

AdmeEstimate estimate_adme(const DrCoefficientPath& path, const CensoredSample& sample) {
  return estimate_adme(path, sample.x());
}

Eigen::VectorXd gamma0(const OrderedSample& s) {
  const Index n = s.n();
  const double nd = static_cast<double>(n);
  Eigen::VectorXd g(n);
  double exponent = 0.0;  // sum over strictly smaller durations
  for (const auto& [b, e] : tie_groups(s.y)) {
    const double value = std::exp(exponent);
    for (Index i = b; i < e; ++i) g(i) = value;
    const double surv = static_cast<double>(n - e) / nd;
    if (surv > 0.0) {
      Index censored = 0;
      for (Index i = b; i < e; ++i) censored += 1 - s.delta(i);
      exponent += static_cast<double>(censored) / nd / surv;
    }
  }
  return g;
}

Eigen::MatrixXd influence_theta(const KaplanMeierWeights& km, const DrCoefficientPath& path,
                                std::size_t idx) {
  const OrderedSample& s = km.ordered();
  const ThresholdFit& f = path.fits.at(idx);
  const Index n = s.n();
  const Index p = s.k() + 1;
  const double nd = static_cast<double>(n);
  const double t = f.t;

  const Eigen::VectorXd g0 = gamma0(s);
  // a_j = phi_j gamma0(Y_j) for events; zero for censored rows
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd xaug(p);
  xaug(0) = 1.0;
  for (Index i = 0; i < n; ++i) {
    if (s.delta(i) == 0) continue;
    xaug.tail(p - 1) = s.x.row(i).transpose();
    const LinkValue v = eval_link(path.link, xaug.dot(f.theta));
    a.row(i) = (score_factor(v, s.y(i) <= t ? 1 : 0) * g0(i)) * xaug.transpose();
  }

  const auto groups = tie_groups(s.y);
  const auto m = groups.size();
  // suffix[g] = (1/n) sum of a_j over durations strictly greater than group g
  std::vector<Eigen::RowVectorXd> suffix(m, Eigen::RowVectorXd::Zero(p));
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(p);
  for (std::size_t g = m; g-- > 0;) {
    suffix[g] = acc / nd;
    for (Index i = groups[g].first; i < groups[g].second; ++i) acc += a.row(i);
  }

  Eigen::MatrixXd zeta(n, p);
  Eigen::RowVectorXd gamma2 = Eigen::RowVectorXd::Zero(p);  // over strictly smaller durations
  for (std::size_t g = 0; g < m; ++g) {
    const auto [b, e] = groups[g];
    const double surv = static_cast<double>(n - e) / nd;
    Eigen::RowVectorXd gamma1 = Eigen::RowVectorXd::Zero(p);
    if (surv > 0.0) gamma1 = suffix[g] / surv;
    Index censored = 0;
    for (Index i = b; i < e; ++i) {
      if (s.delta(i) == 1)
        zeta.row(i) = a.row(i) - gamma2;
      else
        zeta.row(i) = gamma1 - gamma2;
      censored += 1 - s.delta(i);
    }
    if (surv > 0.0 && censored > 0)
      gamma2 += (static_cast<double>(censored) / nd / (surv * surv)) * suffix[g];
  }
  return zeta;
}

Eigen::MatrixXd influence_adme(const KaplanMeierWeights& km, const DrCoefficientPath& path,
                               std::size_t idx, const Eigen::MatrixXd& zeta_theta,
                               SigmaChoice sigma) {
  const OrderedSample& s = km.ordered();
  const ThresholdFit& f = path.fits.at(idx);
  const Index n = s.n();
  const Index k = s.k();
  const Index p = k + 1;
  if (zeta_theta.rows() != n || zeta_theta.cols() != p)
    throw ValidationError("influence matrix has the wrong shape");

  const Eigen::MatrixXd& sig = sigma == SigmaChoice::hessian ? f.hessian : f.fisher;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sig);
  if (!lu.isInvertible()) {
    std::ostringstream msg;
    msg << "singular variance matrix at threshold t = " << f.t;
    throw NumericalError(msg.str());
  }

  const Eigen::VectorXd beta = f.theta.tail(k);
  double mean_pdf = 0.0;
  Eigen::VectorXd mean_curv = Eigen::VectorXd::Zero(p);  // (1/n) sum psi''(u_j) xaug_j
  Eigen::VectorXd pdf(n);
  Eigen::VectorXd xaug(p);
  xaug(0) = 1.0;
  for (Index i = 0; i < n; ++i) {
    xaug.tail(k) = s.x.row(i).transpose();
    const LinkValue v = eval_link(path.link, xaug.dot(f.theta));
    pdf(i) = v.pdf;
    mean_pdf += v.pdf;
    mean_curv += v.dpdf * xaug;
  }
  mean_pdf /= static_cast<double>(n);
  mean_curv /= static_cast<double>(n);

  const Eigen::MatrixXd solved = lu.solve(zeta_theta.transpose());  // p x n
  Eigen::MatrixXd out(n, k);
  for (Index i = 0; i < n; ++i) {
    const auto si = solved.col(i);
    out.row(i) = ((pdf(i) - mean_pdf) * beta + mean_pdf * si.tail(k) +
                  beta * mean_curv.dot(si))
                     .transpose();
  }
  return out;
}

InfluenceSet compute_influence(const KaplanMeierWeights& km, const DrCoefficientPath& path,
                               SigmaChoice sigma) {
  InfluenceSet out;
  out.t = path.grid.thresholds();
  out.gamma0 = gamma0(km.ordered());
  out.valid.assign(path.fits.size(), 0);
  out.zeta_theta.resize(path.fits.size());
  out.zeta_adme.resize(path.fits.size());
  const Index n = km.n();
  const Index k = km.ordered().k();
  for (std::size_t j = 0; j < path.fits.size(); ++j) {
    if (!path.fits[j].diag.converged()) {
      out.zeta_theta[j] = Eigen::MatrixXd::Zero(n, k + 1);
      out.zeta_adme[j] = Eigen::MatrixXd::Zero(n, k);
      continue;
    }
    out.zeta_theta[j] = influence_theta(km, path, j);
    out.zeta_adme[j] = influence_adme(km, path, j, out.zeta_theta[j], sigma);
    out.valid[j] = 1;
    out.max_abs_zeta = std::max(out.max_abs_zeta, out.zeta_theta[j].cwiseAbs().maxCoeff());
  }
  const double gmax = out.gamma0.maxCoeff();
  if (gmax > 1e3) {
    std::ostringstream msg;
    msg << "heavy right-tail censoring: max gamma0 = " << gmax
        << "; influence values may have unstable variance";
    out.warnings.push_back(msg.str());
  }
  return out;
}

double type1_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw ValidationError("quantile of an empty set");
  const auto size = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(level * size - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   values.end());
  return values[rank - 1];
}

AdmeBand bootstrap_bands(const AdmeEstimate& adme, const std::vector<Eigen::MatrixXd>& zeta_adme,
                         const BootstrapOptions& opts) {
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");
  if (opts.n_boot < 100) throw ValidationError("at least 100 bootstrap draws are required");
  const auto thresholds = static_cast<Index>(adme.t.size());
  if (static_cast<Index>(zeta_adme.size()) != thresholds ||
      adme.value.rows() != thresholds)
    throw ValidationError("ADME estimates and influence values disagree on the grid");
  const Index k = adme.value.cols();
  if (thresholds == 0 || k == 0) throw ValidationError("nothing to band: no thresholds or covariates");
  const Index n = zeta_adme.front().rows();

  AdmeBand band;
  band.t = adme.t;
  band.adme = adme.value;
  band.valid = adme.valid;
  band.alpha = opts.alpha;
  band.n_boot = opts.n_boot;
  band.seed = opts.seed;

  RowMatrix z(n, thresholds * k);
  std::vector<std::uint8_t> include(static_cast<std::size_t>(thresholds * k), 0);
  for (Index j = 0; j < thresholds; ++j) {
    const auto& zj = zeta_adme[static_cast<std::size_t>(j)];
    if (zj.rows() != n || zj.cols() != k)
      throw ValidationError("influence matrices have inconsistent shapes");
    z.middleCols(j * k, k) = zj;
    const bool ok = adme.valid[static_cast<std::size_t>(j)] != 0;
    if (!ok) {
      std::ostringstream msg;
      msg << "threshold t = " << adme.t[static_cast<std::size_t>(j)]
          << " excluded from the bands (fit did not converge)";
      band.warnings.push_back(msg.str());
    }
    for (Index c = 0; c < k; ++c) include[static_cast<std::size_t>(j * k + c)] = ok;
  }

  const auto draws = kernels::multiplier_draws(z, include, opts.n_boot, opts.seed,
                                               kernels::Exec::omp);
  const double level = 1.0 - opts.alpha;
  band.c_hat = type1_quantile(draws.sup, level);
  const double root_n = std::sqrt(static_cast<double>(n));

  band.pw_lo = band.pw_hi = band.sim_lo = band.sim_hi =
      Eigen::MatrixXd::Constant(thresholds, k, kNaN);
  std::vector<double> column(static_cast<std::size_t>(opts.n_boot));
  for (Index j = 0; j < thresholds; ++j) {
    if (!adme.valid[static_cast<std::size_t>(j)]) continue;
    for (Index c = 0; c < k; ++c) {
      for (Index b = 0; b < opts.n_boot; ++b)
        column[static_cast<std::size_t>(b)] = draws.abs_r(b, j * k + c);
      const double q = type1_quantile(column, level);
      const double est = adme.value(j, c);
      band.pw_lo(j, c) = est - q / root_n;
      band.pw_hi(j, c) = est + q / root_n;
      band.sim_lo(j, c) = est - band.c_hat / root_n;
      band.sim_hi(j, c) = est + band.c_hat / root_n;
    }
  }
  return band;
}

}  // namespace kmdr
