#include "kmdr/mc_harness.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "kmdr/cox_baseline.hpp"
#include "kmdr/error.hpp"
#include "kmdr/kaplan_meier.hpp"
#include "kmdr/kmdr_fit.hpp"
#include "kmdr/rng.hpp"

namespace kmdr::mc {

namespace {

constexpr std::uint64_t kCalibrationSeed = 0x6b6d6472'63616c31ULL;
constexpr Index kCalibrationDraws = 1'000'000;

void check_dgp(int dgp_id) {
  if (dgp_id < 1 || dgp_id > 3) throw ValidationError("dgp must be 1, 2 or 3");
}

double draw_duration(int dgp_id, double u, double x) {
  switch (dgp_id) {
    case 1: return std::sqrt(-std::log(u)) * std::exp(x);
    case 2: return std::exp(x / 4.0) * std::pow(1.0 / u - 1.0, 0.25);
    default: return std::pow(-std::log(u), 1.0 / (1.0 + x));
  }
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <class F>
double integrate_unit(F&& f) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-12,
                                                                       &err);
}

}  // namespace

void validate(const DgpSpec& spec) {
  check_dgp(spec.dgp_id);
  if (spec.n < 2) throw ValidationError("sample size must be at least 2");
  if (spec.censoring_pct != 0 && spec.censoring_pct != 10 && spec.censoring_pct != 30)
    throw ValidationError("censoring must be 0, 10 or 30 percent");
}

CensoringParams calibrate_censoring(int dgp_id, int target_pct) {
  check_dgp(dgp_id);
  if (target_pct == 0) return {0.0, std::numeric_limits<double>::infinity()};
  if (target_pct < 0 || target_pct >= 100)
    throw ValidationError("censoring target must be in [0, 100)");

  static std::mutex mu;
  static std::map<std::pair<int, int>, CensoringParams> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find({dgp_id, target_pct}); it != cache.end()) return it->second;

  // T > bE  <=>  T/E > b, so the censored fraction is the share of ratios above b
  CounterRng rng(kCalibrationSeed, static_cast<std::uint64_t>(dgp_id));
  std::vector<double> ratio(static_cast<std::size_t>(kCalibrationDraws));
  for (auto& r : ratio) {
    const double x = rng.uniform();
    const double u = rng.uniform();
    const double e = rng.exponential();
    r = draw_duration(dgp_id, u, x) / e;
  }
  std::sort(ratio.begin(), ratio.end());
  auto censored = [&](double b) {
    const auto above = ratio.end() - std::upper_bound(ratio.begin(), ratio.end(), b);
    return static_cast<double>(above) / static_cast<double>(ratio.size());
  };
  const double target = target_pct / 100.0;
  double lo = -20.0, hi = 20.0;  // log b
  if (!(censored(std::exp(lo)) >= target && censored(std::exp(hi)) <= target))
    throw NumericalError("censoring calibration: bracket does not contain the target");
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (censored(std::exp(mid)) > target)
      lo = mid;
    else
      hi = mid;
  }
  const CensoringParams c{0.0, std::exp(0.5 * (lo + hi))};
  cache.emplace(std::pair{dgp_id, target_pct}, c);
  return c;
}

double realized_censoring(int dgp_id, const CensoringParams& c, Index draws,
                          std::uint64_t seed, std::uint64_t stream) {
  check_dgp(dgp_id);
  CounterRng rng(seed, stream);
  Index censored = 0;
  for (Index i = 0; i < draws; ++i) {
    const double x = rng.uniform();
    const double u = rng.uniform();
    const double e = rng.exponential();
    if (draw_duration(dgp_id, u, x) > c.a + c.b * e) ++censored;
  }
  return static_cast<double>(censored) / static_cast<double>(draws);
}

CensoredSample generate(const DgpSpec& spec, std::uint64_t rep) {
  validate(spec);
  const CensoringParams c = calibrate_censoring(spec.dgp_id, spec.censoring_pct);
  const bool censor = std::isfinite(c.b);
  CounterRng rng(spec.seed, rep);
  Eigen::VectorXd y(spec.n);
  Eigen::VectorXi d(spec.n);
  Eigen::MatrixXd x(spec.n, 1);
  for (Index i = 0; i < spec.n; ++i) {
    const double xi = rng.uniform();
    const double u = rng.uniform();
    const double e = rng.exponential();
    const double t = draw_duration(spec.dgp_id, u, xi);
    const double cens = censor ? c.a + c.b * e : std::numeric_limits<double>::infinity();
    y(i) = std::min(t, cens);
    d(i) = t <= cens ? 1 : 0;
    x(i, 0) = xi;
  }
  if (d.sum() == 0) d(0) = 1;  // unreachable in practice; keeps the sample valid
  return CensoredSample(std::move(y), std::move(d), std::move(x), {"x"});
}

double true_cdf(int dgp_id, double t, double x) {
  check_dgp(dgp_id);
  if (t <= 0.0) return 0.0;
  switch (dgp_id) {
    case 1: return -std::expm1(-t * t * std::exp(-2.0 * x));
    case 2: {
      const double u = -x + 4.0 * std::log(t);
      return 1.0 / (1.0 + std::exp(-u));
    }
    default: return -std::expm1(-std::pow(t, 1.0 + x));
  }
}

double true_cdf_dx(int dgp_id, double t, double x) {
  check_dgp(dgp_id);
  if (t <= 0.0) return 0.0;
  switch (dgp_id) {
    case 1: {
      const double h = t * t * std::exp(-2.0 * x);
      return -2.0 * h * std::exp(-h);
    }
    case 2: {
      const double p = 1.0 / (1.0 + std::exp(x - 4.0 * std::log(t)));
      return -p * (1.0 - p);
    }
    default: {
      const double h = std::pow(t, 1.0 + x);
      return std::log(t) * h * std::exp(-h);
    }
  }
}

double true_adme(int dgp_id, double t) {
  check_dgp(dgp_id);
  return integrate_unit([&](double x) { return true_cdf_dx(dgp_id, t, x); });
}

double marginal_cdf(int dgp_id, double t) {
  check_dgp(dgp_id);
  return integrate_unit([&](double x) { return true_cdf(dgp_id, t, x); });
}

double marginal_quantile(int dgp_id, double q) {
  check_dgp(dgp_id);
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("quantile level must be in (0,1)");
  double hi = 1.0;
  while (marginal_cdf(dgp_id, hi) < q) hi *= 2.0;
  double lo = 1e-12;
  auto f = [&](double t) { return marginal_cdf(dgp_id, t) - q; };
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

std::vector<double> population_grid(int dgp_id, double lo, double hi, int points) {
  check_dgp(dgp_id);
  if (points < 2) throw ValidationError("population grid needs at least 2 points");
  auto build = [&] {
    const double a = marginal_quantile(dgp_id, lo);
    const double b = marginal_quantile(dgp_id, hi);
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int j = 0; j < points; ++j) g[static_cast<std::size_t>(j)] = a + (b - a) * j / (points - 1);
    g.back() = b;
    return g;
  };
  if (lo != 0.1 || hi != 0.9 || points != 100) return build();
  static std::mutex mu;
  static std::map<int, std::vector<double>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(dgp_id);
  if (it == cache.end()) it = cache.emplace(dgp_id, build()).first;
  return it->second;
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::dr_cll: return "dr_cll";
    case Estimator::dr_l: return "dr_l";
    case Estimator::ph: return "ph";
  }
  return "unknown";
}

Estimator parse_estimator(const std::string& name) {
  if (name == "dr_cll") return Estimator::dr_cll;
  if (name == "dr_l") return Estimator::dr_l;
  if (name == "ph") return Estimator::ph;
  throw ValidationError("unknown estimator '" + name + "'");
}

const EstimatorMetrics& SimulationReport::at(Estimator e) const {
  for (const auto& m : metrics)
    if (m.estimator == e) return m;
  throw ValidationError("estimator not part of the report: " + estimator_name(e));
}

namespace {

struct ReplicationErrors {
  bool ok = false;
  std::vector<double> cdf;
  std::vector<double> adme;
};

ReplicationErrors dr_errors(const CensoredSample& s, LinkKind link, const ThresholdGrid& grid,
                            std::span<const double> truth_cdf, std::span<const double> truth_adme,
                            double eval_x) {
  ReplicationErrors out;
  try {
    const auto km = km_weights(order_sample(s));
    const auto path = fit_path(make_design(km), link, grid, PathMode::warm_start);
    for (const auto& f : path.fits)
      if (f.diag.status == FitStatus::not_converged) return out;
    const auto adme = estimate_adme(path, s);
    const double xv[] = {eval_x};
    constexpr double skip = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < grid.size(); ++j) {
      // degenerate thresholds (event frequency 0 or 1) are left out of that cell
      const bool ok = path.fits[j].diag.status == FitStatus::converged;
      out.cdf.push_back(ok ? 100.0 * (predict_cdf(path, xv, grid[j]) - truth_cdf[j]) : skip);
      out.adme.push_back(ok ? 100.0 * (adme.value(static_cast<Index>(j), 0) - truth_adme[j])
                            : skip);
    }
    out.ok = true;
  } catch (const Error&) {
    out.ok = false;
  }
  return out;
}

ReplicationErrors ph_errors(const CensoredSample& s, const ThresholdGrid& grid,
                            std::span<const double> truth_cdf, std::span<const double> truth_adme,
                            double eval_x) {
  ReplicationErrors out;
  try {
    const PhFit fit = fit_ph(s);
    if (!fit.converged) return out;
    const double xv[] = {eval_x};
    for (std::size_t j = 0; j < grid.size(); ++j) {
      out.cdf.push_back(100.0 * (ph_cdf(fit, xv, grid[j]) - truth_cdf[j]));
      out.adme.push_back(100.0 * (ph_adme(fit, s, grid[j])(0) - truth_adme[j]));
    }
    out.ok = true;
  } catch (const Error&) {
    out.ok = false;
  }
  return out;
}

// mean over the grid of |mean error| and of sqrt(mean squared error)
std::pair<double, double> summarise(const std::vector<ReplicationErrors>& reps,
                                    std::vector<double> ReplicationErrors::*field,
                                    std::size_t grid_size) {
  double bias_acc = 0.0, rmse_acc = 0.0;
  for (std::size_t j = 0; j < grid_size; ++j) {
    double sum = 0.0, sq = 0.0;
    Index used = 0;
    for (const auto& r : reps) {
      if (!r.ok || std::isnan((r.*field)[j])) continue;
      const double e = (r.*field)[j];
      sum += e;
      sq += e * e;
      ++used;
    }
    if (used == 0) return {std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN()};
    bias_acc += std::abs(sum / static_cast<double>(used));
    rmse_acc += std::sqrt(sq / static_cast<double>(used));
  }
  return {bias_acc / static_cast<double>(grid_size), rmse_acc / static_cast<double>(grid_size)};
}

}  // namespace

SimulationReport run_experiment(const DgpSpec& spec, Index reps,
                                std::span<const Estimator> estimators, kernels::Exec exec) {
  validate(spec);
  if (reps < 2) throw ValidationError("at least 2 replications are required");
  if (estimators.empty()) throw ValidationError("no estimators requested");

  SimulationReport report;
  report.spec = spec;
  report.reps = reps;
  const ThresholdGrid grid(population_grid(spec.dgp_id));
  report.grid_size = grid.size();
  std::vector<double> truth_cdf, truth_adme;
  for (double t : grid.thresholds()) {
    truth_cdf.push_back(true_cdf(spec.dgp_id, t, report.eval_x));
    truth_adme.push_back(true_adme(spec.dgp_id, t));
  }
  calibrate_censoring(spec.dgp_id, spec.censoring_pct);  // fill the cache up front

  const std::size_t m = estimators.size();
  std::vector<std::vector<ReplicationErrors>> errors(m, std::vector<ReplicationErrors>(
                                                            static_cast<std::size_t>(reps)));
  kernels::for_each_replication(
      reps,
      [&](Index r) {
        const CensoredSample s = generate(spec, static_cast<std::uint64_t>(r));
        for (std::size_t e = 0; e < m; ++e) {
          auto& slot = errors[e][static_cast<std::size_t>(r)];
          switch (estimators[e]) {
            case Estimator::dr_cll:
              slot = dr_errors(s, LinkKind::cloglog, grid, truth_cdf, truth_adme, report.eval_x);
              break;
            case Estimator::dr_l:
              slot = dr_errors(s, LinkKind::logit, grid, truth_cdf, truth_adme, report.eval_x);
              break;
            case Estimator::ph:
              slot = ph_errors(s, grid, truth_cdf, truth_adme, report.eval_x);
              break;
          }
        }
      },
      exec);

  for (std::size_t e = 0; e < m; ++e) {
    EstimatorMetrics metrics;
    metrics.estimator = estimators[e];
    for (const auto& r : errors[e]) (r.ok ? metrics.used : metrics.failures) += 1;
    std::tie(metrics.avg_abs_bias_cdf, metrics.rmse_cdf) =
        summarise(errors[e], &ReplicationErrors::cdf, grid.size());
    std::tie(metrics.avg_abs_bias_adme, metrics.rmse_adme) =
        summarise(errors[e], &ReplicationErrors::adme, grid.size());
    if (static_cast<double>(metrics.failures) > 0.05 * static_cast<double>(reps))
      report.flagged = true;
    report.metrics.push_back(metrics);
  }
  return report;
}

CoverageReport run_coverage(const DgpSpec& spec, Index reps, LinkKind link, double alpha,
                            Index n_boot, kernels::Exec exec) {
  validate(spec);
  const ThresholdGrid grid(population_grid(spec.dgp_id));
  std::vector<double> truth;
  for (double t : grid.thresholds()) truth.push_back(true_adme(spec.dgp_id, t));
  calibrate_censoring(spec.dgp_id, spec.censoring_pct);

  // 0 = failed, 1 = not covered, 2 = covered
  std::vector<int> outcome(static_cast<std::size_t>(reps), 0);
  kernels::for_each_replication(
      reps,
      [&](Index r) {
        try {
          const CensoredSample s = generate(spec, static_cast<std::uint64_t>(r));
          const auto km = km_weights(order_sample(s));
          const auto path = fit_path(make_design(km), link, grid, PathMode::warm_start);
          for (const auto& f : path.fits)
            if (f.diag.status == FitStatus::not_converged) return;
          const auto adme = estimate_adme(path, s);
          const auto infl = compute_influence(km, path);
          BootstrapOptions bo;
          bo.alpha = alpha;
          bo.n_boot = n_boot;
          bo.seed = splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(r)));
          const AdmeBand band = bootstrap_bands(adme, infl.zeta_adme, bo);
          bool covered = true;
          for (std::size_t j = 0; j < grid.size(); ++j) {
            const auto jj = static_cast<Index>(j);
            if (!band.valid[j]) continue;
            covered = covered && band.sim_lo(jj, 0) <= truth[j] && truth[j] <= band.sim_hi(jj, 0);
          }
          outcome[static_cast<std::size_t>(r)] = covered ? 2 : 1;
        } catch (const Error&) {
        }
      },
      exec);

  CoverageReport out;
  out.reps = reps;
  for (int o : outcome) {
    if (o == 0) ++out.failures;
    if (o == 2) ++out.covered;
  }
  return out;
}

}  // namespace kmdr::mc
