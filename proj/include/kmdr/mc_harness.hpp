#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kmdr/inference.hpp"
#include "kmdr/kernels.hpp"
#include "kmdr/sample_data.hpp"

namespace kmdr::mc {

// The three simulation designs, X ~ U(0,1) and U ~ U(0,1) independent:
//   1: T = (-ln U)^{1/2} exp(X)          Weibull, proportional hazards
//   2: T = exp(X/4) (1/U - 1)^{1/4}      log-logistic, proportional odds
//   3: T = (-ln U)^{1/(1+X)}             Weibull with shape 1 + x
// Censoring C = a + b E with E standard exponential.
struct DgpSpec {
  int dgp_id = 1;
  Index n = 100;
  int censoring_pct = 0;  // 0, 10 or 30
  std::uint64_t seed = 0;
};

void validate(const DgpSpec& spec);

struct CensoringParams {
  double a = 0.0;
  double b = 0.0;  // +inf: no censoring
};

// a = 0 and b solved by bisection so that P(T > bE) matches target/100 on a
// fixed 10^6-draw Monte Carlo sample. Cached per (dgp, target).
CensoringParams calibrate_censoring(int dgp_id, int target_pct);

// Censored fraction on `draws` fresh draws from stream (seed, stream).
double realized_censoring(int dgp_id, const CensoringParams& c, Index draws,
                          std::uint64_t seed, std::uint64_t stream);

// Sample for replication `rep`; the stream is a function of (seed, rep) only.
CensoredSample generate(const DgpSpec& spec, std::uint64_t rep = 0);

// Closed-form conditional CDF F(t | x).
double true_cdf(int dgp_id, double t, double x);
// dF(t | x)/dx.
double true_cdf_dx(int dgp_id, double t, double x);
// E_X[dF(t|X)/dX], adaptive Gauss-Kronrod quadrature over x in (0,1).
double true_adme(int dgp_id, double t);
// Marginal CDF of T, by quadrature over x.
double marginal_cdf(int dgp_id, double t);
double marginal_quantile(int dgp_id, double q);

// `points` equally spaced t between the lo and hi marginal quantiles of T.
// The default grid is cached.
std::vector<double> population_grid(int dgp_id, double lo = 0.1, double hi = 0.9,
                                    int points = 100);

enum class Estimator { dr_cll, dr_l, ph };
std::string estimator_name(Estimator e);
Estimator parse_estimator(const std::string& name);

// Errors on the x100 scale, averaged over the evaluation grid.
struct EstimatorMetrics {
  Estimator estimator = Estimator::dr_cll;
  double avg_abs_bias_cdf = 0.0;
  double rmse_cdf = 0.0;
  double avg_abs_bias_adme = 0.0;
  double rmse_adme = 0.0;
  Index failures = 0;
  Index used = 0;
};

struct SimulationReport {
  DgpSpec spec;
  Index reps = 0;
  std::size_t grid_size = 0;
  double eval_x = 0.5;
  std::vector<EstimatorMetrics> metrics;
  bool flagged = false;  // some estimator failed in more than 5% of replications

  const EstimatorMetrics& at(Estimator e) const;
};

// Per replication: draw a sample, fit every estimator on the fixed
// population grid, record 100 (F_hat(t|0.5) - F(t|0.5)) and
// 100 (ADME_hat(t) - ADME(t)). Bias per threshold is the mean error across
// replications; the report averages |bias| and per-threshold RMSE over the grid.
SimulationReport run_experiment(const DgpSpec& spec, Index reps,
                                std::span<const Estimator> estimators,
                                kernels::Exec exec = kernels::Exec::omp);

struct CoverageReport {
  Index reps = 0;
  Index covered = 0;
  Index failures = 0;
  double coverage() const {
    const Index used = reps - failures;
    return used > 0 ? static_cast<double>(covered) / static_cast<double>(used) : 0.0;
  }
};

// Fraction of replications whose simultaneous band covers the true ADME at
// every grid point.
CoverageReport run_coverage(const DgpSpec& spec, Index reps, LinkKind link, double alpha,
                            Index n_boot, kernels::Exec exec = kernels::Exec::omp);

}  // namespace kmdr::mc
