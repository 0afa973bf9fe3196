#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "kmdr/kmdr_fit.hpp"

namespace kmdr {

// Average distribution marginal effects (1/n) sum_i beta(t) psi(x_i' theta(t)).
struct AdmeEstimate {
  std::vector<double> t;
  Eigen::MatrixXd value;            // thresholds x k; NaN rows where invalid
  std::vector<std::uint8_t> valid;  // 0 where the fit did not converge
};

AdmeEstimate estimate_adme(const DrCoefficientPath& path, const Eigen::MatrixXd& x);
AdmeEstimate estimate_adme(const DrCoefficientPath& path, const CensoredSample& sample);

// Plug-in gamma_0n(Y_i) for every order statistic:
//   exp{ (1/n) sum_j (1 - delta_j) 1{Y_j < y} / (1 - F_Yn(Y_j)) }.
Eigen::VectorXd gamma0(const OrderedSample& s);

// Plug-in influence values zeta_i(t) of the score at threshold path.grid[idx],
// one row per order statistic of km.ordered(). Uses suffix and prefix
// accumulations over distinct durations (linear in n after sorting). Factors
// whose denominator 1 - F_Yn vanishes contribute zero.
Eigen::MatrixXd influence_theta(const KaplanMeierWeights& km, const DrCoefficientPath& path,
                                std::size_t idx);

enum class SigmaChoice { hessian, fisher };

// zeta_i^ADME(t) built from zeta_i(t): centring term, slope-estimation term
// through H Sigma^{-1} zeta_i, and the psi'' curvature term. Rows as in
// influence_theta. Throws NumericalError when Sigma is singular.
Eigen::MatrixXd influence_adme(const KaplanMeierWeights& km, const DrCoefficientPath& path,
                               std::size_t idx, const Eigen::MatrixXd& zeta_theta,
                               SigmaChoice sigma = SigmaChoice::hessian);

struct InfluenceSet {
  std::vector<double> t;
  std::vector<Eigen::MatrixXd> zeta_theta;  // n x (k+1) per threshold
  std::vector<Eigen::MatrixXd> zeta_adme;   // n x k per threshold
  Eigen::VectorXd gamma0;                   // per order statistic
  std::vector<std::uint8_t> valid;
  double max_abs_zeta = 0.0;
  std::vector<std::string> warnings;
};

// Influence values at every converged threshold. Adds a tail-weight warning
// when max gamma_0n exceeds 1e3.
InfluenceSet compute_influence(const KaplanMeierWeights& km, const DrCoefficientPath& path,
                               SigmaChoice sigma = SigmaChoice::hessian);

struct BootstrapOptions {
  double alpha = 0.10;
  Index n_boot = 1000;
  std::uint64_t seed = 0;
};

struct AdmeBand {
  std::vector<double> t;
  Eigen::MatrixXd adme;  // thresholds x k
  Eigen::MatrixXd pw_lo, pw_hi, sim_lo, sim_hi;
  std::vector<std::uint8_t> valid;
  double alpha = 0.0;
  Index n_boot = 0;
  std::uint64_t seed = 0;
  double c_hat = 0.0;
  std::vector<std::string> warnings;
};

// Order statistic at ceil(level * size), 1-based.
double type1_quantile(std::vector<double> values, double level);

// Rademacher multiplier bootstrap. One multiplier vector per draw is shared
// by all thresholds and covariates; the sup statistic runs over every valid
// (threshold, covariate) cell. Simultaneous band: adme +- c_hat / sqrt(n).
// Pointwise band: per-cell (1 - alpha)-quantile of |R*|.
AdmeBand bootstrap_bands(const AdmeEstimate& adme, const std::vector<Eigen::MatrixXd>& zeta_adme,
                         const BootstrapOptions& opts);

}  // namespace kmdr
