#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "kmdr/kaplan_meier.hpp"
#include "kmdr/link_family.hpp"

namespace kmdr {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Grid points must satisfy kGridTrim <= F_KM(t)/sum(w) <= 1 - kGridTrim.
inline constexpr double kGridTrim = 0.01;

// p points equally spaced in t between the lo- and hi-quantiles of the
// renormalised KM estimate.
struct QuantileGridSpec {
  double lo = 0.1;
  double hi = 0.9;
  int points = 100;
};

struct ExplicitGridSpec {
  std::vector<double> values;
};

using GridSpec = std::variant<QuantileGridSpec, ExplicitGridSpec>;

class ThresholdGrid {
 public:
  ThresholdGrid() = default;
  // Throws unless the values are finite and strictly increasing.
  explicit ThresholdGrid(std::vector<double> thresholds);

  const std::vector<double>& thresholds() const { return t_; }
  std::size_t size() const { return t_.size(); }
  double operator[](std::size_t i) const { return t_[i]; }
  std::optional<std::size_t> index_of(double t) const;

 private:
  std::vector<double> t_;
};

// Drops points that violate the trimming rule; throws "degenerate grid" if
// nothing is left.
ThresholdGrid build_grid(const KaplanMeierWeights& km, const GridSpec& spec);

// Rows used by the weighted binary-regression objective: augmented
// covariates (leading 1), durations and weights, all in the same order.
struct WeightedDesign {
  RowMatrix xaug;
  Eigen::VectorXd y;
  Eigen::VectorXd w;

  Index n() const { return y.size(); }
  Index p() const { return xaug.cols(); }
};

WeightedDesign make_design(const KaplanMeierWeights& km);
// Same rows with the weights replaced by 1/n.
WeightedDesign uniform_design(const KaplanMeierWeights& km);

struct ObjectiveTerms {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;      // second derivative of the objective
  Eigen::MatrixXd information;  // weighted expected information, sum w psi^2/(Psi(1-Psi)) xx'
  int clamp_count = 0;
};

// Q(theta) = sum_i w_i [d_i log Psi(u_i) + (1 - d_i) log(1 - Psi(u_i))],
// d_i = 1{y_i <= t}, u_i = xaug_i' theta.
double objective(const WeightedDesign& design, LinkKind link, double t,
                 const Eigen::VectorXd& theta);
double objective(const KaplanMeierWeights& km, LinkKind link, double t,
                 const Eigen::VectorXd& theta);
ObjectiveTerms objective_terms(const WeightedDesign& design, LinkKind link, double t,
                               const Eigen::VectorXd& theta);

enum class FitStatus { converged, not_converged, degenerate };

struct FitOptions {
  double tol_grad = 1e-8;
  double tol_rel_objective = 1e-12;
  int max_iter = 100;
  int max_halvings = 30;
};

struct FitDiagnostics {
  int iterations = 0;
  double grad_norm = 0.0;  // max-norm of the objective gradient at theta
  FitStatus status = FitStatus::not_converged;
  int clamp_count = 0;
  bool fisher_fallback = false;

  bool converged() const { return status == FitStatus::converged; }
};

struct ThresholdFit {
  double t = 0.0;
  Eigen::VectorXd theta;    // intercept first, then slopes
  Eigen::MatrixXd hessian;  // Sigma_n(t): the negated Hessian of the objective at theta
  Eigen::MatrixXd fisher;   // (1/n) sum_i psi^2/(Psi(1-Psi)) x_i x_i' over the full sample
  double objective = 0.0;
  FitDiagnostics diag;
};

// Newton-Raphson with step-halving; Fisher scoring when the Hessian is not
// negative definite. Starts from zeros when init is empty (the exponential
// link starts from the intercept that matches the weighted event rate).
ThresholdFit fit_threshold(const WeightedDesign& design, LinkKind link, double t,
                           const std::optional<Eigen::VectorXd>& init = std::nullopt,
                           const FitOptions& opts = {});
ThresholdFit fit_threshold(const KaplanMeierWeights& km, LinkKind link, double t,
                           const std::optional<Eigen::VectorXd>& init = std::nullopt,
                           const FitOptions& opts = {});

// independent: every threshold starts from zeros and thresholds are fitted
// concurrently. warm_start: sequential, each fit starts at the previous solution.
enum class PathMode { independent, warm_start };

struct DrCoefficientPath {
  LinkKind link = LinkKind::logit;
  ThresholdGrid grid;
  std::vector<ThresholdFit> fits;  // one per grid point

  Index k() const { return fits.empty() ? 0 : fits.front().theta.size() - 1; }
  std::size_t converged_count() const;
};

// Throws NumericalError only when no threshold converges.
DrCoefficientPath fit_path(const WeightedDesign& design, LinkKind link,
                           const ThresholdGrid& grid,
                           PathMode mode = PathMode::independent,
                           const FitOptions& opts = {});
DrCoefficientPath fit_path(const KaplanMeierWeights& km, LinkKind link,
                           const ThresholdGrid& grid,
                           PathMode mode = PathMode::independent,
                           const FitOptions& opts = {});

// Psi((1, x')' theta(t)); t must be a grid point.
double predict_cdf(const DrCoefficientPath& path, std::span<const double> x, double t);

}  // namespace kmdr
