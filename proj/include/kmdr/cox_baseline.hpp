#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "kmdr/sample_data.hpp"

namespace kmdr {

struct PhOptions {
  double tol_grad = 1e-8;
  int max_iter = 100;
  int max_halvings = 30;
};

struct PartialLikelihood {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd information;  // negated Hessian
};

// Cox log partial likelihood with Breslow handling of tied event times.
// The risk set at an event time includes censorings at that same time.
PartialLikelihood partial_likelihood(const CensoredSample& s, const Eigen::VectorXd& beta);

// Cumulative baseline hazard as a right-continuous step function.
struct BaselineHazard {
  std::vector<double> times;       // distinct event times, increasing
  std::vector<double> jumps;       // d_j / sum_{at risk} exp(x'beta)
  std::vector<double> cumulative;  // running sum of jumps

  double operator()(double t) const;  // Lambda_0(t); zero before the first event
};

BaselineHazard breslow(const CensoredSample& s, const Eigen::VectorXd& beta);

struct PhFit {
  Eigen::VectorXd beta;
  BaselineHazard baseline;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Newton-Raphson from beta = 0 with step-halving. Monotone likelihoods end
// with converged = false; a singular information matrix at the start throws.
PhFit fit_ph(const CensoredSample& s, const PhOptions& opts = {});

// 1 - exp(-Lambda_0(t) exp(x'beta))
double ph_cdf(const PhFit& fit, std::span<const double> x, double t);

// (1/n) sum_i beta Lambda_0(t) exp(x_i'beta) exp(-Lambda_0(t) exp(x_i'beta))
Eigen::VectorXd ph_adme(const PhFit& fit, const CensoredSample& s, double t);

}  // namespace kmdr
