#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

namespace kmdr {

enum class LinkKind { logit, cloglog, probit, exponential };

// Probability clamp: Psi is kept inside [kLinkEps, 1 - kLinkEps].
inline constexpr double kLinkEps = 1e-10;

LinkKind parse_link(std::string_view name);
std::string link_name(LinkKind link);

struct LinkValue {
  double cdf = 0.0;       // Psi(u), clamped
  double survival = 0.0;  // 1 - Psi(u), computed directly and clamped
  double pdf = 0.0;       // psi(u)
  double dpdf = 0.0;      // psi'(u)
  bool clamped = false;
};

// Psi and its first two derivatives at u. Non-finite u throws.
// The exponential link is only defined for u > 0; u <= 0 clamps.
LinkValue eval_link(LinkKind link, double u);

// Score of the binary log-likelihood d log Psi(u) + (1-d) log(1-Psi(u))
// with respect to theta, u = xaug' theta. Returns the scalar factor
//   (d - Psi) psi / (Psi (1 - Psi))
// so that the score vector is factor * xaug.
double score_factor(const LinkValue& v, int d);

Eigen::VectorXd score_kernel(LinkKind link, int d, const Eigen::VectorXd& xaug,
                             const Eigen::VectorXd& theta, bool* clamped = nullptr);

// psi^2 / (Psi (1-Psi)) xaug xaug'
Eigen::MatrixXd fisher_kernel(LinkKind link, const Eigen::VectorXd& xaug,
                              const Eigen::VectorXd& theta, bool* clamped = nullptr);

}  // namespace kmdr
