#include "kmdr/link_family.hpp"

#include <cmath>
#include <numbers>

#include "kmdr/error.hpp"

namespace kmdr {

LinkKind parse_link(std::string_view name) {
  if (name == "logit") return LinkKind::logit;
  if (name == "cloglog") return LinkKind::cloglog;
  if (name == "probit") return LinkKind::probit;
  if (name == "exponential") return LinkKind::exponential;
  throw ValidationError("unknown link '" + std::string(name) + "'");
}

std::string link_name(LinkKind link) {
  switch (link) {
    case LinkKind::logit: return "logit";
    case LinkKind::cloglog: return "cloglog";
    case LinkKind::probit: return "probit";
    case LinkKind::exponential: return "exponential";
  }
  return "unknown";
}

LinkValue eval_link(LinkKind link, double u) {
  if (!std::isfinite(u)) throw ValidationError("link argument is not finite");
  LinkValue v;
  switch (link) {
    case LinkKind::logit: {
      const double e = std::exp(-std::abs(u));
      const double big = 1.0 / (1.0 + e);
      const double small = e / (1.0 + e);
      v.cdf = u >= 0.0 ? big : small;
      v.survival = u >= 0.0 ? small : big;
      v.pdf = v.cdf * v.survival;
      v.dpdf = v.pdf * (v.survival - v.cdf);
      break;
    }
    case LinkKind::cloglog: {
      const double eu = std::exp(u);
      v.survival = std::exp(-eu);
      v.cdf = -std::expm1(-eu);
      v.pdf = std::exp(u - eu);
      v.dpdf = v.pdf == 0.0 ? 0.0 : v.pdf * (1.0 - eu);
      break;
    }
    case LinkKind::probit: {
      v.cdf = 0.5 * std::erfc(-u / std::numbers::sqrt2);
      v.survival = 0.5 * std::erfc(u / std::numbers::sqrt2);
      v.pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
      v.dpdf = -u * v.pdf;
      break;
    }
    case LinkKind::exponential: {
      if (u > 0.0) {
        v.survival = std::exp(-u);
        v.cdf = -std::expm1(-u);
        v.pdf = v.survival;
        v.dpdf = -v.survival;
      } else {
        // outside the domain; derivatives continued from u = 0
        v.cdf = 0.0;
        v.survival = 1.0;
        v.pdf = 1.0;
        v.dpdf = -1.0;
      }
      break;
    }
  }
  if (v.cdf < kLinkEps) {
    v.cdf = kLinkEps;
    v.survival = 1.0 - kLinkEps;
    v.clamped = true;
  } else if (v.survival < kLinkEps) {
    v.survival = kLinkEps;
    v.cdf = 1.0 - kLinkEps;
    v.clamped = true;
  }
  return v;
}

double score_factor(const LinkValue& v, int d) {
  // (d - Psi) psi / (Psi (1 - Psi)), simplified per outcome
  return d == 1 ? v.pdf / v.cdf : -v.pdf / v.survival;
}

Eigen::VectorXd score_kernel(LinkKind link, int d, const Eigen::VectorXd& xaug,
                             const Eigen::VectorXd& theta, bool* clamped) {
  if (xaug.size() != theta.size()) throw ValidationError("xaug/theta length mismatch");
  const LinkValue v = eval_link(link, xaug.dot(theta));
  if (clamped) *clamped = v.clamped;
  return score_factor(v, d) * xaug;
}

Eigen::MatrixXd fisher_kernel(LinkKind link, const Eigen::VectorXd& xaug,
                              const Eigen::VectorXd& theta, bool* clamped) {
  if (xaug.size() != theta.size()) throw ValidationError("xaug/theta length mismatch");
  const LinkValue v = eval_link(link, xaug.dot(theta));
  if (clamped) *clamped = v.clamped;
  return (v.pdf * v.pdf / (v.cdf * v.survival)) * (xaug * xaug.transpose());
}

}  // namespace kmdr
