#pragma once

// Independent reference computations for the unit and acceptance tests. None
// of these call into the library beyond plain data access, so they can catch
// errors shared by the fast code paths.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "kmdr/link_family.hpp"
#include "kmdr/sample_data.hpp"

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

// Random censored sample: x ~ U(0,1)^k, Weibull-ish durations, exponential censoring.
// `ties` rounds durations to a coarse grid so that ties (including event/censoring ties) occur.
inline kmdr::CensoredSample random_sample(std::mt19937_64& rng, Index n, Index k,
                                          double censor_scale, bool ties = false) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  VectorXd y(n);
  VectorXi d(n);
  MatrixXd x(n, k);
  for (Index i = 0; i < n; ++i) {
    double lin = 0.0;
    for (Index c = 0; c < k; ++c) {
      x(i, c) = unif(rng);
      lin += (c % 2 ? -0.5 : 0.8) * x(i, c);
    }
    double t = std::sqrt(expo(rng)) * std::exp(lin);
    double cens = censor_scale > 0 ? censor_scale * expo(rng) : INFINITY;
    if (ties) {
      t = std::round(t * 8.0) / 8.0;
      cens = std::round(cens * 8.0) / 8.0;
    }
    y(i) = std::min(t, cens);
    d(i) = t <= cens ? 1 : 0;
  }
  if (d.sum() == 0) d(0) = 1;
  return kmdr::CensoredSample(y, d, x);
}

// Permutation sorting by duration, events first at ties, stable otherwise.
inline std::vector<Index> sort_order(const VectorXd& y, const VectorXi& d) {
  std::vector<Index> idx(static_cast<std::size_t>(y.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    if (y(a) != y(b)) return y(a) < y(b);
    return d(a) > d(b);
  });
  return idx;
}

// W_in from the product formula, each product recomputed from scratch: O(n^2).
inline std::vector<double> km_weights_product(const std::vector<int>& delta_sorted) {
  const auto n = static_cast<double>(delta_sorted.size());
  std::vector<double> w(delta_sorted.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    double prod = 1.0;
    for (std::size_t j = 0; j < i; ++j)
      prod *= 1.0 - delta_sorted[j] / (n - static_cast<double>(j));
    w[i] = delta_sorted[i] / (n - static_cast<double>(i)) * prod;
  }
  return w;
}

// 1 - prod_{Y_(i) <= t} (1 - delta_(i)/(n - i + 1)).
inline double km_cdf_product(const VectorXd& y, const VectorXi& d, double t) {
  const auto ord = sort_order(y, d);
  const auto n = static_cast<double>(y.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < ord.size(); ++i)
    if (y(ord[i]) <= t) prod *= 1.0 - d(ord[i]) / (n - static_cast<double>(i));
  return 1.0 - prod;
}

// Link CDFs written out directly.
inline double link_cdf(kmdr::LinkKind link, double u) {
  switch (link) {
    case kmdr::LinkKind::logit: return 1.0 / (1.0 + std::exp(-u));
    case kmdr::LinkKind::cloglog: return 1.0 - std::exp(-std::exp(u));
    case kmdr::LinkKind::probit: return 0.5 * std::erfc(-u / std::sqrt(2.0));
    case kmdr::LinkKind::exponential: return 1.0 - std::exp(-u);
  }
  return NAN;
}

// Weighted log-likelihood sum_i w_i [d_i log Psi + (1 - d_i) log(1 - Psi)].
inline double weighted_loglik(kmdr::LinkKind link, const MatrixXd& xaug, const VectorXd& y,
                              const VectorXd& w, double t, const VectorXd& theta) {
  long double acc = 0.0L;
  for (Index i = 0; i < xaug.rows(); ++i) {
    if (w(i) == 0.0) continue;
    const double p = link_cdf(link, xaug.row(i).dot(theta));
    acc += w(i) * (y(i) <= t ? std::log(p) : std::log1p(-p));
  }
  return static_cast<double>(acc);
}

inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                            double h) {
  VectorXd g(x.size());
  for (Index j = 0; j < x.size(); ++j) {
    VectorXd a = x, b = x;
    a(j) += h;
    b(j) -= h;
    g(j) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline MatrixXd fd_hessian(const std::function<VectorXd(const VectorXd&)>& grad,
                           const VectorXd& x, double h) {
  MatrixXd hs(x.size(), x.size());
  for (Index j = 0; j < x.size(); ++j) {
    VectorXd a = x, b = x;
    a(j) += h;
    b(j) -= h;
    hs.col(j) = (grad(a) - grad(b)) / (2.0 * h);
  }
  return 0.5 * (hs + hs.transpose());
}

// Score factor for one observation, from the closed-form link and a central
// difference for psi, so it shares nothing with the library's link code.
inline double score_factor_fd(kmdr::LinkKind link, double u, int d) {
  const double h = 1e-6;
  const double p = link_cdf(link, u);
  const double pdf = (link_cdf(link, u + h) - link_cdf(link, u - h)) / (2.0 * h);
  return (d - p) / (p * (1.0 - p)) * pdf;
}

// Literal plug-in influence values zeta_i(t), each gamma evaluated by its
// defining sum: gamma0 inside gamma1/gamma2 is recomputed per term, giving
// O(n^3) work. F_Y is the empirical CDF of Y; 1/(1 - F_Y) terms vanish where
// F_Y reaches 1. `psi_factor(u, d)` is the score factor of the link.
inline MatrixXd influence_literal(const VectorXd& y, const VectorXi& d, const MatrixXd& x,
                                  const VectorXd& theta, double t,
                                  const std::function<double(double, int)>& psi_factor) {
  const Index n = y.size();
  const Index p = theta.size();
  const double nd = static_cast<double>(n);
  auto surv = [&](double v) {  // 1 - F_Y(v)
    Index above = 0;
    for (Index j = 0; j < n; ++j) above += y(j) > v ? 1 : 0;
    return static_cast<double>(above) / nd;
  };
  auto gamma0 = [&](double yy) {
    double s = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (d(j) == 1 || !(y(j) < yy)) continue;
      const double sv = surv(y(j));
      if (sv > 0.0) s += 1.0 / nd / sv;
    }
    return std::exp(s);
  };
  auto phi = [&](Index j) {
    VectorXd xa(p);
    xa(0) = 1.0;
    xa.tail(p - 1) = x.row(j).transpose();
    return VectorXd(psi_factor(xa.dot(theta), y(j) <= t ? 1 : 0) * xa);
  };
  MatrixXd zeta = MatrixXd::Zero(n, p);
  for (Index i = 0; i < n; ++i) {
    VectorXd z = VectorXd::Zero(p);
    if (d(i) == 1) z += phi(i) * gamma0(y(i));
    if (d(i) == 0) {
      const double si = surv(y(i));
      if (si > 0.0) {
        VectorXd g1 = VectorXd::Zero(p);
        for (Index w = 0; w < n; ++w)
          if (d(w) == 1 && y(i) < y(w)) g1 += phi(w) * gamma0(y(w)) / nd;
        z += g1 / si;
      }
    }
    VectorXd g2 = VectorXd::Zero(p);
    for (Index v = 0; v < n; ++v) {
      if (d(v) == 1 || !(y(v) < y(i))) continue;
      const double sv = surv(y(v));
      if (sv <= 0.0) continue;
      for (Index w = 0; w < n; ++w)
        if (d(w) == 1 && y(v) < y(w)) g2 += phi(w) * gamma0(y(w)) / (nd * nd * sv * sv);
    }
    zeta.row(i) = (z - g2).transpose();
  }
  return zeta;
}

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("kmdr_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_sample_csv(const std::filesystem::path& p, const kmdr::CensoredSample& s) {
  std::ofstream out(p);
  out.precision(17);
  out << "y,delta";
  for (Index c = 0; c < s.k(); ++c) out << ",x" << c + 1;
  out << '\n';
  for (Index i = 0; i < s.n(); ++i) {
    out << s.y()(i) << ',' << s.delta()(i);
    for (Index c = 0; c < s.k(); ++c) out << ',' << s.x()(i, c);
    out << '\n';
  }
}

}  // namespace oracle
