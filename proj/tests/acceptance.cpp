// Acceptance checks, one PASS/FAIL line per criterion.
//   acceptance                  run every criterion
//   acceptance --criterion 3    run a subset (repeatable)
// Exit status is nonzero when any selected criterion fails.

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "kmdr/inference.hpp"
#include "kmdr/kmdr_fit.hpp"
#include "kmdr/mc_harness.hpp"
#include "support.hpp"

using namespace kmdr;

namespace {

constexpr std::uint64_t kSeed = 7;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* title;
  double budget_s;  // wall-clock limit; <= 0 for none
  std::function<Outcome()> run;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s.precision(prec);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << v;
  return s.str();
}

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

Outcome identity_suite() {
  std::mt19937_64 rng(kSeed);
  int bitwise_bad = 0, intercept_bad = 0, km_bad = 0;
  double worst_intercept = 0.0, worst_km = 0.0;

  const LinkKind links[] = {LinkKind::logit, LinkKind::cloglog, LinkKind::probit};
  for (int rep = 0; rep < 12; ++rep) {
    const auto s = oracle::random_sample(rng, 100 + 25 * rep, 1 + rep % 3, 0.0, rep % 2 == 0);
    const auto km = km_weights(order_sample(s));
    const auto grid = build_grid(km, QuantileGridSpec{0.1, 0.9, 20});
    const LinkKind link = links[rep % 3];
    const auto a = fit_path(make_design(km), link, grid);
    const auto b = fit_path(uniform_design(km), link, grid);
    for (std::size_t j = 0; j < grid.size(); ++j)
      if (!bitwise_equal(a.fits[j].theta, b.fits[j].theta) ||
          !bitwise_equal(a.fits[j].hessian, b.fits[j].hessian))
        ++bitwise_bad;
  }

  for (int rep = 0; rep < 50; ++rep) {
    const auto full = oracle::random_sample(rng, 40 + 4 * rep, 1, 0.5 + 0.05 * rep, rep % 3 == 0);
    const CensoredSample s(full.y(), full.delta(), Eigen::MatrixXd(full.n(), 0));
    const auto km = km_weights(order_sample(s));
    const LinkKind link = links[rep % 3];
    const auto path = fit_path(km, link, build_grid(km, QuantileGridSpec{0.1, 0.9, 10}));
    for (const auto& f : path.fits) {
      if (!f.diag.converged()) {
        ++intercept_bad;
        continue;
      }
      const double err = std::abs(eval_link(link, f.theta(0)).cdf - km_cdf(km, f.t) / km.total());
      worst_intercept = std::max(worst_intercept, err);
      if (err > 1e-8) ++intercept_bad;
    }

    std::vector<int> ds(static_cast<std::size_t>(s.n()));
    for (Index i = 0; i < s.n(); ++i) ds[static_cast<std::size_t>(i)] = km.ordered().delta(i);
    const auto w = oracle::km_weights_product(ds);
    for (Index i = 0; i < s.n(); ++i) {
      const double err = std::abs(km.w()(i) - w[static_cast<std::size_t>(i)]);
      worst_km = std::max(worst_km, err);
      if (err > 1e-12) ++km_bad;
    }
  }
  return {bitwise_bad == 0 && intercept_bad == 0 && km_bad == 0,
          "bitwise mismatches " + std::to_string(bitwise_bad) + ", intercept max err " +
              sci(worst_intercept) + " (fails " + std::to_string(intercept_bad) +
              "), KM max err " + sci(worst_km)};
}

Outcome derivative_suite() {
  std::mt19937_64 rng(kSeed + 1);
  std::uniform_real_distribution<double> unif(-0.5, 0.5), pos(0.05, 0.5);
  const LinkKind links[] = {LinkKind::logit, LinkKind::cloglog, LinkKind::probit,
                            LinkKind::exponential};
  double worst_g = 0.0, worst_h = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Index k = 1 + rep % 3;
    const auto s = oracle::random_sample(rng, 30 + (rep * 37) % 170, k, 1.0 + 0.02 * rep, rep % 4 == 0);
    const auto design = make_design(km_weights(order_sample(s)));
    const LinkKind link = links[rep % 4];
    Eigen::VectorXd th(k + 1);
    for (Index j = 0; j <= k; ++j) th(j) = link == LinkKind::exponential ? pos(rng) : unif(rng);
    const double t = s.y()((rep * 13) % s.n());
    auto q = [&](const Eigen::VectorXd& v) {
      return oracle::weighted_loglik(link, design.xaug, design.y, design.w, t, v);
    };
    const auto terms = objective_terms(design, link, t, th);
    const Eigen::VectorXd g = oracle::fd_gradient(q, th, 1e-6);
    worst_g = std::max(worst_g, (terms.gradient - g).norm() / std::max(1.0, g.norm()));
    auto grad = [&](const Eigen::VectorXd& v) { return oracle::fd_gradient(q, v, 1e-5); };
    const Eigen::MatrixXd h = oracle::fd_hessian(grad, th, 1e-4);
    worst_h = std::max(worst_h, (terms.hessian - h).norm() / std::max(1.0, h.norm()));
  }
  return {worst_g <= 1e-6 && worst_h <= 1e-4,
          "max rel err gradient " + sci(worst_g) + " (tol 1e-6), Hessian " +
              sci(worst_h) + " (tol 1e-4)"};
}

Outcome influence_suite() {
  const LinkKind links[] = {LinkKind::logit, LinkKind::cloglog};
  double worst = 0.0;
  int compared = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::mt19937_64 rng(kSeed + 100 + static_cast<std::uint64_t>(rep));
    const Index n = 21 + 2 * rep - rep % 2;  // 21..59
    const auto s = oracle::random_sample(rng, n, 1 + rep % 2, 1.2, rep % 3 == 0);
    const auto km = km_weights(order_sample(s));
    const LinkKind link = links[rep % 2];
    const auto path = fit_path(km, link, build_grid(km, QuantileGridSpec{0.2, 0.8, 4}),
                               PathMode::independent);
    const auto& os = km.ordered();
    auto factor = [&](double u, int d) { return score_factor(eval_link(link, u), d); };
    for (std::size_t j = 0; j < path.fits.size(); ++j) {
      if (!path.fits[j].diag.converged()) continue;
      const auto fast = influence_theta(km, path, j);
      const auto slow =
          oracle::influence_literal(os.y, os.delta, os.x, path.fits[j].theta, path.fits[j].t, factor);
      const double scale = std::max(1.0, slow.cwiseAbs().maxCoeff());
      worst = std::max(worst, (fast - slow).cwiseAbs().maxCoeff() / scale);
      ++compared;
    }
  }
  return {worst <= 1e-12 && compared >= 20,
          std::to_string(compared) + " thresholds compared, max rel err " + sci(worst) +
              " (tol 1e-12)"};
}

Outcome dgp1_large_sample() {
  const mc::Estimator est[] = {mc::Estimator::dr_cll, mc::Estimator::ph};
  const auto r = mc::run_experiment({1, 1600, 0, kSeed}, 200, est);
  const auto& dr = r.at(mc::Estimator::dr_cll);
  const auto& ph = r.at(mc::Estimator::ph);
  const bool ok = dr.avg_abs_bias_cdf <= 0.25 && in(dr.rmse_cdf, 0.82, 1.42) &&
                  in(ph.rmse_cdf, 0.75, 1.35) && !r.flagged;
  return {ok, "DR_cll bias " + fmt(dr.avg_abs_bias_cdf) + " (<= 0.25), rmse " + fmt(dr.rmse_cdf) +
                  " (1.12 +- 0.30); PH rmse " + fmt(ph.rmse_cdf) + " (1.05 +- 0.30); failures " +
                  std::to_string(dr.failures + ph.failures)};
}

Outcome dgp3_misspecification() {
  const mc::Estimator est[] = {mc::Estimator::dr_cll, mc::Estimator::ph};
  const auto r = mc::run_experiment({3, 400, 0, kSeed}, 200, est);
  const auto& dr = r.at(mc::Estimator::dr_cll);
  const auto& ph = r.at(mc::Estimator::ph);
  const bool ok = in(ph.avg_abs_bias_adme, 15.0, 21.0) && dr.avg_abs_bias_adme <= 1.0;
  return {ok, "PH ADME bias " + fmt(ph.avg_abs_bias_adme) + " (want [15, 21]); DR_cll ADME bias " +
                  fmt(dr.avg_abs_bias_adme) + " (want <= 1.0)"};
}

Outcome root_n_rate() {
  const mc::Estimator est[] = {mc::Estimator::dr_l};
  const auto small = mc::run_experiment({2, 400, 0, kSeed}, 200, est);
  const auto large = mc::run_experiment({2, 1600, 0, kSeed}, 200, est);
  const double a = small.at(mc::Estimator::dr_l).rmse_cdf;
  const double b = large.at(mc::Estimator::dr_l).rmse_cdf;
  return {in(b / a, 0.4, 0.6), "DR_l rmse_cdf n=400 " + fmt(a) + ", n=1600 " + fmt(b) +
                                   ", ratio " + fmt(b / a) + " (want [0.4, 0.6])"};
}

Outcome coverage() {
  const auto r = mc::run_coverage({1, 400, 10, kSeed}, 300, LinkKind::cloglog, 0.10, 500);
  return {in(r.coverage(), 0.85, 0.95) && r.failures == 0,
          "90% simultaneous band covered the true ADME path in " + std::to_string(r.covered) + "/" +
              std::to_string(r.reps - r.failures) + " reps = " + fmt(r.coverage()) +
              " (want [0.85, 0.95]); failures " + std::to_string(r.failures)};
}

Outcome calibration() {
  bool ok = true;
  std::string detail;
  for (int dgp = 1; dgp <= 3; ++dgp)
    for (int pct : {10, 30}) {
      const auto c = mc::calibrate_censoring(dgp, pct);
      // fresh draws: a seed and stream disjoint from the calibration sample
      const double got = 100.0 * mc::realized_censoring(dgp, c, 1'000'000, kSeed + 1000,
                                                       static_cast<std::uint64_t>(dgp * 100 + pct));
      ok = ok && std::abs(got - pct) <= 0.5;
      detail += "dgp" + std::to_string(dgp) + "/" + std::to_string(pct) + "%: " + fmt(got, 2) + " ";
    }
  return {ok, detail + "(within 0.5 pp)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "criterion number 1-8 (repeatable)")
      ->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::map<int, Criterion> all{
      {1, {"identity suite", 10.0, identity_suite}},
      {2, {"gradient/Hessian suite", 30.0, derivative_suite}},
      {3, {"influence-function oracle", 60.0, influence_suite}},
      {4, {"DGP 1 n=1600 desk-scale reproduction", 900.0, dgp1_large_sample}},
      {5, {"DGP 3 misspecification signature", 600.0, dgp3_misspecification}},
      {6, {"root-n rate, DGP 2 DR_l", 0.0, root_n_rate}},
      {7, {"bootstrap coverage (slow tier)", 1800.0, coverage}},
      {8, {"censoring calibration", 0.0, calibration}},
  };
  std::set<int> run(selected.begin(), selected.end());
  if (run.empty())
    for (const auto& [id, c] : all) run.insert(id);

  int failed = 0;
  for (int id : run) {
    const auto& c = all.at(id);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0.0 || secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << c.title << ": "
              << o.detail << "  [" << fmt(secs, 1) << " s"
              << (c.budget_s > 0 ? ", budget " + fmt(c.budget_s, 0) + " s" : std::string()) << "]"
              << (in_time ? "" : " OVER BUDGET") << '\n';
  }
  return failed == 0 ? 0 : 1;
}
