#include "json_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "kmdr/error.hpp"

namespace kmdr::io {

namespace {

// Non-finite values are written as null and read back as NaN.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw SchemaError("expected a number in fit file");
  return j.get<double>();
}

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json row_major(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) a.push_back(num(m(r, c)));
  return a;
}

Eigen::VectorXd read_vec(const json& j) {
  if (!j.is_array()) throw SchemaError("expected an array in fit file");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = get_num(j[i]);
  return v;
}

Eigen::MatrixXd read_square(const json& j, Index p) {
  const Eigen::VectorXd flat = read_vec(j);
  if (flat.size() != p * p) throw SchemaError("matrix in fit file has the wrong size");
  Eigen::MatrixXd m(p, p);
  for (Index r = 0; r < p; ++r)
    for (Index c = 0; c < p; ++c) m(r, c) = flat(r * p + c);
  return m;
}

const char* status_name(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::not_converged: return "not_converged";
    case FitStatus::degenerate: return "degenerate";
  }
  return "not_converged";
}

FitStatus parse_status(const std::string& s) {
  if (s == "converged") return FitStatus::converged;
  if (s == "not_converged") return FitStatus::not_converged;
  if (s == "degenerate") return FitStatus::degenerate;
  throw SchemaError("unknown fit status '" + s + "'");
}

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name))
    throw SchemaError(std::string("fit file lacks field '") + name + "'");
  return j.at(name);
}

}  // namespace

json path_to_json(const FitArtifact& fit) {
  json out;
  out["link"] = link_name(fit.path.link);
  out["duration"] = fit.columns.duration;
  out["event"] = fit.columns.event;
  out["covariates"] = fit.columns.covariates;
  json rows = json::array();
  for (const auto& f : fit.path.fits) {
    rows.push_back({{"t", num(f.t)},
                    {"theta", vec(f.theta)},
                    {"converged", f.diag.converged()},
                    {"status", status_name(f.diag.status)},
                    {"iterations", f.diag.iterations},
                    {"grad_norm", num(f.diag.grad_norm)},
                    {"clamp_count", f.diag.clamp_count},
                    {"fisher_fallback", f.diag.fisher_fallback},
                    {"objective", num(f.objective)},
                    {"fisher", row_major(f.fisher)},
                    {"hessian", row_major(f.hessian)}});
  }
  out["thresholds"] = std::move(rows);
  return out;
}

FitArtifact path_from_json(const json& j) {
  FitArtifact a;
  try {
    a.path.link = parse_link(field(j, "link").get<std::string>());
    a.columns.duration = field(j, "duration").get<std::string>();
    a.columns.event = field(j, "event").get<std::string>();
    a.columns.covariates = field(j, "covariates").get<std::vector<std::string>>();
    const Index p = static_cast<Index>(a.columns.covariates.size()) + 1;
    std::vector<double> ts;
    for (const auto& r : field(j, "thresholds")) {
      ThresholdFit f;
      f.t = get_num(field(r, "t"));
      f.theta = read_vec(field(r, "theta"));
      if (f.theta.size() != p) throw SchemaError("theta length does not match the covariates");
      f.diag.status = parse_status(field(r, "status").get<std::string>());
      f.diag.iterations = field(r, "iterations").get<int>();
      f.diag.grad_norm = get_num(field(r, "grad_norm"));
      f.diag.clamp_count = field(r, "clamp_count").get<int>();
      f.diag.fisher_fallback = field(r, "fisher_fallback").get<bool>();
      f.objective = get_num(field(r, "objective"));
      f.fisher = read_square(field(r, "fisher"), p);
      f.hessian = read_square(field(r, "hessian"), p);
      ts.push_back(f.t);
      a.path.fits.push_back(std::move(f));
    }
    a.path.grid = ThresholdGrid(std::move(ts));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed fit file: ") + e.what());
  }
  return a;
}

json adme_to_json(const AdmeEstimate& adme, const std::vector<std::string>& covariates) {
  json rows = json::array();
  for (std::size_t i = 0; i < adme.t.size(); ++i)
    for (std::size_t c = 0; c < covariates.size(); ++c)
      rows.push_back({{"t", num(adme.t[i])},
                      {"covariate", covariates[c]},
                      {"adme", num(adme.value(static_cast<Index>(i), static_cast<Index>(c)))},
                      {"valid", adme.valid[i] != 0}});
  return {{"adme", std::move(rows)}};
}

json band_to_json(const AdmeBand& band, const std::vector<std::string>& covariates) {
  json rows = json::array();
  for (std::size_t i = 0; i < band.t.size(); ++i) {
    const auto r = static_cast<Index>(i);
    for (std::size_t c = 0; c < covariates.size(); ++c) {
      const auto cc = static_cast<Index>(c);
      rows.push_back({{"t", num(band.t[i])},
                      {"covariate", covariates[c]},
                      {"adme", num(band.adme(r, cc))},
                      {"pw_lo", num(band.pw_lo(r, cc))},
                      {"pw_hi", num(band.pw_hi(r, cc))},
                      {"sim_lo", num(band.sim_lo(r, cc))},
                      {"sim_hi", num(band.sim_hi(r, cc))},
                      {"valid", band.valid[i] != 0}});
    }
  }
  return {{"adme", std::move(rows)},
          {"c_hat", num(band.c_hat)},
          {"alpha", band.alpha},
          {"n_boot", band.n_boot},
          {"seed", band.seed}};
}

json ph_to_json(const PhFit& fit, const std::vector<std::string>& covariates) {
  json baseline = json::array();
  for (std::size_t i = 0; i < fit.baseline.times.size(); ++i)
    baseline.push_back(json::array({num(fit.baseline.times[i]), num(fit.baseline.jumps[i])}));
  return {{"beta", vec(fit.beta)},
          {"covariates", covariates},
          {"baseline", std::move(baseline)},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"grad_norm", num(fit.grad_norm)}};
}

json report_to_json(const mc::SimulationReport& report) {
  json metrics = json::array();
  for (const auto& m : report.metrics)
    metrics.push_back({{"estimator", mc::estimator_name(m.estimator)},
                       {"avg_abs_bias_cdf", num(m.avg_abs_bias_cdf)},
                       {"rmse_cdf", num(m.rmse_cdf)},
                       {"avg_abs_bias_adme", num(m.avg_abs_bias_adme)},
                       {"rmse_adme", num(m.rmse_adme)},
                       {"failures", m.failures},
                       {"used", m.used}});
  const auto c = mc::calibrate_censoring(report.spec.dgp_id, report.spec.censoring_pct);
  return {{"spec",
           {{"dgp", report.spec.dgp_id},
            {"n", report.spec.n},
            {"censoring", report.spec.censoring_pct},
            {"seed", report.spec.seed}}},
          {"censoring_params", {{"a", num(c.a)}, {"b", num(c.b)}}},
          {"reps", report.reps},
          {"grid_size", report.grid_size},
          {"eval_x", report.eval_x},
          {"flagged", report.flagged},
          {"metrics", std::move(metrics)}};
}

void write_band_csv(const std::filesystem::path& path, const AdmeBand& band,
                    const std::vector<std::string>& covariates) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  out << "t,covariate,adme,pw_lo,pw_hi,sim_lo,sim_hi\n";
  for (std::size_t i = 0; i < band.t.size(); ++i) {
    const auto r = static_cast<Index>(i);
    for (std::size_t c = 0; c < covariates.size(); ++c) {
      const auto cc = static_cast<Index>(c);
      out << band.t[i] << ',' << covariates[c] << ',' << band.adme(r, cc) << ','
          << band.pw_lo(r, cc) << ',' << band.pw_hi(r, cc) << ',' << band.sim_lo(r, cc) << ','
          << band.sim_hi(r, cc) << '\n';
    }
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

}  // namespace kmdr::io
