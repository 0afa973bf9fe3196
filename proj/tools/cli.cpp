#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json_io.hpp"
#include "kmdr/cox_baseline.hpp"
#include "kmdr/error.hpp"
#include "kmdr/inference.hpp"
#include "kmdr/kmdr_fit.hpp"
#include "kmdr/mc_harness.hpp"
#include "kmdr/parallel.hpp"

namespace kmdr::cli {

namespace {

struct ColumnFlags {
  std::string duration = "y";
  std::string event = "delta";
  std::vector<std::string> covariates;
};

void add_column_flags(CLI::App* cmd, ColumnFlags& c) {
  cmd->add_option("--duration", c.duration, "duration column")->capture_default_str();
  cmd->add_option("--event", c.event, "event indicator column (1 = observed)")
      ->capture_default_str();
  cmd->add_option("--covariates", c.covariates,
                  "comma-separated covariate columns; default: every other column")
      ->delimiter(',');
}

CsvColumns resolve_columns(const std::string& data, const ColumnFlags& c, bool explicit_covs) {
  CsvColumns cols{c.duration, c.event, c.covariates};
  if (!explicit_covs) {
    for (const auto& name : csv_header(data))
      if (name != c.duration && name != c.event) cols.covariates.push_back(name);
  }
  return cols;
}

double parse_double(const std::string& s, const char* what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ValidationError(std::string("cannot parse ") + what + " '" + s + "'");
  return v;
}

QuantileGridSpec parse_quantile_grid(const std::string& s) {
  const auto a = s.find(':');
  const auto b = a == std::string::npos ? a : s.find(':', a + 1);
  if (b == std::string::npos) throw ValidationError("--grid-quantiles expects lo:hi:points");
  QuantileGridSpec q;
  q.lo = parse_double(s.substr(0, a), "grid quantile");
  q.hi = parse_double(s.substr(a + 1, b - a - 1), "grid quantile");
  const double p = parse_double(s.substr(b + 1), "grid size");
  if (p != static_cast<int>(p)) throw ValidationError("grid size must be an integer");
  q.points = static_cast<int>(p);
  return q;
}

void warn_fits(const DrCoefficientPath& path, std::ostream& err) {
  std::size_t degenerate = 0, failed = 0;
  for (const auto& f : path.fits) {
    if (f.diag.status == FitStatus::degenerate) ++degenerate;
    if (f.diag.status == FitStatus::not_converged) ++failed;
  }
  if (failed)
    err << "warning: " << failed << " of " << path.fits.size() << " thresholds did not converge\n";
  if (degenerate)
    err << "warning: " << degenerate << " thresholds have weighted event frequency 0 or 1; skipped\n";
}

struct FitArgs {
  std::string data, out, link = "cloglog", quantiles;
  std::vector<double> grid;
  bool warm_start = false;
  ColumnFlags cols;
};

int run_fit(const FitArgs& a, bool explicit_covs, std::ostream& err) {
  const CsvColumns cols = resolve_columns(a.data, a.cols, explicit_covs);
  const LinkKind link = parse_link(a.link);
  const CensoredSample sample = load_csv(a.data, cols);
  const auto km = km_weights(order_sample(sample));
  GridSpec spec = QuantileGridSpec{};
  if (!a.grid.empty())
    spec = ExplicitGridSpec{a.grid};
  else if (!a.quantiles.empty())
    spec = parse_quantile_grid(a.quantiles);
  const ThresholdGrid grid = build_grid(km, spec);
  if (grid.size() == 0) throw NumericalError("degenerate grid");
  if (const auto* e = std::get_if<ExplicitGridSpec>(&spec); e && grid.size() < e->values.size())
    err << "warning: " << e->values.size() - grid.size()
        << " grid points dropped by the 1%/99% trimming rule\n";
  io::FitArtifact artifact{
      fit_path(km, link, grid, a.warm_start ? PathMode::warm_start : PathMode::independent),
      cols};
  warn_fits(artifact.path, err);
  io::write_json(a.out, io::path_to_json(artifact));
  return kOk;
}

struct AdmeArgs {
  std::string fit, data, out, plot_csv;
  double alpha = 0.10;
  Index n_boot = 0;
  std::uint64_t seed = 0;
  bool fisher = false;
};

int run_adme(const AdmeArgs& a, bool bootstrap, std::ostream& err) {
  const io::FitArtifact artifact = io::path_from_json(io::read_json(a.fit));
  const CensoredSample sample = load_csv(a.data, artifact.columns);
  const auto& path = artifact.path;
  if (path.k() != sample.k()) throw ValidationError("fit and data disagree on the covariates");
  if (path.k() == 0) throw ValidationError("ADME needs at least one covariate");
  const AdmeEstimate adme = estimate_adme(path, sample);
  warn_fits(path, err);
  const auto& names = artifact.columns.covariates;
  if (!bootstrap) {
    io::write_json(a.out, io::adme_to_json(adme, names));
    return kOk;
  }
  const auto km = km_weights(order_sample(sample));
  const InfluenceSet infl =
      compute_influence(km, path, a.fisher ? SigmaChoice::fisher : SigmaChoice::hessian);
  for (const auto& w : infl.warnings) err << "warning: " << w << '\n';
  const AdmeBand band = bootstrap_bands(adme, infl.zeta_adme, {a.alpha, a.n_boot, a.seed});
  for (const auto& w : band.warnings) err << "warning: " << w << '\n';
  io::write_json(a.out, io::band_to_json(band, names));
  if (!a.plot_csv.empty()) io::write_band_csv(a.plot_csv, band, names);
  return kOk;
}

int run_ph(const std::string& data, const std::string& out, const ColumnFlags& c,
           bool explicit_covs, std::ostream& err) {
  const CsvColumns cols = resolve_columns(data, c, explicit_covs);
  const CensoredSample sample = load_csv(data, cols);
  const PhFit fit = fit_ph(sample);
  io::write_json(out, io::ph_to_json(fit, cols.covariates));
  if (!fit.converged) {
    err << "error: Cox partial likelihood did not converge\n";
    return kNumerical;
  }
  return kOk;
}

struct SimulateArgs {
  mc::DgpSpec spec;
  Index reps = 0;
  std::vector<std::string> estimators{"dr_cll", "dr_l", "ph"};
  std::string out;
};

int run_simulate(const SimulateArgs& a, std::ostream& err) {
  std::vector<mc::Estimator> est;
  for (const auto& e : a.estimators) est.push_back(mc::parse_estimator(e));
  const auto report = mc::run_experiment(a.spec, a.reps, est);
  for (const auto& m : report.metrics)
    if (m.failures > 0)
      err << "warning: " << mc::estimator_name(m.estimator) << " failed in " << m.failures
          << " of " << report.reps << " replications\n";
  if (report.flagged) err << "warning: failure rate above 5%; report flagged\n";
  io::write_json(a.out, io::report_to_json(report));
  return kOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kaplan-Meier distribution regression", "kmdr"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: KMDR_THREADS or all cores)");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit the coefficient path on a threshold grid");
  fit_cmd->add_option("--data", fit.data, "input CSV")->required();
  fit_cmd->add_option("--out", fit.out, "output JSON")->required();
  fit_cmd->add_option("--link", fit.link, "logit|cloglog|probit|exponential")
      ->capture_default_str();
  auto* gq = fit_cmd->add_option("--grid-quantiles", fit.quantiles,
                                 "lo:hi:points between KM quantiles (default 0.1:0.9:100)");
  auto* gl = fit_cmd->add_option("--grid", fit.grid, "explicit thresholds")->delimiter(',');
  gq->excludes(gl);
  fit_cmd->add_flag("--warm-start", fit.warm_start, "fit thresholds sequentially, warm-started");
  add_column_flags(fit_cmd, fit.cols);

  AdmeArgs adme;
  auto* adme_cmd = app.add_subcommand("adme", "ADME path with bootstrap bands");
  adme_cmd->add_option("--fit", adme.fit, "fit JSON")->required();
  adme_cmd->add_option("--data", adme.data, "the CSV the fit was computed on")->required();
  adme_cmd->add_option("--out", adme.out, "output JSON")->required();
  adme_cmd->add_option("--alpha", adme.alpha, "band level is 1 - alpha")->capture_default_str();
  auto* boot = adme_cmd->add_option("--bootstrap", adme.n_boot, "multiplier bootstrap draws");
  auto* seed = adme_cmd->add_option("--seed", adme.seed, "bootstrap seed");
  auto* plot = adme_cmd->add_option("--plot-csv", adme.plot_csv, "also write the bands as CSV");
  adme_cmd->add_flag("--fisher", adme.fisher, "use the Fisher information in the influence");

  std::string ph_data, ph_out;
  ColumnFlags ph_cols;
  auto* ph_cmd = app.add_subcommand("ph", "Cox proportional hazards with Breslow baseline");
  ph_cmd->add_option("--data", ph_data, "input CSV")->required();
  ph_cmd->add_option("--out", ph_out, "output JSON")->required();
  add_column_flags(ph_cmd, ph_cols);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo comparison on a simulation design");
  sim_cmd->add_option("--dgp", sim.spec.dgp_id, "design 1, 2 or 3")->required();
  sim_cmd->add_option("--n", sim.spec.n, "sample size")->required();
  sim_cmd->add_option("--censoring", sim.spec.censoring_pct, "0, 10 or 30 percent")
      ->capture_default_str();
  sim_cmd->add_option("--reps", sim.reps, "replications")->required();
  sim_cmd->add_option("--estimators", sim.estimators, "dr_cll,dr_l,ph")->delimiter(',');
  sim_cmd->add_option("--seed", sim.spec.seed, "base seed")->required();
  sim_cmd->add_option("--out", sim.out, "report JSON")->required();

  for (auto* cmd : {fit_cmd, adme_cmd, ph_cmd, sim_cmd})
    cmd->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kValidation;
  }

  if (threads < 0) {
    err << "error: --threads must be positive\n";
    return kValidation;
  }
  parallel::set_threads(threads > 0 ? threads : parallel::threads_from_env());

  try {
    if (fit_cmd->parsed()) return run_fit(fit, fit_cmd->count("--covariates") > 0, err);
    if (adme_cmd->parsed()) {
      const bool bootstrap = boot->count() > 0;
      if (bootstrap && seed->count() == 0) {
        err << "error: --seed is required with --bootstrap\n";
        return kValidation;
      }
      if (!bootstrap && plot->count() > 0) {
        err << "error: --plot-csv needs --bootstrap\n";
        return kValidation;
      }
      return run_adme(adme, bootstrap, err);
    }
    if (ph_cmd->parsed()) return run_ph(ph_data, ph_out, ph_cols, ph_cmd->count("--covariates") > 0, err);
    return run_simulate(sim, err);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace kmdr::cli
