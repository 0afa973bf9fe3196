#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "kmdr/cox_baseline.hpp"
#include "kmdr/inference.hpp"
#include "kmdr/kmdr_fit.hpp"
#include "kmdr/mc_harness.hpp"
#include "kmdr/sample_data.hpp"

namespace kmdr::io {

using nlohmann::json;

// A fitted path together with the columns it was estimated from.
struct FitArtifact {
  DrCoefficientPath path;
  CsvColumns columns;
};

json path_to_json(const FitArtifact& fit);
FitArtifact path_from_json(const json& j);

json band_to_json(const AdmeBand& band, const std::vector<std::string>& covariates);
json adme_to_json(const AdmeEstimate& adme, const std::vector<std::string>& covariates);
json ph_to_json(const PhFit& fit, const std::vector<std::string>& covariates);
json report_to_json(const mc::SimulationReport& report);

// t,covariate,adme,pw_lo,pw_hi,sim_lo,sim_hi; one row per threshold and covariate.
void write_band_csv(const std::filesystem::path& path, const AdmeBand& band,
                    const std::vector<std::string>& covariates);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace kmdr::io
