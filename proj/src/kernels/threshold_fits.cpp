#include "kmdr/kernels.hpp"

namespace kmdr::kernels {

std::vector<ThresholdFit> fit_thresholds(const WeightedDesign& design, LinkKind link,
                                         std::span<const double> thresholds,
                                         const FitOptions& opts, Exec exec) {
  const auto count = static_cast<Index>(thresholds.size());
  std::vector<ThresholdFit> fits(thresholds.size());
  if (exec == Exec::omp) {
#pragma omp parallel for schedule(dynamic, 1)
    for (Index j = 0; j < count; ++j)
      fits[static_cast<std::size_t>(j)] =
          fit_threshold(design, link, thresholds[static_cast<std::size_t>(j)], std::nullopt, opts);
  } else {
    for (Index j = 0; j < count; ++j)
      fits[static_cast<std::size_t>(j)] =
          fit_threshold(design, link, thresholds[static_cast<std::size_t>(j)], std::nullopt, opts);
  }
  return fits;
}

}  // namespace kmdr::kernels
