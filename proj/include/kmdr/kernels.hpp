#pragma once

// Data-parallel kernels. Each has an OpenMP path and a serial reference
// path; both produce bitwise identical results for any thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "kmdr/kmdr_fit.hpp"

namespace kmdr::kernels {

enum class Exec { serial, omp };

// Independent (zero-start) fits at every threshold.
std::vector<ThresholdFit> fit_thresholds(const WeightedDesign& design, LinkKind link,
                                         std::span<const double> thresholds,
                                         const FitOptions& opts, Exec exec);

struct MultiplierDraws {
  Index draws = 0;
  Index cells = 0;
  std::vector<double> sup;    // per draw: max over included cells of |R*|
  RowMatrix abs_r;            // draws x cells, |R*_b(cell)|
};

// R*_b(c) = n^{-1/2} sum_i V_{b,i} zeta(i, c) with Rademacher V drawn from the
// counter-based stream (seed, draw b). Columns with include[c] == 0 are
// skipped in the sup.
MultiplierDraws multiplier_draws(const RowMatrix& zeta, std::span<const std::uint8_t> include,
                                 Index n_boot, std::uint64_t seed, Exec exec);

// Runs body(rep) for rep in [0, reps); each call must write only its own slot.
template <class Body>
void for_each_replication(Index reps, Body&& body, Exec exec) {
  if (exec == Exec::omp) {
#pragma omp parallel for schedule(dynamic, 1)
    for (Index r = 0; r < reps; ++r) body(r);
  } else {
    for (Index r = 0; r < reps; ++r) body(r);
  }
}

}  // namespace kmdr::kernels
