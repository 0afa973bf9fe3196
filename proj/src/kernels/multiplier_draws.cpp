#include <cmath>

#include "kmdr/error.hpp"
#include "kmdr/kernels.hpp"
#include "kmdr/rng.hpp"

namespace kmdr::kernels {

namespace {

// One bootstrap draw: fills out with |R*_b| and returns the sup over included cells.
double one_draw(const RowMatrix& zeta, std::span<const std::uint8_t> include,
                std::uint64_t seed, Index draw, Eigen::Ref<Eigen::RowVectorXd> out,
                Eigen::RowVectorXd& acc) {
  const Index n = zeta.rows();
  CounterRng rng(seed, static_cast<std::uint64_t>(draw));
  acc.setZero();
  std::uint32_t bits = 0;
  for (Index i = 0; i < n; ++i) {
    if (i % 32 == 0) bits = rng.next_u32();
    if (bits & 1u)
      acc += zeta.row(i);
    else
      acc -= zeta.row(i);
    bits >>= 1;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  double sup = 0.0;
  for (Index c = 0; c < zeta.cols(); ++c) {
    out(c) = std::abs(acc(c)) * scale;
    if (include[static_cast<std::size_t>(c)] && out(c) > sup) sup = out(c);
  }
  return sup;
}

}  // namespace

MultiplierDraws multiplier_draws(const RowMatrix& zeta, std::span<const std::uint8_t> include,
                                 Index n_boot, std::uint64_t seed, Exec exec) {
  if (static_cast<Index>(include.size()) != zeta.cols())
    throw ValidationError("include mask does not match the influence columns");
  if (zeta.rows() == 0) throw ValidationError("empty influence matrix");
  MultiplierDraws out;
  out.draws = n_boot;
  out.cells = zeta.cols();
  out.sup.assign(static_cast<std::size_t>(n_boot), 0.0);
  out.abs_r.resize(n_boot, zeta.cols());
  if (exec == Exec::omp) {
#pragma omp parallel
    {
      Eigen::RowVectorXd acc(zeta.cols());
#pragma omp for schedule(static)
      for (Index b = 0; b < n_boot; ++b)
        out.sup[static_cast<std::size_t>(b)] =
            one_draw(zeta, include, seed, b, out.abs_r.row(b), acc);
    }
  } else {
    Eigen::RowVectorXd acc(zeta.cols());
    for (Index b = 0; b < n_boot; ++b)
      out.sup[static_cast<std::size_t>(b)] =
          one_draw(zeta, include, seed, b, out.abs_r.row(b), acc);
  }
  return out;
}

}  // namespace kmdr::kernels
