#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hankelab/dyadic.hpp"
#include "hankelab/open_set.hpp"

namespace hankelab {

struct MaximalOptions {
  /// Grid intervals shorter than 2^finest_exponent are not scanned. Only
  /// matters for shifted grids: for the plain grid and dyadic sets the finer
  /// intervals never reach outside the set.
  int finest_exponent = -12;
};

/// U together with every interval I of `grid` with |I ∩ U| > lambda |I|.
/// Qualifying intervals have |I| < |U| / lambda, which bounds the scan.
OpenSet superlevel_grid(const OpenSet& set, const GridId& grid, const Rational& lambda,
                        const MaximalOptions& opt = {});

/// Union of superlevel_grid over several grids (e.g. the grids of D_d).
OpenSet superlevel_grid_family(const OpenSet& set, std::span<const GridId> grids, const Rational& lambda,
                               const MaximalOptions& opt = {});

/// superlevel_grid applied to every fiber along coordinate `coord` (0-based).
OpenSet superlevel_directional(const OpenSet& set, int coord, const GridId& grid, const Rational& lambda,
                               const MaximalOptions& opt = {});
OpenSet superlevel_directional_family(const OpenSet& set, int coord, std::span<const GridId> grids,
                                      const Rational& lambda, const MaximalOptions& opt = {});

/// Union of the plain dyadic rectangles R with |R ∩ U| > lambda |R|. U must
/// have dyadic endpoints; rectangles finer than U's own resolution are
/// dominated by coarser ones, so the result is exact.
OpenSet superlevel_strong(const OpenSet& set, const Rational& lambda);

/// A real function constant on the cells of a dyadic pixel lattice: cell
/// (i_0, ..., i_{n-1}) is the box with side c of length 2^{-depth[c]} starting
/// at origin[c] + i_c 2^{-depth[c]}. Values are row-major, coordinate 0
/// slowest, and the function vanishes off the lattice.
struct PixelFunction {
  std::vector<int> depth;
  std::vector<Rational> origin;
  std::vector<std::int64_t> extent;
  std::vector<double> values;

  int n() const { return static_cast<int>(depth.size()); }
  Box cell(std::span<const std::int64_t> index) const;
};

/// Union of the plain dyadic rectangles R with (1/|R|) ∫_R |f| > threshold.
/// `coarsest_level` skips rectangles with a side longer than 2^{-level}; with
/// level 0 and f supported in the unit cube this changes nothing inside the
/// cube, since a coarser dyadic rectangle averages over at least twice the area.
OpenSet superlevel_strong_function(const PixelFunction& f, double threshold,
                                   std::optional<int> coarsest_level = std::nullopt);

}  // namespace hankelab
