#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hankelab/open_set.hpp"
#include "hankelab/rational.hpp"

namespace hankelab {

/// Identifies D_{d,b,alpha}. The plain dyadic grid is d=1, b=0, alpha=0.
struct GridId {
  int d = 1;
  int b = 0;
  Rational alpha = 0;

  static GridId plain() { return {}; }
  /// D_{d,b,sign/(2^d+1)} with sign = +1 or -1.
  static GridId shifted(int d, int b, int sign);

  bool is_plain() const { return alpha == 0; }
  /// d >= 1, 0 <= b < d, alpha in {0, +-1/(2^d+1)}, and alpha = 0 only for d=1, b=0.
  bool valid() const;
  /// Log2 of the interval length at scale k.
  int exponent(std::int64_t k) const { return static_cast<int>(k * d + b); }

  friend bool operator==(const GridId& a, const GridId& b) {
    return a.d == b.d && a.b == b.b && a.alpha == b.alpha;
  }
  friend std::strong_ordering operator<=>(const GridId& a, const GridId& b);
};

/// Endpoints of 2^{kd+b}((0,1) + j + (-1)^k alpha).
Interval grid_interval_endpoints(const GridId& grid, std::int64_t k, std::int64_t j);

struct GridInterval {
  GridId grid;
  std::int64_t k = 0;
  std::int64_t j = 0;

  Interval interval() const { return grid_interval_endpoints(grid, k, j); }
  Rational lo() const { return interval().lo; }
  Rational hi() const { return interval().hi; }
  Rational length() const { return pow2(grid.exponent(k)); }
  Rational center() const { return interval().center(); }
  /// The interval of the same grid one scale up containing this one.
  GridInterval parent() const;

  friend bool operator==(const GridInterval& a, const GridInterval& b) {
    return a.grid == b.grid && a.k == b.k && a.j == b.j;
  }
  friend std::strong_ordering operator<=>(const GridInterval& a, const GridInterval& b);
};

/// The interval of `grid` at scale k that contains the point x.
GridInterval locate(const GridId& grid, std::int64_t k, const Rational& x);

/// If `iv` is an interval of `grid`, returns it as a GridInterval.
std::optional<GridInterval> as_grid_interval(const Interval& iv, const GridId& grid);

/// True iff every interval of `grid` of length between 2^{-depth} and 4
/// meeting [-2, 3) is the disjoint union of its next-finer children.
bool verify_grid_nesting(const GridId& grid, int depth);

/// The grids whose union is D_d.
std::vector<GridId> shifted_family(int d);

/// The three grids whose union is S (plain and D_{1,0,+-1/3}).
std::vector<GridId> s_grids();

struct DyadicRectangle {
  std::vector<GridInterval> sides;

  int n() const { return static_cast<int>(sides.size()); }
  Box box() const;
  Rational volume() const;

  friend bool operator==(const DyadicRectangle&, const DyadicRectangle&) = default;
  friend std::strong_ordering operator<=>(const DyadicRectangle& a, const DyadicRectangle& b);
};

/// Plain dyadic rectangle with sides [j_i 2^{-l_i}, (j_i+1) 2^{-l_i}).
DyadicRectangle plain_rect(std::span<const int> levels, std::span<const std::int64_t> offsets);

/// Finite set of rectangles (sorted, deduplicated) with its cached shadow.
class RectCollection {
 public:
  RectCollection() = default;
  RectCollection(int n, std::vector<DyadicRectangle> rects);

  int n() const { return n_; }
  const std::vector<DyadicRectangle>& rects() const { return rects_; }
  std::size_t size() const { return rects_.size(); }
  bool empty() const { return rects_.empty(); }
  const OpenSet& shadow() const { return shadow_; }

 private:
  int n_ = 0;
  std::vector<DyadicRectangle> rects_;
  OpenSet shadow_;
};

OpenSet shadow(int n, std::span<const DyadicRectangle> rects);
inline OpenSet shadow(const RectCollection& coll) { return coll.shadow(); }

/// Scales the sides listed in `coords` (0-based) by mu about their centers.
/// Throws std::invalid_argument if mu < 1.
Box dilate_rect(const DyadicRectangle& r, const Rational& mu, std::span<const int> coords);
Box dilate_box(const Box& box, const Rational& mu, std::span<const int> coords);

/// Some J in S with I <= J <= 4I (4I concentric).
GridInterval cover_in_S(const Interval& iv);

/// Line format: sides "grid:d,b,p/q;k;j" joined by 'x'.
std::string serialize_rect(const DyadicRectangle& r);
DyadicRectangle parse_rect(std::string_view line);
std::string serialize_collection(const RectCollection& coll);
/// Blank lines and lines starting with '#' are skipped.
RectCollection parse_collection(std::string_view text);

}  // namespace hankelab
