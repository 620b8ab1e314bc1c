#include <optional>
#include "hankelab/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace hankelab {

namespace {

void check_lambda(const Rational& lambda) {
  if (lambda <= 0 || lambda >= 1) throw std::invalid_argument("lambda must lie in (0, 1)");
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

}  // namespace

OpenSet superlevel_grid(const OpenSet& set, const GridId& grid, const Rational& lambda, const MaximalOptions& opt) {
  if (set.dim() != 1) throw std::invalid_argument("superlevel_grid expects a one-dimensional set");
  check_lambda(lambda);
  if (set.empty()) return set;
  const Rational cap = set.measure() / lambda;
  const std::vector<Rational> pts = set.breakpoints(0);
  // Scales with exponent in [finest, ceil_log2(cap) - 1].
  const std::int64_t k_lo = -floor_div(grid.b - opt.finest_exponent, grid.d);
  const std::int64_t k_hi = floor_div(ceil_log2(cap) - 1 - grid.b, grid.d);

  std::vector<Box> out = set.boxes();
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    std::set<std::int64_t> seen;
    for (const auto& p : pts) {
      // A qualifying interval not inside U has a boundary point of U strictly inside.
      GridInterval gi = locate(grid, k, p);
      Interval I = gi.interval();
      if (I.lo == p || !seen.insert(gi.j).second) continue;
      if (set.measure_within(Box{I}) > lambda * I.length()) out.push_back(Box{I});
    }
  }
  return OpenSet::from_boxes(1, out);
}

OpenSet superlevel_grid_family(const OpenSet& set, std::span<const GridId> grids, const Rational& lambda,
                               const MaximalOptions& opt) {
  OpenSet out = set;
  for (const auto& g : grids) out = out.unite(superlevel_grid(set, g, lambda, opt));
  return out;
}

OpenSet superlevel_directional(const OpenSet& set, int coord, const GridId& grid, const Rational& lambda,
                               const MaximalOptions& opt) {
  check_lambda(lambda);
  if (set.empty()) return set;
  return set.map_fibers(coord, [&](const OpenSet& fiber) { return superlevel_grid(fiber, grid, lambda, opt); });
}

OpenSet superlevel_directional_family(const OpenSet& set, int coord, std::span<const GridId> grids,
                                      const Rational& lambda, const MaximalOptions& opt) {
  check_lambda(lambda);
  if (set.empty()) return set;
  return set.map_fibers(coord,
                        [&](const OpenSet& fiber) { return superlevel_grid_family(fiber, grids, lambda, opt); });
}

Box PixelFunction::cell(std::span<const std::int64_t> index) const {
  Box b;
  for (int c = 0; c < n(); ++c) {
    Rational w = pow2(-depth[c]);
    Rational lo = origin[c] + Rational(index[c]) * w;
    b.push_back(Interval{lo, lo + w});
  }
  return b;
}

namespace {

// Pixel lattice at per-coordinate resolution 2^{-depth}, aligned so that
// every plain dyadic interval of level >= lmin meeting the support is a
// union of whole pixels inside the lattice.
struct Lattice {
  std::vector<int> depth;
  std::vector<int> lmin;
  std::vector<Rational> origin;
  std::vector<std::int64_t> m;

  int n() const { return static_cast<int>(depth.size()); }
  std::size_t cells() const {
    std::size_t t = 1;
    for (auto v : m) t *= static_cast<std::size_t>(v);
    return t;
  }
  std::vector<std::vector<Rational>> cuts() const {
    std::vector<std::vector<Rational>> out(n());
    for (int c = 0; c < n(); ++c) {
      Rational w = pow2(-depth[c]);
      for (std::int64_t i = 0; i <= m[c]; ++i) out[c].push_back(origin[c] + Rational(i) * w);
    }
    return out;
  }
  std::int64_t pixel(int c, const Rational& x) const {
    Rational v = (x - origin[c]) * pow2(depth[c]);
    if (boost::multiprecision::denominator(v) != 1) throw std::logic_error("point not on the pixel lattice");
    return floor_to_int(v);
  }
};

constexpr std::size_t kMaxCells = std::size_t{1} << 25;
constexpr double kMaxCandidates = 6e8;

Lattice make_lattice(const std::vector<int>& depth, std::vector<int> lmin, const std::vector<Rational>& lo,
                     const std::vector<Rational>& hi) {
  Lattice L;
  L.depth = depth;
  const int n = static_cast<int>(depth.size());
  for (int c = 0; c < n; ++c) {
    lmin[c] = std::min(lmin[c], depth[c]);
    Rational S = pow2(-lmin[c]);
    Rational a = Rational(floor_to_int(lo[c] / S)) * S;
    Rational b = Rational(ceil_to_int(hi[c] / S)) * S;
    L.origin.push_back(a);
    L.m.push_back(floor_to_int((b - a) * pow2(depth[c])));
  }
  L.lmin = lmin;
  double cells = 1;
  for (auto v : L.m) cells *= static_cast<double>(v);
  if (cells > static_cast<double>(kMaxCells)) throw std::invalid_argument("strong maximal lattice too large");
  return L;
}

// Marks every pixel covered by a plain dyadic rectangle R (levels lmin..depth
// per coordinate) for which qualifies(sum of raster over R, #pixels of R).
template <class T, class Q>
std::vector<char> strong_cover(const Lattice& L, const std::vector<T>& raster, Q qualifies) {
  const int n = L.n();
  std::vector<std::size_t> pstride(n);
  std::size_t psize = 1;
  for (int c = n; c-- > 0;) {
    pstride[c] = psize;
    psize *= static_cast<std::size_t>(L.m[c] + 1);
  }
  std::vector<std::size_t> rstride(n);
  {
    std::size_t s = 1;
    for (int c = n; c-- > 0;) {
      rstride[c] = s;
      s *= static_cast<std::size_t>(L.m[c]);
    }
  }

  // Prefix sums with a zero border.
  std::vector<T> P(psize, T{});
  std::vector<std::int64_t> idx(n, 0);
  for (std::size_t r = 0; r < raster.size(); ++r) {
    std::size_t rem = r, p = 0;
    for (int c = 0; c < n; ++c) {
      std::int64_t i = static_cast<std::int64_t>(rem / rstride[c]);
      rem %= rstride[c];
      p += static_cast<std::size_t>(i + 1) * pstride[c];
    }
    P[p] = raster[r];
  }
  for (int c = 0; c < n; ++c)
    for (std::size_t p = 0; p < psize; ++p)
      if ((p / pstride[c]) % static_cast<std::size_t>(L.m[c] + 1) != 0) P[p] += P[p - pstride[c]];

  struct Cand {
    std::int64_t start, width;
  };
  std::vector<std::vector<Cand>> cand(n);
  double combos = 1;
  for (int c = 0; c < n; ++c) {
    for (int l = L.lmin[c]; l <= L.depth[c]; ++l) {
      std::int64_t w = std::int64_t{1} << (L.depth[c] - l);
      for (std::int64_t a = 0; a < L.m[c]; a += w) cand[c].push_back({a, w});
    }
    combos *= static_cast<double>(cand[c].size());
  }
  if (combos > kMaxCandidates) throw std::invalid_argument("strong maximal candidate count too large");

  std::vector<std::int32_t> diff(psize, 0);
  std::vector<std::size_t> pos(n, 0);
  const unsigned corners = 1u << n;
  for (;;) {
    T sum{};
    std::int64_t pixels = 1;
    for (int c = 0; c < n; ++c) pixels *= cand[c][pos[c]].width;
    for (unsigned mask = 0; mask < corners; ++mask) {
      std::size_t p = 0;
      int ones = 0;
      for (int c = 0; c < n; ++c) {
        const Cand& cd = cand[c][pos[c]];
        bool hi = (mask >> c) & 1u;
        ones += hi;
        p += static_cast<std::size_t>(hi ? cd.start + cd.width : cd.start) * pstride[c];
      }
      if ((n - ones) % 2 == 0)
        sum += P[p];
      else
        sum -= P[p];
    }
    if (qualifies(sum, pixels)) {
      for (unsigned mask = 0; mask < corners; ++mask) {
        std::size_t p = 0;
        int ones = 0;
        for (int c = 0; c < n; ++c) {
          const Cand& cd = cand[c][pos[c]];
          bool hi = (mask >> c) & 1u;
          ones += hi;
          p += static_cast<std::size_t>(hi ? cd.start + cd.width : cd.start) * pstride[c];
        }
        diff[p] += (ones % 2 == 0) ? 1 : -1;
      }
    }
    int c = n - 1;
    while (c >= 0 && ++pos[c] == cand[c].size()) pos[c--] = 0;
    if (c < 0) break;
  }

  for (int c = 0; c < n; ++c)
    for (std::size_t p = 0; p < psize; ++p)
      if ((p / pstride[c]) % static_cast<std::size_t>(L.m[c] + 1) != 0) diff[p] += diff[p - pstride[c]];

  std::vector<char> covered(L.cells(), 0);
  for (std::size_t r = 0; r < covered.size(); ++r) {
    std::size_t rem = r, p = 0;
    for (int c = 0; c < n; ++c) {
      std::int64_t i = static_cast<std::int64_t>(rem / rstride[c]);
      rem %= rstride[c];
      p += static_cast<std::size_t>(i) * pstride[c];
    }
    covered[r] = diff[p] > 0;
  }
  return covered;
}

// Row-major fill of the pixels of `box` with `value`.
template <class T>
void paint(const Lattice& L, const Box& box, T value, std::vector<T>& raster) {
  const int n = L.n();
  std::vector<std::int64_t> lo(n), hi(n), i(n);
  for (int c = 0; c < n; ++c) {
    lo[c] = L.pixel(c, box[c].lo);
    hi[c] = L.pixel(c, box[c].hi);
    if (hi[c] <= lo[c]) return;
  }
  i = lo;
  for (;;) {
    std::size_t r = 0;
    for (int c = 0; c < n; ++c) r = r * static_cast<std::size_t>(L.m[c]) + static_cast<std::size_t>(i[c]);
    raster[r] = value;
    int c = n - 1;
    while (c >= 0 && ++i[c] == hi[c]) i[c] = lo[c], --c;
    if (c < 0) break;
  }
}

}  // namespace

OpenSet superlevel_strong(const OpenSet& set, const Rational& lambda) {
  check_lambda(lambda);
  if (set.empty()) return set;
  const int n = set.dim();
  std::vector<int> depth(n), lmin(n);
  std::vector<Rational> lo(n), hi(n);
  for (int c = 0; c < n; ++c) {
    auto pts = set.breakpoints(c);
    int D = 0;
    for (const auto& p : pts) D = std::max(D, dyadic_depth(p));
    depth[c] = D;
    lo[c] = pts.front();
    hi[c] = pts.back();
    // Coarsest level l with 2^{-l} < |proj_c U| / lambda.
    lmin[c] = 1 - ceil_log2(set.project(c).measure() / lambda);
  }
  Lattice L = make_lattice(depth, lmin, lo, hi);
  std::vector<std::int64_t> raster(L.cells(), 0);
  for (const auto& b : set.boxes()) paint<std::int64_t>(L, b, 1, raster);

  const BigInt num = boost::multiprecision::numerator(lambda);
  const BigInt den = boost::multiprecision::denominator(lambda);
  std::vector<char> covered;
  if (boost::multiprecision::msb(den) < 62) {
    const __int128 nu = num.convert_to<std::int64_t>(), de = den.convert_to<std::int64_t>();
    covered = strong_cover(L, raster, [&](std::int64_t sum, std::int64_t px) {
      return static_cast<__int128>(sum) * de > nu * static_cast<__int128>(px);
    });
  } else {
    covered = strong_cover(L, raster, [&](std::int64_t sum, std::int64_t px) {
      return BigInt(sum) * den > num * BigInt(px);
    });
  }
  return OpenSet::from_cells(L.cuts(), covered).unite(set);
}

OpenSet superlevel_strong_function(const PixelFunction& f, double threshold, std::optional<int> coarsest_level) {
  if (!(threshold > 0)) throw std::invalid_argument("threshold must be positive");
  const int n = f.n();
  if (static_cast<int>(f.origin.size()) != n || static_cast<int>(f.extent.size()) != n)
    throw std::invalid_argument("pixel function shape mismatch");
  std::size_t total = 1;
  for (auto e : f.extent) total *= static_cast<std::size_t>(e);
  if (f.values.size() != total) throw std::invalid_argument("pixel function size mismatch");

  // Support bounding box in pixel indices.
  std::vector<std::int64_t> smin(n, std::numeric_limits<std::int64_t>::max()), smax(n, -1);
  double vmax = 0;
  std::vector<std::int64_t> idx(n, 0);
  for (std::size_t r = 0; r < total; ++r) {
    std::size_t rem = r;
    for (int c = n; c-- > 0;) {
      idx[c] = static_cast<std::int64_t>(rem % static_cast<std::size_t>(f.extent[c]));
      rem /= static_cast<std::size_t>(f.extent[c]);
    }
    double v = std::abs(f.values[r]);
    if (v == 0) continue;
    vmax = std::max(vmax, v);
    for (int c = 0; c < n; ++c) {
      smin[c] = std::min(smin[c], idx[c]);
      smax[c] = std::max(smax[c], idx[c]);
    }
  }
  if (vmax == 0) return OpenSet(n);

  std::vector<int> lmin(n);
  std::vector<Rational> lo(n), hi(n);
  for (int c = 0; c < n; ++c) {
    Rational w = pow2(-f.depth[c]);
    lo[c] = f.origin[c] + Rational(smin[c]) * w;
    hi[c] = f.origin[c] + Rational(smax[c] + 1) * w;
    // |R_c| must be below vmax * |proj_c supp| / threshold; one extra coarse
    // level absorbs floating-point rounding.
    double cap = vmax * to_double(hi[c] - lo[c]) / threshold;
    lmin[c] = static_cast<int>(std::floor(-std::log2(cap)));
    if (coarsest_level) lmin[c] = std::max(lmin[c], std::min(*coarsest_level, f.depth[c]));
  }
  Lattice L = make_lattice(f.depth, lmin, lo, hi);
  std::vector<double> raster(L.cells(), 0.0);
  std::vector<std::int64_t> shift(n);
  for (int c = 0; c < n; ++c) shift[c] = L.pixel(c, f.origin[c]);
  for (std::size_t r = 0; r < total; ++r) {
    if (f.values[r] == 0) continue;
    std::size_t rem = r;
    for (int c = n; c-- > 0;) {
      idx[c] = static_cast<std::int64_t>(rem % static_cast<std::size_t>(f.extent[c]));
      rem /= static_cast<std::size_t>(f.extent[c]);
    }
    std::size_t q = 0;
    bool inside = true;
    for (int c = 0; c < n; ++c) {
      std::int64_t i = idx[c] + shift[c];
      inside = inside && i >= 0 && i < L.m[c];
      q = q * static_cast<std::size_t>(L.m[c]) + static_cast<std::size_t>(i);
    }
    if (inside) raster[q] = std::abs(f.values[r]);
  }
  std::vector<char> covered =
      strong_cover(L, raster, [&](double sum, std::int64_t px) { return sum > threshold * static_cast<double>(px); });
  return OpenSet::from_cells(L.cuts(), covered);
}

}  // namespace hankelab
