#include "hankelab/dyadic.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace hankelab {

namespace {

// (-1)^k alpha
Rational signed_alpha(const GridId& g, std::int64_t k) { return (k % 2 == 0) ? g.alpha : Rational(-g.alpha); }

std::strong_ordering cmp_rational(const Rational& a, const Rational& b) {
  if (a < b) return std::strong_ordering::less;
  if (b < a) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace

GridId GridId::shifted(int d, int b, int sign) {
  GridId g;
  g.d = d;
  g.b = b;
  g.alpha = Rational(sign > 0 ? 1 : -1, BigInt(BigInt(1) << d) + 1);
  return g;
}

bool GridId::valid() const {
  if (d < 1 || b < 0 || b >= d) return false;
  if (alpha == 0) return d == 1 && b == 0;
  Rational delta(1, BigInt(BigInt(1) << d) + 1);
  return alpha == delta || alpha == -delta;
}

std::strong_ordering operator<=>(const GridId& a, const GridId& b) {
  if (auto c = a.d <=> b.d; c != 0) return c;
  if (auto c = a.b <=> b.b; c != 0) return c;
  return cmp_rational(a.alpha, b.alpha);
}

Interval grid_interval_endpoints(const GridId& grid, std::int64_t k, std::int64_t j) {
  Rational s = pow2(grid.exponent(k));
  Rational lo = s * (Rational(j) + signed_alpha(grid, k));
  return Interval{lo, lo + s};
}

std::strong_ordering operator<=>(const GridInterval& a, const GridInterval& b) {
  if (auto c = a.grid <=> b.grid; c != 0) return c;
  if (auto c = a.k <=> b.k; c != 0) return c;
  return a.j <=> b.j;
}

GridInterval GridInterval::parent() const { return locate(grid, k + 1, center()); }

GridInterval locate(const GridId& grid, std::int64_t k, const Rational& x) {
  Rational s = pow2(grid.exponent(k));
  return GridInterval{grid, k, floor_to_int(x / s - signed_alpha(grid, k))};
}

std::optional<GridInterval> as_grid_interval(const Interval& iv, const GridId& grid) {
  if (iv.empty()) return std::nullopt;
  Rational len = iv.length();
  int e;
  try {
    e = exact_log2(len);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
  int shifted = e - grid.b;
  if (((shifted % grid.d) + grid.d) % grid.d != 0) return std::nullopt;
  std::int64_t k = (shifted - (((shifted % grid.d) + grid.d) % grid.d)) / grid.d;
  Rational jq = iv.lo / len - signed_alpha(grid, k);
  if (boost::multiprecision::denominator(jq) != 1) return std::nullopt;
  return GridInterval{grid, k, floor_to_int(jq)};
}

bool verify_grid_nesting(const GridId& grid, int depth) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  auto floor_div = [](std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); };
  std::int64_t k_min = -floor_div(depth + grid.b, grid.d);  // ceil((-depth - b)/d)
  std::int64_t k_max = floor_div(2 - grid.b, grid.d);
  for (std::int64_t k = k_min; k <= k_max; ++k) {
    Rational s = pow2(grid.exponent(k));
    Rational sa = signed_alpha(grid, k);
    std::int64_t j_lo = floor_to_int(Rational(-2) / s - sa) - 1;
    std::int64_t j_hi = ceil_to_int(Rational(3) / s - sa) + 1;
    for (std::int64_t j = j_lo; j <= j_hi; ++j) {
      Interval p = grid_interval_endpoints(grid, k, j);
      // Children have equal length 2^{-d}|P| and tile the line, so P is a union
      // of children iff a child starts at P.lo.
      GridInterval first = locate(grid, k - 1, p.lo);
      if (first.lo() != p.lo) return false;
    }
  }
  return true;
}

std::vector<GridId> shifted_family(int d) {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  std::vector<GridId> out;
  for (int b = 0; b < d; ++b)
    for (int sign : {1, -1}) out.push_back(GridId::shifted(d, b, sign));
  return out;
}

std::vector<GridId> s_grids() { return {GridId::plain(), GridId::shifted(1, 0, 1), GridId::shifted(1, 0, -1)}; }

Box DyadicRectangle::box() const {
  Box b;
  b.reserve(sides.size());
  for (const auto& s : sides) b.push_back(s.interval());
  return b;
}

Rational DyadicRectangle::volume() const {
  Rational v = 1;
  for (const auto& s : sides) v *= s.length();
  return v;
}

std::strong_ordering operator<=>(const DyadicRectangle& a, const DyadicRectangle& b) {
  return std::lexicographical_compare_three_way(a.sides.begin(), a.sides.end(), b.sides.begin(), b.sides.end());
}

DyadicRectangle plain_rect(std::span<const int> levels, std::span<const std::int64_t> offsets) {
  if (levels.size() != offsets.size()) throw std::invalid_argument("levels/offsets size mismatch");
  DyadicRectangle r;
  for (std::size_t i = 0; i < levels.size(); ++i) r.sides.push_back(GridInterval{GridId::plain(), -levels[i], offsets[i]});
  return r;
}

OpenSet shadow(int n, std::span<const DyadicRectangle> rects) {
  std::vector<Box> boxes;
  boxes.reserve(rects.size());
  for (const auto& r : rects) {
    if (r.n() != n) throw std::invalid_argument("rectangle dimension mismatch");
    boxes.push_back(r.box());
  }
  return OpenSet::from_boxes(n, boxes);
}

RectCollection::RectCollection(int n, std::vector<DyadicRectangle> rects) : n_(n), rects_(std::move(rects)) {
  std::sort(rects_.begin(), rects_.end());
  rects_.erase(std::unique(rects_.begin(), rects_.end()), rects_.end());
  shadow_ = hankelab::shadow(n_, rects_);
}

Box dilate_box(const Box& box, const Rational& mu, std::span<const int> coords) {
  if (mu < 1) throw std::invalid_argument("dilation factor must be >= 1");
  Box out = box;
  for (int c : coords) {
    if (c < 0 || c >= static_cast<int>(box.size())) throw std::invalid_argument("dilation coordinate out of range");
    Rational center = box[c].center();
    Rational half = mu * box[c].length() / 2;
    out[c] = Interval{center - half, center + half};
  }
  return out;
}

Box dilate_rect(const DyadicRectangle& r, const Rational& mu, std::span<const int> coords) {
  return dilate_box(r.box(), mu, coords);
}

GridInterval cover_in_S(const Interval& iv) {
  if (iv.empty()) throw std::invalid_argument("cover_in_S needs a nonempty interval");
  const Rational len = iv.length();
  const Interval four{iv.center() - 2 * len, iv.center() + 2 * len};
  const GridId plain = GridId::plain();
  for (const auto& g : s_grids())
    if (auto gi = as_grid_interval(iv, g)) return *gi;

  // J': a longest dyadic interval inside 4I holding at least half of I.
  std::optional<GridInterval> jprime;
  for (int e = floor_log2(4 * len); e >= ceil_log2(len / 2) && !jprime; --e) {
    Rational s = pow2(e);
    Rational best_overlap = -1;
    for (std::int64_t j = ceil_to_int(four.lo / s); Rational(j + 1) * s <= four.hi; ++j) {
      Interval cand{Rational(j) * s, Rational(j + 1) * s};
      Rational lo = std::max(cand.lo, iv.lo), hi = std::min(cand.hi, iv.hi);
      Rational overlap = hi > lo ? Rational(hi - lo) : Rational(0);
      if (2 * overlap >= len && overlap > best_overlap) {
        best_overlap = overlap;
        jprime = GridInterval{plain, e, j};
      }
    }
  }
  if (jprime) {
    Interval jp = jprime->interval();
    if (jp.contains(iv)) return *jprime;
    const Rational third = jp.length() / 3;
    for (const Rational& shift : {third, Rational(-third)}) {
      Interval moved{jp.lo + shift, jp.hi + shift};
      if (!moved.contains(iv) || !four.contains(moved)) continue;
      for (const auto& g : s_grids())
        if (auto gi = as_grid_interval(moved, g)) return *gi;
    }
  }
  // Fallback: scan S directly.
  for (int e = ceil_log2(len); e <= floor_log2(4 * len); ++e) {
    for (const auto& g : s_grids()) {
      GridInterval gi = locate(g, e, iv.lo);
      if (gi.interval().contains(iv) && four.contains(gi.interval())) return gi;
    }
  }
  throw std::logic_error("no S interval between I and 4I");
}

std::string serialize_rect(const DyadicRectangle& r) {
  std::ostringstream os;
  for (std::size_t i = 0; i < r.sides.size(); ++i) {
    const auto& s = r.sides[i];
    if (i) os << 'x';
    os << "grid:" << s.grid.d << ',' << s.grid.b << ',' << to_string(s.grid.alpha) << ';' << s.k << ';' << s.j;
  }
  return os.str();
}

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::int64_t parse_int(const std::string& s) {
  std::size_t used = 0;
  std::int64_t v;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed integer '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("malformed integer '" + s + "'");
  return v;
}

}  // namespace

DyadicRectangle parse_rect(std::string_view line) {
  DyadicRectangle r;
  for (std::string side : split(line, 'x')) {
    if (side.rfind("grid:", 0) == 0) side = side.substr(5);
    auto parts = split(side, ';');
    if (parts.size() != 3) throw std::invalid_argument("malformed rectangle side '" + side + "'");
    auto g = split(parts[0], ',');
    if (g.size() != 3) throw std::invalid_argument("malformed grid id '" + parts[0] + "'");
    GridInterval gi;
    gi.grid.d = static_cast<int>(parse_int(g[0]));
    gi.grid.b = static_cast<int>(parse_int(g[1]));
    gi.grid.alpha = parse_rational(g[2]);
    if (!gi.grid.valid()) throw std::invalid_argument("invalid grid id '" + parts[0] + "'");
    gi.k = parse_int(parts[1]);
    gi.j = parse_int(parts[2]);
    r.sides.push_back(gi);
  }
  return r;
}

std::string serialize_collection(const RectCollection& coll) {
  std::string out;
  for (const auto& r : coll.rects()) out += serialize_rect(r) + "\n";
  return out;
}

RectCollection parse_collection(std::string_view text) {
  std::vector<DyadicRectangle> rects;
  int n = 0;
  for (std::string line : split(text, '\n')) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    std::size_t first = line.find_first_not_of(' ');
    if (first == std::string::npos || line[first] == '#') continue;
    DyadicRectangle r = parse_rect(std::string_view(line).substr(first));
    if (n == 0) n = r.n();
    if (r.n() != n) throw std::invalid_argument("mixed rectangle dimensions in collection");
    rects.push_back(std::move(r));
  }
  return RectCollection(n, std::move(rects));
}

}  // namespace hankelab
