#include <random>
#include <set>

#include "doctest.h"
#include "hankelab/open_set.hpp"

using namespace hankelab;

namespace {

Interval iv(Rational lo, Rational hi) { return Interval{lo, hi}; }
Rational q(long a, long b = 1) { return Rational(a, b); }

// Oracle: the set of level-L grid cells covered by a box union in [0,1)^2.
std::set<std::pair<int, int>> raster(const std::vector<Box>& boxes, int L) {
  std::set<std::pair<int, int>> cells;
  const int m = 1 << L;
  for (const auto& b : boxes)
    for (int x = 0; x < m; ++x)
      for (int y = 0; y < m; ++y) {
        Rational cx = Rational(2 * x + 1, 2 * m), cy = Rational(2 * y + 1, 2 * m);
        if (b[0].lo <= cx && cx < b[0].hi && b[1].lo <= cy && cy < b[1].hi) cells.insert({x, y});
      }
  return cells;
}

std::vector<Box> random_boxes(std::mt19937_64& rng, int count, int L) {
  std::uniform_int_distribution<int> u(0, (1 << L));
  std::vector<Box> out;
  for (int i = 0; i < count; ++i) {
    Box b;
    for (int c = 0; c < 2; ++c) {
      int a = u(rng), e = u(rng);
      if (a > e) std::swap(a, e);
      if (a == e) e = std::min(a + 1, 1 << L), a = e - 1;
      b.push_back(iv(Rational(a, 1 << L), Rational(e, 1 << L)));
    }
    out.push_back(b);
  }
  return out;
}

}  // namespace

TEST_CASE("single box measure and containment") {
  Box b{iv(0, q(1, 2)), iv(0, q(1, 2))};
  OpenSet s = OpenSet::from_box(b);
  CHECK(s.measure() == q(1, 4));
  CHECK(s.contains(b));
  CHECK_FALSE(s.contains(Box{iv(0, q(3, 4)), iv(0, q(1, 2))}));
}

TEST_CASE("union of overlapping boxes has inclusion-exclusion measure") {
  std::vector<Box> bs{{iv(0, q(1, 2)), iv(0, q(1, 2))}, {iv(0, q(1, 4)), iv(0, 1)}};
  OpenSet s = OpenSet::from_boxes(2, bs);
  CHECK(s.measure() == q(3, 8));
}

TEST_CASE("canonical form: equal point sets compare equal") {
  std::vector<Box> a{{iv(0, q(1, 2)), iv(0, 1)}, {iv(q(1, 2), 1), iv(0, 1)}};
  std::vector<Box> b{{iv(0, 1), iv(0, q(1, 3))}, {iv(0, 1), iv(q(1, 3), 1)}};
  CHECK(OpenSet::from_boxes(2, a) == OpenSet::from_boxes(2, b));
  CHECK(OpenSet::from_boxes(2, a).boxes().size() == 1);
}

TEST_CASE("set algebra agrees with raster oracle") {
  std::mt19937_64 rng(11);
  const int L = 3;
  for (int trial = 0; trial < 60; ++trial) {
    auto A = random_boxes(rng, 1 + trial % 5, L);
    auto B = random_boxes(rng, 1 + (trial / 5) % 4, L);
    OpenSet sa = OpenSet::from_boxes(2, A), sb = OpenSet::from_boxes(2, B);
    auto ra = raster(A, L), rb = raster(B, L);
    std::set<std::pair<int, int>> ru, ri, rd;
    std::set_union(ra.begin(), ra.end(), rb.begin(), rb.end(), std::inserter(ru, ru.end()));
    std::set_intersection(ra.begin(), ra.end(), rb.begin(), rb.end(), std::inserter(ri, ri.end()));
    std::set_difference(ra.begin(), ra.end(), rb.begin(), rb.end(), std::inserter(rd, rd.end()));
    const Rational cell = Rational(1, 1 << (2 * L));
    CHECK(sa.unite(sb).measure() == cell * static_cast<long>(ru.size()));
    CHECK(sa.intersect(sb).measure() == cell * static_cast<long>(ri.size()));
    CHECK(sa.subtract(sb).measure() == cell * static_cast<long>(rd.size()));
    CHECK(raster(sa.unite(sb).boxes(), L) == ru);
    CHECK(raster(sa.subtract(sb).boxes(), L) == rd);
    CHECK(sa.unite(sb).contains(sa));
    CHECK(sa.contains(sa.intersect(sb)));
    for (const auto& b : B) {
      auto rb = raster({b}, L);
      CHECK(sa.contains(b) == std::includes(ra.begin(), ra.end(), rb.begin(), rb.end()));
    }
    Box probe = A.front();
    CHECK(sb.measure_within(probe) == sb.intersect(OpenSet::from_box(probe)).measure());
  }
}

TEST_CASE("boxes are disjoint and reassemble the set") {
  std::mt19937_64 rng(5);
  auto A = random_boxes(rng, 7, 4);
  OpenSet s = OpenSet::from_boxes(2, A);
  auto bs = s.boxes();
  Rational total = 0;
  for (const auto& b : bs) total += box_volume(b);
  CHECK(total == s.measure());
  CHECK(OpenSet::from_boxes(2, bs) == s);
}

TEST_CASE("permutation and projection") {
  Box b{iv(0, q(1, 2)), iv(q(1, 4), 1), iv(0, q(1, 8))};
  OpenSet s = OpenSet::from_box(b);
  std::vector<int> order{2, 0, 1};
  OpenSet p = s.permuted(order);
  CHECK(p == OpenSet::from_box(Box{b[2], b[0], b[1]}));
  CHECK(s.project(1) == OpenSet::from_box(Box{b[1]}));
  CHECK(s.breakpoints(1) == std::vector<Rational>{q(1, 4), 1});
}

TEST_CASE("from_cells matches box union") {
  std::vector<std::vector<Rational>> cuts{{0, q(1, 2), 1}, {0, q(1, 3), 1}};
  std::vector<char> covered{1, 0, 1, 1};
  OpenSet s = OpenSet::from_cells(cuts, covered);
  std::vector<Box> bs{{iv(0, q(1, 2)), iv(0, q(1, 3))}, {iv(q(1, 2), 1), iv(0, 1)}};
  CHECK(s == OpenSet::from_boxes(2, bs));
}

TEST_CASE("fiber maps along each coordinate") {
  std::vector<Box> bs{{iv(0, q(1, 2)), iv(0, q(1, 4))}, {iv(q(1, 4), 1), iv(q(1, 2), 1)}};
  OpenSet s = OpenSet::from_boxes(2, bs);
  // Replace each fiber by its convex hull.
  auto hull = [](const OpenSet& f) {
    auto pts = f.breakpoints(0);
    return OpenSet::from_box(Box{Interval{pts.front(), pts.back()}});
  };
  OpenSet h1 = s.map_fibers(1, hull);
  CHECK(h1.measure() == q(9, 16));
  OpenSet h0 = s.map_fibers(0, hull);
  CHECK(h0 == s);
}
