#include <random>

#include "doctest.h"
#include "hankelab/dyadic.hpp"

using namespace hankelab;

namespace {
Rational q(long a, long b = 1) { return Rational(a, b); }
}  // namespace

TEST_CASE("grid interval endpoints") {
  CHECK(grid_interval_endpoints(GridId::plain(), -1, 1) == Interval{q(1, 2), 1});
  CHECK(grid_interval_endpoints(GridId::shifted(1, 0, 1), 0, 0) == Interval{q(1, 3), q(4, 3)});
  // 2^{2}((0,1) + 0 - 1/5)
  CHECK(grid_interval_endpoints(GridId::shifted(2, 0, 1), 1, 0) == Interval{q(-4, 5), q(16, 5)});
}

TEST_CASE("grid validity") {
  CHECK(GridId::plain().valid());
  CHECK(GridId::shifted(3, 2, -1).valid());
  GridId bad{1, 0, q(1, 4)};
  CHECK_FALSE(bad.valid());
  CHECK_FALSE((GridId{2, 0, 0}).valid());
}

TEST_CASE("grid nesting") {
  CHECK(verify_grid_nesting(GridId::shifted(1, 0, 1), 4));
  CHECK(verify_grid_nesting(GridId::plain(), 8));
  CHECK_FALSE(verify_grid_nesting(GridId{1, 0, q(1, 4)}, 2));
  for (int d = 1; d <= 4; ++d)
    for (const auto& g : shifted_family(d)) CHECK(verify_grid_nesting(g, 6));
}

TEST_CASE("intervals of one scale tile without overlap") {
  for (int d = 1; d <= 3; ++d)
    for (const auto& g : shifted_family(d))
      for (int k = -2; k <= 1; ++k)
        for (int j = -3; j < 3; ++j) {
          Interval a = grid_interval_endpoints(g, k, j), b = grid_interval_endpoints(g, k, j + 1);
          CHECK(a.hi == b.lo);
        }
}

TEST_CASE("shifted dyadic intervals belong to D_d") {
  for (int d = 1; d <= 4; ++d) {
    Rational delta(1, (1 << d) + 1);
    auto fam = shifted_family(d);
    for (int level = 0; level <= 4; ++level)
      for (int j = 0; j < (1 << level); ++j) {
        Interval I{Rational(j, 1 << level), Rational(j + 1, 1 << level)};
        for (int sign : {1, -1}) {
          Rational sh = sign * delta * I.length();
          Interval moved{I.lo + sh, I.hi + sh};
          bool found = false;
          for (const auto& g : fam) found = found || as_grid_interval(moved, g).has_value();
          CHECK(found);
        }
      }
  }
}

TEST_CASE("locate and parent") {
  GridInterval gi = locate(GridId::plain(), -3, q(5, 16));
  CHECK(gi.interval() == Interval{q(1, 4), q(3, 8)});
  CHECK(gi.parent().interval() == Interval{q(1, 4), q(1, 2)});
  GridId g = GridId::shifted(2, 1, -1);
  GridInterval s = locate(g, -1, q(1, 7));
  CHECK(s.interval().lo <= q(1, 7));
  CHECK(q(1, 7) < s.interval().hi);
  CHECK(s.parent().interval().contains(s.interval()));
}

TEST_CASE("shadow examples") {
  std::vector<int> l2{1, 1}, l3{2, 0};
  std::vector<std::int64_t> o0{0, 0};
  RectCollection one(2, {plain_rect(l2, o0)});
  CHECK(one.shadow().measure() == q(1, 4));
  RectCollection two(2, {plain_rect(l2, o0), plain_rect(l3, o0)});
  CHECK(two.shadow().measure() == q(3, 8));
}

TEST_CASE("shadow of random rectangles equals finest-grid count") {
  std::mt19937_64 rng(3);
  const int L = 6;
  std::vector<DyadicRectangle> rects;
  std::vector<char> cell((1 << L) * (1 << L), 0);
  for (int i = 0; i < 50; ++i) {
    std::vector<int> lv(2);
    std::vector<std::int64_t> off(2);
    for (int c = 0; c < 2; ++c) {
      lv[c] = static_cast<int>(rng() % (L + 1));
      off[c] = static_cast<std::int64_t>(rng() % (1u << lv[c]));
    }
    rects.push_back(plain_rect(lv, off));
    int w0 = 1 << (L - lv[0]), w1 = 1 << (L - lv[1]);
    for (int x = off[0] * w0; x < (off[0] + 1) * w0; ++x)
      for (int y = off[1] * w1; y < (off[1] + 1) * w1; ++y) cell[x * (1 << L) + y] = 1;
  }
  long count = 0;
  for (char c : cell) count += c;
  CHECK(shadow(2, rects).measure() == Rational(count, 1 << (2 * L)));
  // Monotone in the collection.
  std::vector<DyadicRectangle> half(rects.begin(), rects.begin() + 25);
  CHECK(shadow(2, rects).contains(shadow(2, half)));
}

TEST_CASE("dilate_rect") {
  std::vector<int> l{1, 1};
  std::vector<std::int64_t> o{1, 0}, o1{1, 1}, z{0, 0};
  std::vector<int> c1{0}, c12{0, 1};
  CHECK(dilate_rect(plain_rect(l, o), 1, c1) == plain_rect(l, o).box());
  CHECK(dilate_rect(plain_rect(l, o1), 3, c1) == Box{{0, q(3, 2)}, {q(1, 2), 1}});
  std::vector<int> l2{2, 1};
  CHECK(dilate_rect(plain_rect(l2, z), 2, c12) == Box{{q(-1, 8), q(3, 8)}, {q(-1, 4), q(3, 4)}});
  CHECK_THROWS_AS(dilate_rect(plain_rect(l, o), q(1, 2), c1), std::invalid_argument);
}

TEST_CASE("cover_in_S") {
  CHECK(cover_in_S(Interval{0, q(1, 2)}).interval() == Interval{0, q(1, 2)});
  // Oracle: enumerate S intervals with lengths in [|I|, 4|I|] near I.
  std::mt19937_64 rng(9);
  for (int t = 0; t < 300; ++t) {
    long a = static_cast<long>(rng() % 97), b = a + 1 + static_cast<long>(rng() % 40);
    long den = 1 + static_cast<long>(rng() % 60);
    Interval I{Rational(a, den * 7), Rational(b, den * 7)};
    GridInterval J = cover_in_S(I);
    Interval four{I.center() - 2 * I.length(), I.center() + 2 * I.length()};
    CHECK(J.interval().contains(I));
    CHECK(four.contains(J.interval()));
    bool in_s = false;
    for (const auto& g : s_grids()) in_s = in_s || g == J.grid;
    CHECK(in_s);
  }
  GridInterval J = cover_in_S(Interval{q(3, 8), q(5, 8)});
  CHECK(Interval{q(-1, 8), q(9, 8)}.contains(J.interval()));
  GridInterval K = cover_in_S(Interval{q(1, 3), q(2, 3)});
  CHECK(K.length() <= q(4, 3));
}

TEST_CASE("rectangle text round trip") {
  DyadicRectangle r{{GridInterval{GridId::shifted(2, 1, -1), -3, 5}, GridInterval{GridId::plain(), -1, 1}}};
  std::string line = serialize_rect(r);
  CHECK(line == "grid:2,1,-1/5;-3;5xgrid:1,0,0/1;-1;1");
  CHECK(parse_rect(line) == r);
  RectCollection c(2, {r, r});
  CHECK(c.size() == 1);
  CHECK(parse_collection("# header\n" + serialize_collection(c) + "\n").rects() == c.rects());
  CHECK_THROWS_AS(parse_rect("grid:1,0,1/4;0;0"), std::invalid_argument);
}
