#include <random>

#include "doctest.h"
#include "hankelab/journe.hpp"

using namespace hankelab;

namespace {

Rational q(long a, long b = 1) { return Rational(a, b); }

RectCollection random_collection(std::mt19937_64& rng, int n, int count, int depth) {
  std::vector<DyadicRectangle> rs;
  for (int i = 0; i < count; ++i) {
    std::vector<int> lv(n);
    std::vector<std::int64_t> off(n);
    for (int c = 0; c < n; ++c) {
      lv[c] = static_cast<int>(rng() % (depth + 1));
      off[c] = static_cast<std::int64_t>(rng() % (1u << lv[c]));
    }
    rs.push_back(plain_rect(lv, off));
  }
  return RectCollection(n, rs);
}

DyadicRectangle rect2(int l0, std::int64_t j0, int l1, std::int64_t j1) {
  std::vector<int> l{l0, l1};
  std::vector<std::int64_t> o{j0, j1};
  return plain_rect(l, o);
}

// Oracle: largest breakpoint-crossing value whose dilation is still inside V.
Rational embeddedness_oracle(const Box& R, const OpenSet& V, const std::vector<int>& coords) {
  Rational best = 1;
  for (int c : coords)
    for (const auto& t : V.breakpoints(c)) {
      Rational mu = abs(t - R[c].center()) / (R[c].length() / 2);
      if (mu > best && V.contains(dilate_box(R, mu, coords))) best = mu;
    }
  return best;
}

}  // namespace

TEST_CASE("delta determines d") {
  JourneConfig cfg;
  cfg.delta = q(1, 3);
  CHECK(cfg.d() == 1);
  cfg.delta = q(1, 5);
  CHECK(cfg.d() == 2);
  cfg.delta = q(1, 6);
  CHECK(cfg.d() == 3);
}

TEST_CASE("enlarge examples") {
  JourneConfig cfg;
  cfg.delta = q(1, 3);
  RectCollection one(2, {rect2(1, 0, 1, 0)});
  OpenSet V = enlarge(one, cfg);
  CHECK(V.contains(one.shadow()));
  CHECK(V.measure() >= q(1, 4));

  RectCollection full(2, {rect2(0, 0, 0, 0)});
  OpenSet W = enlarge(full, cfg);
  CHECK(W.contains(Box{{0, 1}, {0, 1}}));
  CHECK(W.measure_within(Box{{0, 1}, {0, 1}}) == 1);
  CHECK_THROWS_AS(enlarge(RectCollection(2, {}), cfg), std::invalid_argument);
}

TEST_CASE("enlarge contains the shadow and is monotone in delta at a fixed grid family") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 60; ++t) {
    RectCollection coll = random_collection(rng, 1 + t % 3, 6, 5);
    // 1/5 and 1/4 share d = 2; 1/9 and 1/8 share d = 3.
    for (auto [small, large] : {std::pair{q(1, 5), q(1, 4)}, std::pair{q(1, 9), q(1, 8)}}) {
      OpenSet a = enlarge_set(coll.shadow(), small), b = enlarge_set(coll.shadow(), large);
      CHECK(a.contains(coll.shadow()));
      CHECK(b.contains(a));
    }
  }
}

TEST_CASE("enlarge across different d need not be monotone") {
  // The grid family D_d changes with d, so a larger delta can give a smaller set.
  std::mt19937_64 rng(2);
  bool found = false;
  for (int t = 0; t < 200 && !found; ++t) {
    RectCollection coll = random_collection(rng, 2, 6, 5);
    OpenSet a = enlarge_set(coll.shadow(), q(1, 5)), b = enlarge_set(coll.shadow(), q(1, 3));
    found = !b.contains(a);
  }
  CHECK(found);
}

TEST_CASE("embeddedness examples") {
  DyadicRectangle R = rect2(1, 0, 1, 0);
  OpenSet V = OpenSet::from_box(Box{{q(-1, 2), 1}, {0, q(1, 2)}});
  std::vector<int> c1{0};
  CHECK(embeddedness(R, V, c1) == 3);
  CHECK(embeddedness(R, OpenSet::from_box(R.box()), c1) == 1);
  CHECK_THROWS_WITH_AS(embeddedness(rect2(0, 0, 0, 0), V, c1), "not embedded", std::invalid_argument);
}

TEST_CASE("embeddedness matches breakpoint enumeration") {
  std::mt19937_64 rng(17);
  JourneConfig cfg;
  cfg.delta = q(1, 3);
  for (int t = 0; t < 30; ++t) {
    const int n = 2 + t % 2;
    RectCollection coll = random_collection(rng, n, 5, 4);
    OpenSet V = enlarge(coll, cfg);
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    for (const auto& R : coll.rects()) {
      CHECK(embeddedness(R, V, all) == embeddedness_oracle(R.box(), V, all));
      std::vector<int> one{t % n};
      Rational mu = embeddedness(R, V, one);
      CHECK(mu == embeddedness_oracle(R.box(), V, one));
      CHECK(V.contains(dilate_rect(R, mu, one)));
    }
  }
}

TEST_CASE("few_small_partition examples") {
  // Eight rectangles sharing the first side [0,1).
  std::vector<DyadicRectangle> rs;
  for (int i = 0; i < 8; ++i) rs.push_back(rect2(0, 0, 3, i));
  RectCollection coll(2, rs);
  JourneConfig cfg;
  cfg.delta = q(1, 3);
  OpenSet V = enlarge(coll, cfg);
  CHECK(V.measure() <= q(3, 2));
  FPartition part = few_small_partition(coll, V, 0);
  for (const auto& [key, cell] : part) CHECK((1 << std::get<1>(key)) <= 3);

  // One small rectangle deep inside a large V.
  RectCollection single(2, {rect2(6, 32, 6, 32)});
  OpenSet big = OpenSet::from_box(Box{{0, 1}, {0, 1}});
  FPartition p1 = few_small_partition(single, big, 0);
  REQUIRE(p1.size() == 1);
  CHECK(std::get<1>(p1.begin()->first) >= 6);

  // Two disjoint rectangles with disjoint room.
  RectCollection two(2, {rect2(2, 0, 2, 0), rect2(2, 3, 2, 3)});
  OpenSet room = OpenSet::from_boxes(2, std::vector<Box>{{{0, q(1, 2)}, {0, q(1, 4)}}, {{q(1, 2), 1}, {q(3, 4), 1}}});
  FPartition p2 = few_small_partition(two, room, 0);
  REQUIRE(p2.size() == 2);
  CHECK(p2.begin()->second.shadow.intersect(std::next(p2.begin())->second.shadow).empty());
}

TEST_CASE("few_small_ratio on singletons is at most 1") {
  std::mt19937_64 rng(12);
  JourneConfig cfg;
  cfg.delta = q(1, 5);
  RectCollection coll = random_collection(rng, 2, 8, 5);
  OpenSet V = enlarge(coll, cfg);
  std::vector<RectCollection> singles;
  for (const auto& R : coll.rects()) singles.emplace_back(2, std::vector<DyadicRectangle>{R});
  CHECK(few_small_ratio(coll, V, q(1), singles) <= 1.0);
  CHECK(few_small_ratio(coll, V, q(1, 2), singles) <= 1.0);
  std::vector<RectCollection> none{RectCollection(2, {})};
  CHECK(few_small_ratio(coll, V, q(1, 2), none) == 0.0);
}

TEST_CASE("journe_full on a single rectangle") {
  JourneConfig cfg;
  cfg.delta = q(1, 3);
  RectCollection one(2, {rect2(2, 1, 3, 2)});
  JourneResult res = journe_full(one, cfg);
  REQUIRE(res.entries.size() == 1);
  CHECK(res.entries[0].emb >= 1);
  CHECK(res.entries[0].contained);
  CHECK(res.V.contains(one.shadow()));
}

TEST_CASE("journe_full with a common first side") {
  std::vector<DyadicRectangle> rs;
  for (int i = 0; i < 4; ++i) rs.push_back(rect2(1, 0, 2, i));
  JourneConfig cfg;
  cfg.delta = q(1, 5);
  JourneResult res = journe_full(RectCollection(2, rs), cfg);
  for (const auto& e : res.entries) {
    CHECK(e.contained);
    CHECK(e.beta[0] < 4);
  }
}

TEST_CASE("journe_full invariants on random collections") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 25; ++t) {
    const int n = 2 + t % 2;
    JourneConfig cfg;
    cfg.delta = t % 3 ? q(1, 5) : q(1, 3);
    RectCollection coll = random_collection(rng, n, 4 + t % 6, 6);
    JourneResult res = journe_full(coll, cfg);
    Rational bound = coll.shadow().measure();
    for (int i = 0; i < n; ++i) bound *= 1 + cfg.delta;
    CHECK(res.V_measure <= bound);
    CHECK(res.V.contains(coll.shadow()));
    for (const auto& e : res.entries) {
      CHECK(e.contained);
      CHECK(e.emb >= 1);
      CHECK(e.emb == std::max(Rational(1), Rational(e.beta[e.iota] / 16)));
      for (int m = 0; m < n; ++m) {
        CHECK(e.beta[e.iota] <= e.beta[m]);
        if (m < e.iota) CHECK(e.beta[m] > e.beta[e.iota]);
      }
    }
    // F(I,k,m) cells partition the collection.
    FPartition part = journe_partition(res, coll.rects());
    std::size_t total = 0;
    for (const auto& [key, cell] : part) total += cell.members.size();
    CHECK(total == coll.size());
  }
}

TEST_CASE("probability proposition") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    std::vector<Rational> xs;
    const int len = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < len; ++i) xs.emplace_back(static_cast<long>(rng() % 17), 16);
    CHECK(probability_bound_holds(xs));
  }
  CHECK(probability_bound_holds(std::vector<Rational>{0, 1, 1, 1}));
}

TEST_CASE("separation of scales") {
  std::mt19937_64 rng(23);
  RectCollection coll = random_collection(rng, 2, 30, 8);
  for (int k = 1; k <= 3; ++k)
    for (Rational delta : {q(1, 3), q(1, 5)}) {
      auto groups = separate_scales(coll.rects(), k, delta);
      CHECK(static_cast<int>(groups.size()) <= separation_classes(k, delta));
      CHECK(separation_classes(k, delta) <= ceil_log2(40 * pow2(k) / delta));
      for (const auto& g : groups)
        for (const auto& a : g)
          for (const auto& b : g)
            if (a.sides[0].length() < b.sides[0].length())
              CHECK(40 * pow2(k) / delta * a.sides[0].length() < b.sides[0].length());
    }
}

TEST_CASE("H sets are pairwise disjoint within a class") {
  std::mt19937_64 rng(41);
  JourneConfig cfg;
  cfg.delta = q(1, 3);
  for (int t = 0; t < 10; ++t) {
    RectCollection coll = random_collection(rng, 2, 10, 5);
    OpenSet V = enlarge(coll, cfg);
    FPartition part = few_small_partition(coll, V, 0);
    std::set<int> ks;
    for (const auto& [key, cell] : part) ks.insert(std::get<1>(key));
    for (int k : ks) {
      auto H = h_sets(part, k, 0);
      for (auto a = H.begin(); a != H.end(); ++a) {
        CHECK(coll.shadow().contains(a->second));
        for (auto b = std::next(a); b != H.end(); ++b) CHECK(a->second.intersect(b->second).empty());
      }
    }
  }
}

TEST_CASE("journe_bmo_weights") {
  JourneConfig cfg;
  std::mt19937_64 rng(21);
  auto coll = random_collection(rng, 2, 6, 3);

  WaveletCoeffs zero{2, 64, {}};
  auto z = journe_bmo_weights(zero, coll, cfg);
  CHECK(z.weighted_bmo.value == 0.0);
  CHECK(z.minus1_value == 0.0);
  for (const auto& [R, v] : z.weighted.map) CHECK(v == cplx(0));

  const auto& R = coll.rects().front();
  WaveletCoeffs one{2, 64, {{R, 1.0}}};
  auto o = journe_bmo_weights(one, coll, cfg, BmoStrategy::kExhaustive);
  Rational emb;
  for (const auto& e : o.journe.entries)
    if (e.rect == R) emb = e.emb;
  double w = std::pow(to_double(emb), -(2 + 0.5));
  CHECK(o.weighted.at(R).real() == doctest::Approx(w));
  CHECK(o.weighted_bmo.value == doctest::Approx(w / std::sqrt(to_double(R.volume()))));

  WaveletCoeffs stray{2, 64, {{plain_rect(std::vector<int>{9, 9}, std::vector<std::int64_t>{0, 0}), 1.0}}};
  CHECK_THROWS(journe_bmo_weights(stray, coll, cfg));

  std::normal_distribution<double> g;
  for (int trial = 0; trial < 4; ++trial) {
    auto c3 = random_collection(rng, 3, 12, 3);
    WaveletCoeffs b{3, 64, {}};
    for (const auto& S : c3.rects()) b.map[S] = cplx(g(rng), g(rng));
    auto rep = journe_bmo_weights(b, c3, cfg);
    CHECK(!rep.classes.empty());
    for (const auto& cc : rep.classes) CHECK(cc.holds);
    CHECK(std::isfinite(rep.ratio));
  }
}
