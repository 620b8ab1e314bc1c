#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "hankelab/paraproduct.hpp"

using namespace hankelab;

namespace {

DyadicRectangle rect(std::vector<int> levels, std::vector<std::int64_t> offs) { return plain_rect(levels, offs); }

WaveletCoeffs random_coeffs(const WaveletFamily& fam, int count, int max_level, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  WaveletCoeffs c{fam.n(), fam.N(), {}};
  while (static_cast<int>(c.map.size()) < count) {
    std::vector<int> lv(fam.n());
    std::vector<std::int64_t> off(fam.n());
    for (int a = 0; a < fam.n(); ++a) {
      lv[a] = static_cast<int>(rng() % (max_level + 1));
      off[a] = static_cast<std::int64_t>(rng() % (1u << lv[a]));
    }
    c.map[plain_rect(lv, off)] = cplx(g(rng), g(rng));
  }
  return c;
}

// w_I(t) from its frequency formula, independent of the family tables.
cplx direct_w(int j, std::int64_t m, int t, int N) {
  cplx s = 0;
  for (int xi = 1 << j; xi < (2 << j); ++xi) {
    const double phase = -2 * std::numbers::pi * (m + 0.5) * xi / std::ldexp(1.0, j) + 2 * std::numbers::pi * xi * t / N;
    s += std::pow(2.0, -j / 2.0) * std::polar(1.0, phase);
  }
  return s;
}

cplx direct_v(const DyadicRectangle& R, std::span<const int> t, int N) {
  cplx v = 1;
  for (int a = 0; a < R.n(); ++a) v *= direct_w(static_cast<int>(-R.sides[a].k), R.sides[a].j, t[a], N);
  return v;
}

std::vector<int> all(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

// Smallest t with Rp inside 2^t R, by trying dilations one after another.
int brute_containment(const DyadicRectangle& Rp, const DyadicRectangle& R) {
  const auto coords = all(R.n());
  for (int t = 0;; ++t)
    if (box_contains(dilate_rect(R, pow2(t), coords), Rp.box())) return t;
}

}  // namespace

TEST_CASE("prec_J") {
  auto R = rect({2, 2}, {1, 1});
  CHECK(prec_J(R, R, 0));
  CHECK(prec_J(rect({6, 2}, {5, 1}), R, 0b01));
  CHECK_FALSE(prec_J(rect({4, 2}, {5, 1}), R, 0b01));
  CHECK_FALSE(prec_J(rect({6, 2}, {5, 1}), R, 0b00));
  CHECK(prec_J(rect({5, 0}, {0, 0}), rect({1, 3}, {0, 0}), 0b01));  // 8x apart in coordinate 2 is allowed off J
  CHECK_FALSE(prec_J(rect({5, 0}, {0, 0}), rect({1, 4}, {0, 0}), 0b01));

  // at most one J per pair, and relation_set finds it
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> a(3), b(3);
    std::vector<std::int64_t> z(3, 0);
    for (int i = 0; i < 3; ++i) a[i] = static_cast<int>(rng() % 9), b[i] = static_cast<int>(rng() % 9);
    auto P = plain_rect(a, z), Q = plain_rect(b, z);
    int count = 0;
    for (CoordSet J = 0; J < 8; ++J) count += prec_J(P, Q, J);
    CHECK(count <= 1);
    auto J = relation_set(P, Q);
    CHECK(J.has_value() == (count == 1));
    if (J) CHECK(prec_J(P, Q, *J));
  }
}

TEST_CASE("containment exponent matches dilation scan") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(2), b(2);
    std::vector<std::int64_t> oa(2), ob(2);
    for (int i = 0; i < 2; ++i) {
      a[i] = static_cast<int>(rng() % 6);
      b[i] = static_cast<int>(rng() % 6);
      oa[i] = static_cast<std::int64_t>(rng() % (1u << a[i]));
      ob[i] = static_cast<std::int64_t>(rng() % (1u << b[i]));
    }
    auto P = plain_rect(a, oa), Q = plain_rect(b, ob);
    CHECK(containment_exponent(P, Q) == brute_containment(P, Q));
  }
}

TEST_CASE("partition: hand-computed cell") {
  auto R = rect({1, 1}, {0, 0});
  auto Rp = rect({5, 1}, {20, 1});
  UVW u;
  u.n = 2;
  u.U = {R};
  u.Wcoll = {Rp};
  u.U_d1[0] = {R};
  auto sets = partition_pairs(u);
  REQUIRE(sets.size() == 1);
  const auto& c = sets[0].cls;
  CHECK(c.d1 == 0);
  CHECK(c.J == 0b01);
  // coordinate 1: center 1/4, needs reach 13/32 -> t = 1; coordinate 2: reach 3/4 -> t = 2
  CHECK(c.d2 == 1);
  CHECK(c.ell == std::vector<int>{-5});
  CHECK(c.d3 == std::vector<int>{4});
  CHECK(sets[0].pairs.size() == 1);
  CHECK(sets[0].branches.size() == 1);

  u.Wcoll.clear();
  CHECK(partition_pairs(u).empty());
}

TEST_CASE("build_UVW: single rectangle") {
  auto fam = build_family(32, 2);
  auto R = rect({1, 2}, {1, 2});
  WaveletCoeffs c{2, 32, {{R, cplx(0.5, -1)}}};
  auto u = build_UVW(c, fam, Deltas{}, JourneConfig{});
  REQUIRE(u.U.size() == 1);
  CHECK(u.U[0] == R);
  CHECK(u.bmo == doctest::Approx(std::abs(cplx(0.5, -1)) / std::sqrt(1.0 / 8)));
  CHECK(u.V_set.contains(R.box()));
  std::set<DyadicRectangle> V(u.Vcoll.begin(), u.Vcoll.end()), W(u.Wcoll.begin(), u.Wcoll.end());
  for (const auto& S : fam.rectangles()) {
    const Box b = S.box();
    const bool inV = u.V_set.measure_within(b) == S.volume();
    const bool inR = box_contains(R.box(), b);
    CHECK(V.count(S) == (inV && !inR ? 1u : 0u));
    bool close = true;
    for (int j = 0; j < 2; ++j) close &= S.sides[j].length() < 8 * R.sides[j].length();
    CHECK(W.count(S) == (!inV && close ? 1u : 0u));
  }
  for (const auto& [d1, members] : u.U_d1)
    for (const auto& S : members) CHECK(u.V_set.contains(dilate_rect(S, pow2(d1), all(2))));
  CHECK_THROWS(build_UVW(WaveletCoeffs{2, 32, {}}, fam, Deltas{}, JourneConfig{}));
  Deltas bad;
  bad.delta_3 = 1;
  CHECK_THROWS(build_UVW(c, fam, bad, JourneConfig{}));
}

TEST_CASE("build_UVW and partition on random instances") {
  auto fam = build_family(32, 2);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 6; ++trial) {
    auto c = random_coeffs(fam, 6, 3, rng);
    auto u = build_UVW(c, fam, Deltas{}, JourneConfig{});
    CHECK(u.exact_witness);
    // exact energy bounds by direct coefficient summation
    double sumU = 0, sumV = 0;
    for (const auto& R : u.U) sumU += std::norm(c.at(R)) / (u.bmo * u.bmo);
    for (const auto& R : u.Vcoll) sumV += std::norm(c.at(R)) / (u.bmo * u.bmo);
    CHECK(sumU == doctest::Approx(to_double(u.shadow_U.measure())).epsilon(1e-12));
    CHECK(sumV <= to_double(u.V_set.measure() - u.shadow_U.measure()) + 1e-12);
    for (const auto& [d1, members] : u.U_d1)
      for (const auto& S : members) CHECK(u.V_set.contains(dilate_rect(S, pow2(d1), all(2))));

    auto sets = partition_pairs(u);
    std::map<RectPair, int> seen;
    for (const auto& ps : sets) {
      for (const auto& [Rp, R] : ps.pairs) {
        ++seen[{Rp, R}];
        CHECK(prec_J(Rp, R, ps.cls.J));
        const auto coords = all(2);
        CHECK(box_contains(dilate_rect(R, pow2(ps.cls.d2 + 4), coords), Rp.box()));
        CHECK_FALSE(box_contains(dilate_rect(R, pow2(ps.cls.d2), coords), Rp.box()));
        CHECK(ps.cls.d2 >= ps.cls.d1);
        CHECK(u.d1_of.at(R) == ps.cls.d1);
        std::size_t i = 0;
        for (int j = 0; j < 2; ++j)
          if (ps.cls.J >> j & 1u) {
            CHECK(Rp.sides[j].length() == pow2(ps.cls.ell[i]));
            CHECK(R.sides[j].length() == pow2(ps.cls.ell[i] + ps.cls.d3[i]));
            ++i;
          }
      }
      CHECK(ps.coverage == 1.0);
      for (const auto& pi : ps.branches)
        for (const auto& [Rp, R] : pi) CHECK(std::binary_search(ps.pairs.begin(), ps.pairs.end(), RectPair{Rp, R}));
    }
    // recount: every related pair of W x U appears exactly once
    std::size_t related = 0;
    for (const auto& Rp : u.Wcoll)
      for (const auto& R : u.U) {
        bool any = false;
        for (CoordSet J = 0; J < 4; ++J) any |= prec_J(Rp, R, J);
        if (any) {
          ++related;
          CHECK(seen[{Rp, R}] == 1);
        }
      }
    CHECK(seen.size() == related);
  }
}

TEST_CASE("assemble_bilinear") {
  const int N = 64;
  auto fam = build_family(N, 2);
  auto R = rect({1, 2}, {0, 1});
  auto Rp = rect({4, 2}, {3, 2});
  PairSet ps;
  ps.cls.J = 0b01;
  ps.pairs = {{Rp, R}};
  ps.partners[Rp] = {R};
  ps.branches = {{{Rp, R}}};
  WaveletCoeffs one{2, N, {{R, 1.0}, {Rp, 1.0}}};

  auto X = assemble_bilinear(one, fam, ps, Bilinear::kX);
  double err = 0;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      std::vector<int> t{a, b};
      cplx expect = std::conj(direct_v(Rp, t, N)) * direct_v(R, t, N);
      err = std::max(err, std::abs(X.values()[a * N + b] - expect));
    }
  CHECK(err <= 1e-10);

  // one branch, unit coefficients: 2^{-|d3|/2} / |R'| on R'
  auto Y = assemble_bilinear(one, fam, ps, Bilinear::kY);
  const double level = std::pow(2.0, -3 / 2.0) / to_double(Rp.volume());
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      const bool in = a / 4 == 3 && b / 16 == 2;
      CHECK(Y.values()[a * N + b].real() == doctest::Approx(in ? level : 0.0));
    }
  auto Xt = assemble_bilinear(one, fam, ps, Bilinear::kXtilde);
  CHECK((Xt - Y).norm() == 0.0);

  CHECK(assemble_bilinear(one, fam, PairSet{}, Bilinear::kX).norm() == 0.0);
  PairSet gap = ps;
  gap.pairs = {{rect({5, 2}, {0, 0}), R}};
  CHECK_THROWS_AS(assemble_bilinear(one, fam, gap, Bilinear::kX), std::invalid_argument);
}

TEST_CASE("orthogonality and vanishing products") {
  const int N = 64;
  auto fam = build_family(N, 1);
  // n = 1: |R| = 1/2, |R'| = 1/8
  auto prod = multiply(fam.wavelet(rect({3}, {2})), fam.wavelet(rect({1}, {1})).conj());
  CHECK(anti_analytic(prod).norm() <= 1e-10);

  // a 16x gap between the small sides needs scales 2^-9 .. 1
  auto big = build_family(2048, 1);
  PairSet a, b;
  a.cls.J = b.cls.J = 0b1;
  a.pairs = {{rect({9}, {100}), rect({5}, {3})}};
  b.pairs = {{rect({4}, {7}), rect({0}, {0})}};
  auto rep = orthogonality_check({&a, &b}, big);
  CHECK(rep.separated_pairs == 1);
  CHECK(rep.max_inner <= 1e-10);
  CHECK(rep.vanishing_checked == 2);
  CHECK(rep.max_vanishing <= 1e-10);

  // identical pair twice: no orthogonality claimed, the inner product is the squared norm
  auto fam2 = build_family(N, 2);
  a.pairs = {{rect({4, 1}, {3, 0}), rect({0, 1}, {0, 0})}};
  auto p = multiply(fam2.wavelet(a.pairs[0].first), fam2.wavelet(a.pairs[0].second).conj());
  CHECK(std::abs(inner(p, p)) == doctest::Approx(p.norm() * p.norm()));
  CHECK(p.norm() > 0.1);
  auto self = orthogonality_check({&a, &a}, fam2);
  CHECK(self.separated_pairs == 0);

  PairSet c;
  c.cls.J = 0;
  CHECK_THROWS(orthogonality_check({&a, &c}, fam2));
}

TEST_CASE("exceptional set") {
  const int N = 16;
  CHECK(exceptional_set({GridFunction(2, N)}, Rational(1, 32), 0).empty());
  CHECK(exceptional_set({}, Rational(1, 32), 0).empty());

  auto Rp = rect({2, 1}, {1, 1});
  auto Y = indicator(Rp, N) * 0.3;
  for (int d3 : {0, 4, 8, 16}) {
    const Rational delta(1, 16);
    OpenSet E = exceptional_set({Y}, delta, d3);
    const double thr = to_double(delta) * std::exp2(d3 / 8.0);
    // brute force: average of 0.3 1_{R'} over every dyadic rectangle down to the pixel scale
    std::vector<char> cell(N * N, 0);
    for (int l0 = 0; l0 <= 4; ++l0)
      for (int l1 = 0; l1 <= 4; ++l1)
        for (int j0 = 0; j0 < (1 << l0); ++j0)
          for (int j1 = 0; j1 < (1 << l1); ++j1) {
            auto S = rect({l0, l1}, {j0, j1});
            auto ind = indicator(S, N);
            double avg = 0;
            for (std::size_t i = 0; i < ind.size(); ++i) avg += ind.values()[i].real() * Y.values()[i].real();
            avg /= ind.values().size() * to_double(S.volume());
            if (avg > thr)
              for (std::size_t i = 0; i < ind.size(); ++i)
                if (ind.values()[i].real() > 0) cell[i] = 1;
          }
    std::vector<Box> boxes;
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b)
        if (cell[a * N + b]) boxes.push_back(rect({4, 4}, {a, b}).box());
    CHECK(E == OpenSet::from_boxes(2, boxes));
  }

  // |E| decreases as |d3| grows, at fixed data
  auto fam = build_family(32, 2);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<GridFunction> Ys;
    for (int k = 0; k < 3; ++k) {
      GridFunction g(2, 32);
      for (int r = 0; r < 4; ++r) {
        auto S = rect({static_cast<int>(rng() % 5), static_cast<int>(rng() % 5)}, {0, 0});
        g = g + indicator(S, 32) * (0.05 * (1 + rng() % 10));
      }
      Ys.push_back(g);
    }
    Rational prev = 1;
    for (int d3 = 0; d3 <= 24; d3 += 4) {
      Rational m = exceptional_set(Ys, Rational(1, 32), d3).measure();
      CHECK(m <= prev);
      prev = m;
    }
  }

  // integral off E of an indicator
  OpenSet half = OpenSet::from_box(rect({1, 0}, {0, 0}).box());
  CHECK(integral_off(indicator(rect({0, 1}, {0, 0}), 8) * 2.0, half) == doctest::Approx(1.0));
}

TEST_CASE("bounds report") {
  auto fam = build_family(32, 2);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    auto c = random_coeffs(fam, 6, 3, rng);
    auto rep = bounds_report(c, fam, Deltas{}, JourneConfig{});
    CHECK(rep.violations.empty());
    for (const auto& v : rep.violations) MESSAGE(v);
    std::map<std::string, const BoundRow*> global;
    for (const auto& r : rep.rows)
      if (r.klass == "global") global[r.name] = &r;
    REQUIRE(global.count("bessel"));
    CHECK(global["bessel"]->lhs == doctest::Approx(global["bessel"]->rhs).epsilon(1e-10));
    CHECK(global["v_l2"]->exact);
    CHECK(global["v_l2"]->holds);
    const double sh = global["shadow_normalization"]->lhs;
    CHECK((sh > 0.5 && sh <= 1.0));
    // the littlewood-paley chain: sum beta^2 <= ||S||_4^2 |sh|^{1/2}
    CHECK(global["u_square_l4"]->holds);
    std::size_t pairs = 0;
    for (const auto& ps : rep.sets) pairs += ps.pairs.size();
    CHECK(pairs + rep.unclassified_pairs == rep.uvw.Wcoll.size() * rep.uvw.U.size());
    for (const auto& r : rep.rows)
      if (r.name == "orthogonality") CHECK(r.holds);
    auto csv = rows_to_csv(rep.rows);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(rep.rows.size() + 1));
  }

  // a coarse U rectangle and small rectangles above it give classes with J = {1}
  auto fam64 = build_family(64, 2);
  WaveletCoeffs c{2, 64,
                  {{rect({0, 1}, {0, 0}), 1.0},
                   {rect({4, 1}, {3, 1}), 0.1},
                   {rect({4, 1}, {9, 1}), cplx(0, 0.1)},
                   {rect({3, 2}, {1, 3}), 0.05}}};
  auto rep = bounds_report(c, fam64, Deltas{}, JourneConfig{});
  CHECK(rep.violations.empty());
  REQUIRE(rep.uvw.U.size() == 1);
  bool with_J = false;
  for (const auto& ps : rep.sets) with_J |= ps.cls.J == 0b01;
  CHECK(with_J);
  int orth_rows = 0;
  for (const auto& r : rep.rows)
    if (r.name == "orthogonality") {
      ++orth_rows;
      CHECK(r.holds);
    }
  CHECK(orth_rows > 0);

  auto zero = bounds_report(WaveletCoeffs{2, 32, {}}, fam, Deltas{}, JourneConfig{});
  REQUIRE_FALSE(zero.rows.empty());
  for (const auto& r : zero.rows) CHECK((r.lhs == 0 && r.rhs == 0));
}
