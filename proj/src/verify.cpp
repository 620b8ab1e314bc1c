// The verify suite: small deterministic instances of every module with
// exact or tight checks. Each check returns the first failure it meets.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hankelab/harness.hpp"
#include "hankelab/hankel.hpp"
#include "hankelab/journe.hpp"
#include "hankelab/maximal.hpp"
#include "hankelab/paraproduct.hpp"

namespace hankelab {

namespace {

struct Failure {
  std::string msg;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

std::function<std::string()> guarded(std::function<void()> body) {
  return [body = std::move(body)]() -> std::string {
    try {
      body();
    } catch (const Failure& f) {
      return f.msg;
    }
    return {};
  };
}

DyadicRectangle rect(std::vector<int> levels, std::vector<std::int64_t> offs) { return plain_rect(levels, offs); }

Box interval_box(Rational lo, Rational hi) { return {Interval{lo, hi}}; }

/// U together with every plain dyadic rectangle R meeting [0,1)^n with
/// levels in [-3, max_level] and |R ∩ U| > lambda |R|. U must lie in the
/// unit cube; a negative level l is the single interval [0, 2^{-l}).
OpenSet brute_strong(const OpenSet& U, int n, const Rational& lambda, int max_level) {
  std::vector<Box> boxes = U.boxes();
  std::vector<int> lv(n, -3);
  auto count = [](int l) { return l < 0 ? std::int64_t{1} : std::int64_t{1} << l; };
  while (true) {
    std::vector<std::int64_t> off(n, 0);
    while (true) {
      auto R = plain_rect(lv, off);
      if (U.measure_within(R.box()) > lambda * R.volume()) boxes.push_back(R.box());
      int c = 0;
      while (c < n && ++off[c] == count(lv[c])) off[c++] = 0;
      if (c == n) break;
    }
    int c = 0;
    while (c < n && ++lv[c] > max_level) lv[c++] = -3;
    if (c == n) break;
  }
  return OpenSet::from_boxes(n, boxes);
}

WaveletCoeffs gaussian_coeffs(int n, int N, std::span<const DyadicRectangle> rects, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  WaveletCoeffs c{n, N, {}};
  for (const auto& R : rects) c.map[R] = cplx(g(rng), g(rng));
  return c;
}

RectCollection sample_collection(int n, int depth, int count, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.n = n;
  cfg.depth = depth;
  cfg.collection_size = count;
  cfg.seed = seed;
  return generate_collection(cfg, 0);
}

void check_grids() {
  auto iv = grid_interval_endpoints(GridId::plain(), -1, 1);
  expect(iv.lo == Rational(1, 2) && iv.hi == 1, "plain endpoints of (k=-1, j=1)");
  auto sh = grid_interval_endpoints(GridId::shifted(2, 0, 1), 0, 0);
  expect(sh.lo == Rational(1, 5) && sh.hi == Rational(6, 5), "shifted endpoints of D_{2,0,1/5}");
  for (int d = 1; d <= 3; ++d)
    for (const auto& g : shifted_family(d)) expect(verify_grid_nesting(g, 4), "grid nesting at d=" + std::to_string(d));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    Rational lo(static_cast<long>(rng() % 997), 997);
    Rational len(1 + static_cast<long>(rng() % 300), 1009);
    Interval I{lo, lo + len};
    auto J = cover_in_S(I);
    Rational c = I.center();
    expect(J.lo() <= I.lo && J.hi() >= I.hi, "cover_in_S misses the interval");
    expect(J.lo() >= c - 2 * len && J.hi() <= c + 2 * len, "cover_in_S leaves 4I");
  }
}

void check_geometry() {
  std::vector<DyadicRectangle> rs = {rect({1, 1}, {0, 0}), rect({2, 0}, {0, 0})};
  expect(shadow(2, rs).measure() == Rational(3, 8), "shadow of two overlapping rectangles");
  auto R = rect({2, 1}, {1, 0});
  const int coords[] = {0, 1};
  auto D = dilate_rect(R, Rational(2), coords);
  expect(box_volume(D) == 4 * R.volume(), "dilation volume");
  for (int c = 0; c < 2; ++c) expect(D[c].center() == R.box()[c].center(), "dilation keeps centers");
}

void check_maximal() {
  auto U1 = OpenSet::from_boxes(1, std::vector<Box>{interval_box(0, Rational(1, 4)),
                                                     interval_box(Rational(3, 8), Rational(1, 2))});
  for (Rational lambda : {Rational(1, 2), Rational(1, 4), Rational(2, 3)}) {
    expect(superlevel_grid(U1, GridId::plain(), lambda) == brute_strong(U1, 1, lambda, 10),
           "1-D superlevel set differs from enumeration at lambda=" + to_string(lambda));
    expect(superlevel_strong(U1, lambda) == brute_strong(U1, 1, lambda, 10), "strong superlevel in 1-D");
  }
  // directional: apply the 1-D operator to each horizontal fiber by hand
  Box a = {Interval{0, Rational(1, 4)}, Interval{0, 1}};
  Box b = {Interval{Rational(1, 2), Rational(3, 4)}, Interval{0, Rational(1, 2)}};
  auto U2 = OpenSet::from_boxes(2, std::vector<Box>{a, b});
  const Rational lambda(1, 3);
  auto lower = superlevel_grid(OpenSet::from_boxes(1, std::vector<Box>{{a[0]}, {b[0]}}), GridId::plain(), lambda);
  auto upper = superlevel_grid(OpenSet::from_boxes(1, std::vector<Box>{{a[0]}}), GridId::plain(), lambda);
  std::vector<Box> expected;
  for (const auto& bx : lower.boxes()) expected.push_back({bx[0], Interval{0, Rational(1, 2)}});
  for (const auto& bx : upper.boxes()) expected.push_back({bx[0], Interval{Rational(1, 2), 1}});
  expect(superlevel_directional(U2, 0, GridId::plain(), lambda) == OpenSet::from_boxes(2, expected),
         "directional superlevel set differs from the fiberwise construction");
  expect(superlevel_strong(U2, lambda) == brute_strong(U2, 2, lambda, 4), "strong superlevel set in 2-D");
}

void check_journe() {
  auto coll = sample_collection(2, 3, 6, 11);
  JourneConfig cfg;
  cfg.delta = Rational(1, 3);
  auto V = enlarge(coll, cfg);
  expect(V.contains(coll.shadow()), "enlarged set contains the shadow");
  const int both[] = {0, 1};
  for (const auto& R : coll.rects()) {
    auto e = embeddedness(R, V, both);
    expect(e >= 1 && V.contains(dilate_rect(R, e, both)), "embeddedness dilation stays in V");
  }
  std::size_t members = 0;
  for (const auto& [key, cell] : few_small_partition(coll, V, 0)) members += cell.members.size();
  expect(members == coll.size(), "few-small partition loses rectangles");
  std::vector<RectCollection> subsets = {coll};
  double q = few_small_ratio(coll, V, Rational(1, 2), subsets, 0);
  expect(std::isfinite(q) && q > 0, "few_small_ratio is positive and finite");

  auto res = journe_full(coll, cfg);
  for (const auto& e : res.entries) expect(e.contained, "Emb(R) R inside V");
  Rational growth = (1 + cfg.delta) * (1 + cfg.delta);
  expect(res.V_measure <= growth * res.shadow_measure, "|V| <= (1+delta)^2 |sh|");

  auto c = gaussian_coeffs(2, 64, coll.rects(), 5);
  auto rep = journe_bmo_weights(c, coll, cfg);
  for (const auto& k : rep.classes) expect(k.holds, "class bound at k=" + std::to_string(k.k));
}

void check_wavelets() {
  auto fam = build_family(16, 2);
  auto rs = fam.rectangles();
  std::vector<GridFunction> v;
  for (const auto& R : rs) v.push_back(fam.wavelet(R));
  double gram = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i; j < v.size(); ++j) gram = std::max(gram, std::abs(inner(v[i], v[j]) - (i == j ? 1.0 : 0.0)));
  expect(gram <= 1e-10, "Gram deviation " + std::to_string(gram));
  auto c = gaussian_coeffs(2, 16, rs, 9);
  auto f = synthesize(c, fam);
  auto back = analyze(f, fam);
  double err = 0;
  for (const auto& [R, z] : c.map) err = std::max(err, std::abs(back.at(R) - z));
  expect(err <= 1e-10, "analyze(synthesize(c)) != c");
  expect(std::abs(f.norm() * f.norm() - c.l2_squared()) <= 1e-10 * c.l2_squared(), "Parseval");
  auto S = square_function(c);
  expect(std::abs(S.norm() * S.norm() - c.l2_squared()) <= 1e-10 * c.l2_squared(), "square function energy");
}

void check_norms() {
  auto R = rect({1, 1}, {0, 0});
  WaveletCoeffs one{2, 64, {{R, cplx(2, 0)}}};
  expect(std::abs(carleson_ratio(one, OpenSet::from_box(R.box())) - 4.0) <= 1e-12, "carleson ratio of one rectangle");
  WaveletCoeffs pair{2, 64, {{rect({0, 1}, {0, 0}), 1.0}, {rect({0, 1}, {0, 1}), 1.0}}};
  expect(std::abs(bmo_minus1(pair, BmoStrategy::kExhaustive).value - std::sqrt(2.0)) <= 1e-12, "BMO_-1 example");
  std::mt19937_64 rng(21);
  for (int t = 0; t < 5; ++t) {
    std::vector<DyadicRectangle> rs;
    for (int i = 0; i < 7; ++i) rs.push_back(random_rect(2, 3, rng));
    auto c = gaussian_coeffs(2, 64, rs, t);
    double s = bmo_estimate(c, BmoStrategy::kSingleRect).value;
    double g = bmo_estimate(c, BmoStrategy::kGreedy).value;
    double e = bmo_estimate(c, BmoStrategy::kExhaustive).value;
    double m = bmo_minus1(c, BmoStrategy::kExhaustive).value;
    expect(s <= g * (1 + 1e-12) && g <= e * (1 + 1e-12), "strategy dominance chain");
    expect(m <= e * (1 + 1e-12), "BMO_-1 <= BMO");
  }
  std::map<DyadicRectangle, double> a = {{R, to_double(R.volume())}};
  auto W = OpenSet::from_box(R.box());
  std::vector<OpenSet> tests = {W};
  expect(std::abs(john_nirenberg_check(a, W, 4.0, tests) - 1.0) <= 1e-12, "John-Nirenberg ratio of one rectangle");
}

GridFunction symbol(int n, int N, int max_level, std::uint64_t seed) {
  WaveletFamily fam(N, n);
  std::mt19937_64 rng(seed);
  std::vector<DyadicRectangle> rs;
  for (int i = 0; i < 5; ++i) rs.push_back(random_rect(n, max_level, rng));
  return synthesize(gaussian_coeffs(n, N, rs, seed), fam);
}

void check_hankel() {
  auto b = symbol(2, 32, 2, 4);
  // a function with mass in every quadrant: b + conj(b) + mixed terms
  auto mixed = project_nonzero(b + b.conj() + multiply(b, symbol(2, 32, 1, 5).conj()));
  GridFunction sum(2, 32);
  for (const auto& s : SignPattern::all(2)) sum = sum + project_sigma(mixed, s);
  expect((sum - mixed).norm() <= 1e-12 * mixed.norm(), "sign projections sum to the identity");

  auto A = hankel_matrix(b);
  double nrm = operator_norm(A);
  double fro = A.M.norm(), col = 0;
  for (Eigen::Index j = 0; j < A.M.cols(); ++j) col = std::max(col, A.M.col(j).norm());
  expect(nrm <= fro * (1 + 1e-12) && nrm >= col * (1 - 1e-12), "operator norm between column and Frobenius norms");

  for (int n : {1, 2}) {
    auto bn = symbol(n, 32, 1, 6 + n);
    auto nested = commutator_matrix(bn, CommutatorMethod::kNested, 4);
    auto psum = commutator_matrix(bn, CommutatorMethod::kProjectionSum, 4);
    double sign = n % 2 ? 1.0 : -1.0;  // (-1)^{n+1}
    expect((nested.M - sign * psum.M).cwiseAbs().maxCoeff() <= 1e-12, "commutator identity at n=" + std::to_string(n));
  }

  auto f = symbol(2, 32, 1, 12), g = symbol(2, 32, 1, 13);
  auto lhs = duality_pair(b, f, g);
  auto A6 = hankel_matrix(b, HankelOptions{6});
  Eigen::VectorXcd fv(A6.M.cols()), gv(A6.M.rows());
  auto coef = [](const GridFunction& h, std::vector<int> xi) {
    auto H = h.to_frequency();
    for (int& x : xi) x = ((x % H.N()) + H.N()) % H.N();
    return H.values()[H.flat(xi)];
  };
  for (Eigen::Index c = 0; c < fv.size(); ++c) fv(c) = coef(f, A6.domain[c]);
  for (Eigen::Index r = 0; r < gv.size(); ++r) {
    auto xi = A6.codomain[r];
    for (int& x : xi) x = -x;
    gv(r) = coef(g, xi);
  }
  cplx via = (A6.M * fv).cwiseProduct(gv).sum();
  expect(std::abs(lhs - via) <= 1e-10 * std::max(1.0, std::abs(lhs)), "duality pairing through the Hankel matrix");

  std::vector<cplx> hv(32, 0);
  hv[0] = 3;
  hv[1] = 1;
  auto io = inner_outer_factor(GridFunction(1, 32, hv, GridFunction::Rep::kFrequency));
  expect(io.residual <= 1e-8, "inner-outer residual");
  auto in = io.inner.to_space();
  for (const auto& z : in.values()) expect(std::abs(std::abs(z) - 1) <= 1e-8, "inner factor is unimodular");

  WaveletFamily fam(32, 2);
  WaveletCoeffs c{2, 32, {{rect({1, 0}, {1, 0}), 1.0}, {rect({1, 2}, {1, 3}), cplx(0, 0.5)}, {rect({1, 1}, {1, 0}), -0.25}}};
  auto wf = weak_factorization_witness(c, fam, synthesize(c, fam));
  expect(wf.residual <= 1e-6, "weak factorization residual");
  expect(wf.pairing_error <= 1e-10, "weak factorization pairing");
}

WaveletCoeffs paraproduct_instance() {
  return WaveletCoeffs{2, 64,
                       {{rect({0, 1}, {0, 0}), 1.0},
                        {rect({4, 1}, {3, 1}), 0.1},
                        {rect({4, 1}, {9, 1}), cplx(0, 0.1)},
                        {rect({3, 2}, {1, 3}), 0.05}}};
}

void check_paraproduct() {
  auto fam = build_family(64, 2);
  auto c = paraproduct_instance();
  Deltas deltas;
  JourneConfig jc;
  jc.delta = deltas.delta_journe;
  auto uvw = build_UVW(c, fam, deltas, jc);
  expect(!uvw.U.empty(), "nonempty U");
  for (const auto& R : uvw.Vcoll) expect(uvw.V_set.contains(R.box()), "V rectangles lie in V");
  for (const auto& R : uvw.Wcoll) expect(!uvw.V_set.contains(R.box()), "W rectangles leave V");

  expect(prec_J(rect({5, 1}, {20, 1}), rect({1, 1}, {0, 0}), 0b01), "prec_J on a hand-computed pair");
  expect(!prec_J(rect({5, 1}, {20, 1}), rect({1, 1}, {0, 0}), 0b11), "prec_J rejects the wrong J");

  auto sets = partition_pairs(uvw);
  std::size_t pairs = 0;
  std::vector<const PairSet*> withJ;
  for (const auto& ps : sets) {
    pairs += ps.pairs.size();
    for (const auto& [Rp, R] : ps.pairs) expect(prec_J(Rp, R, ps.cls.J), "pair outside its class");
    if (ps.cls.J == 0b01) withJ.push_back(&ps);
  }
  expect(!withJ.empty(), "the instance has J={0} classes");
  const PairSet& ps = *withJ.front();
  auto Xt = assemble_bilinear(c, fam, ps, Bilinear::kXtilde).to_space();
  auto Y = assemble_bilinear(c, fam, ps, Bilinear::kY).to_space();
  for (std::size_t i = 0; i < Y.values().size(); ++i)
    expect(std::abs(Y.values()[i]) <= std::abs(Xt.values()[i]) + 1e-12, "Y is dominated by Xtilde");
  auto X = assemble_bilinear(c, fam, ps, Bilinear::kX);
  expect(std::isfinite(X.norm()), "X assembles");

  auto orth = orthogonality_check(withJ, fam);
  expect(orth.max_vanishing <= 1e-10, "vanishing products");

  Rational prev = 2;
  for (int d3 : {0, 8, 16}) {
    auto E = exceptional_set({Y}, deltas.delta_minus1, d3);
    expect(E.measure() <= prev && E.measure() <= 1, "exceptional sets shrink with d3");
    prev = E.measure();
  }

  auto rep = bounds_report(c, fam, deltas, jc);
  expect(rep.violations.empty(), "bounds report violation: " + (rep.violations.empty() ? "" : rep.violations[0]));
  std::size_t classified = 0;
  for (const auto& s : rep.sets) classified += s.pairs.size();
  expect(classified + rep.unclassified_pairs == rep.uvw.Wcoll.size() * rep.uvw.U.size(), "pair recount");
  expect(pairs == classified, "partition agrees with the report");
}

void check_harness() {
  ExperimentConfig cfg;
  cfg.n = 1;
  cfg.N = 32;
  cfg.depth = 3;
  cfg.trials = 3;
  cfg.support = 4;
  cfg.threads = 1;
  auto c0 = generate_coeffs(cfg, 0), c0b = generate_coeffs(cfg, 0), c1 = generate_coeffs(cfg, 1);
  expect(c0.map == c0b.map, "generator determinism");
  expect(c0.map != c1.map, "trials draw distinct instances");
  cfg.n = 3;
  auto coll = generate_collection(cfg, 2);
  for (const auto& R : coll.rects())
    for (const auto& s : R.sides) expect(-s.k <= cfg.depth && s.lo() >= 0 && s.hi() <= 1, "walk stays in the cube");
  cfg.n = 1;

  auto r = run_experiment(cfg, ExperimentKind::kEquivalence);
  expect(r.ok(), "tiny equivalence run");
  expect(r.json["trials"].size() == 3 && r.csv_rows.size() == 3, "one row per trial");
  auto parsed = ojson::parse(render_report(r, ReportFormat::kJson));
  expect(parsed == r.json, "JSON round trip");
  auto empty = ojson::parse(render_report(empty_report(ExperimentKind::kJourne), ReportFormat::kJson));
  expect(empty["schema"] == "v1" && empty["trials"].empty(), "empty report shell");
}

}  // namespace

const std::vector<VerifyCheck>& verify_registry() {
  static const std::vector<VerifyCheck> checks = {
      {"dyadic.grids", {"dyadic.grid_interval_endpoints", "dyadic.verify_grid_nesting", "dyadic.cover_in_S"},
       guarded(check_grids)},
      {"dyadic.geometry", {"dyadic.shadow", "dyadic.dilate_rect"}, guarded(check_geometry)},
      {"maximal.superlevel",
       {"maximal.superlevel_grid", "maximal.superlevel_directional", "maximal.superlevel_strong"},
       guarded(check_maximal)},
      {"journe.lemmas",
       {"journe.enlarge", "journe.embeddedness", "journe.few_small_partition", "journe.few_small_ratio",
        "journe.journe_full", "journe.journe_bmo_weights"},
       guarded(check_journe)},
      {"wavelet.basis", {"wavelet.build_family", "wavelet.analyze", "wavelet.synthesize", "wavelet.square_function"},
       guarded(check_wavelets)},
      {"norms.estimates",
       {"norms.carleson_ratio", "norms.bmo_estimate", "norms.bmo_minus1", "norms.john_nirenberg_check"},
       guarded(check_norms)},
      {"hankel.operators",
       {"hankel.project_sigma", "hankel.hankel_matrix", "hankel.operator_norm", "hankel.commutator_matrix",
        "hankel.duality_pair", "hankel.inner_outer_factor", "hankel.weak_factorization_witness"},
       guarded(check_hankel)},
      {"paraproduct.pipeline",
       {"paraproduct.build_UVW", "paraproduct.prec_J", "paraproduct.partition_pairs", "paraproduct.assemble_bilinear",
        "paraproduct.orthogonality_check", "paraproduct.exceptional_set", "paraproduct.bounds_report"},
       guarded(check_paraproduct)},
      {"harness.plumbing", {"harness.generate_instance", "harness.run_experiment", "harness.emit_report"},
       guarded(check_harness)},
  };
  return checks;
}

const std::vector<std::string>& operation_catalog() {
  static const std::vector<std::string> ops = {
      "dyadic.grid_interval_endpoints", "dyadic.verify_grid_nesting", "dyadic.shadow", "dyadic.dilate_rect",
      "dyadic.cover_in_S", "maximal.superlevel_grid", "maximal.superlevel_directional", "maximal.superlevel_strong",
      "journe.enlarge", "journe.embeddedness", "journe.few_small_partition", "journe.few_small_ratio",
      "journe.journe_full", "journe.journe_bmo_weights", "wavelet.build_family", "wavelet.analyze",
      "wavelet.synthesize", "wavelet.square_function", "norms.carleson_ratio", "norms.bmo_estimate",
      "norms.bmo_minus1", "norms.john_nirenberg_check", "hankel.project_sigma", "hankel.hankel_matrix",
      "hankel.operator_norm", "hankel.commutator_matrix", "hankel.duality_pair", "hankel.inner_outer_factor",
      "hankel.weak_factorization_witness", "paraproduct.build_UVW", "paraproduct.prec_J",
      "paraproduct.partition_pairs", "paraproduct.assemble_bilinear", "paraproduct.orthogonality_check",
      "paraproduct.exceptional_set", "paraproduct.bounds_report", "harness.run_experiment",
      "harness.generate_instance", "harness.emit_report"};
  return ops;
}

std::vector<std::string> uncovered_operations() {
  std::set<std::string> seen;
  for (const auto& c : verify_registry()) seen.insert(c.ops.begin(), c.ops.end());
  std::vector<std::string> out;
  for (const auto& op : operation_catalog())
    if (!seen.count(op)) out.push_back(op);
  return out;
}

}  // namespace hankelab
