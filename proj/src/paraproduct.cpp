#include "hankelab/paraproduct.hpp"

#include <algorithm>
#include <limits>
#include <tuple>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hankelab/maximal.hpp"

namespace hankelab {

namespace {

int log2_len(const GridInterval& side) { return side.grid.exponent(side.k); }

double beta(const WaveletCoeffs& c, const DyadicRectangle& R) { return std::abs(c.at(R)); }

double volume(const DyadicRectangle& R) { return to_double(R.volume()); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) h = (h ^ ch) * 1099511628211ull;
  return h;
}

int grid_log2(int N) {
  int L = 0;
  while ((1 << L) < N) ++L;
  return L;
}

}  // namespace

void Deltas::validate() const {
  for (const Rational* d : {&delta_minus1, &delta_journe, &delta_2, &delta_3})
    if (*d <= 0 || *d >= 1) throw std::invalid_argument("deltas must lie in (0, 1)");
}

UVW build_UVW(const WaveletCoeffs& coeffs, const WaveletFamily& fam, const Deltas& deltas, const JourneConfig& cfg,
              int max_level) {
  deltas.validate();
  const auto support = coeffs.pruned(0.0);
  if (support.map.empty()) throw std::invalid_argument("degenerate witness");
  UVW out;
  out.n = coeffs.n;

  out.exact_witness = support.map.size() <= kExhaustiveLimit;
  const auto est = bmo_estimate(support, out.exact_witness ? BmoStrategy::kExhaustive : BmoStrategy::kGreedy);
  if (est.value == 0 || est.witness_set.measure() == 0) throw std::invalid_argument("degenerate witness");
  out.bmo = est.value;
  out.scale = std::ldexp(1.0, est.rescale_exponent);
  for (const auto& [R, v] : support.map)
    if (est.witness_set.contains(R.box())) out.U.push_back(R);
  out.shadow_U = shadow(out.n, out.U);

  JourneConfig jc = cfg;
  jc.delta = deltas.delta_journe;
  out.journe = journe_full(RectCollection(out.n, out.U), jc);
  out.V_set = out.journe.V;
  for (const auto& e : out.journe.entries) {
    const int d1 = floor_log2(e.emb);
    out.d1_of[e.rect] = d1;
    out.U_d1[d1].push_back(e.rect);
  }

  const std::set<DyadicRectangle> in_U(out.U.begin(), out.U.end());
  for (const auto& R : fam.rectangles()) {
    if (max_level >= 0 &&
        std::any_of(R.sides.begin(), R.sides.end(), [&](const GridInterval& s) { return -s.k > max_level; }))
      continue;
    if (in_U.count(R)) continue;
    const Box b = R.box();
    if (out.V_set.contains(b)) {
      if (!out.shadow_U.contains(b)) out.Vcoll.push_back(R);
      continue;
    }
    for (const auto& S : out.U) {
      bool close = true;
      for (int j = 0; j < out.n && close; ++j) close = log2_len(R.sides[j]) < log2_len(S.sides[j]) + 3;
      if (close) {
        out.Wcoll.push_back(R);
        break;
      }
    }
  }
  return out;
}

bool prec_J(const DyadicRectangle& Rp, const DyadicRectangle& R, CoordSet J) {
  if (Rp.n() != R.n()) throw std::invalid_argument("prec_J: dimension mismatch");
  for (int j = 0; j < R.n(); ++j) {
    const int a = log2_len(Rp.sides[j]);
    const int b = log2_len(R.sides[j]);
    if (J >> j & 1u) {
      if (!(a + 3 < b)) return false;
    } else if (b < a - 3 || b > a + 3) {
      return false;
    }
  }
  return true;
}

std::optional<CoordSet> relation_set(const DyadicRectangle& Rp, const DyadicRectangle& R) {
  CoordSet J = 0;
  for (int j = 0; j < R.n(); ++j)
    if (log2_len(Rp.sides[j]) + 3 < log2_len(R.sides[j])) J |= 1u << j;
  if (prec_J(Rp, R, J)) return J;
  return std::nullopt;
}

int containment_exponent(const DyadicRectangle& Rp, const DyadicRectangle& R) {
  int t = 0;
  for (int j = 0; j < R.n(); ++j) {
    const Interval s = R.sides[j].interval();
    const Interval p = Rp.sides[j].interval();
    const Rational c = s.center();
    const Rational need = std::max(Rational(c - p.lo), Rational(p.hi - c));
    const Rational half = s.length() / 2;
    while (pow2(t) * half < need) ++t;
  }
  return t;
}

int PairClass::d3_norm() const { return std::accumulate(d3.begin(), d3.end(), 0); }

std::string PairClass::key() const {
  std::ostringstream os;
  os << "d1=" << d1 << ";J={";
  bool first = true;
  for (int j = 0; j < 32; ++j)
    if (J >> j & 1u) os << (first ? "" : ",") << j + 1, first = false;
  os << "};d2=" << d2 << ";ell=(";
  for (std::size_t i = 0; i < ell.size(); ++i) os << (i ? "," : "") << ell[i];
  os << ");d3=(";
  for (std::size_t i = 0; i < d3.size(); ++i) os << (i ? "," : "") << d3[i];
  os << ")";
  return os.str();
}

std::size_t PairSet::max_partners() const {
  std::size_t m = 0;
  for (const auto& [Rp, list] : partners) m = std::max(m, list.size());
  return m;
}

std::vector<PairSet> partition_pairs(const UVW& uvw, std::uint64_t seed, std::size_t max_branches) {
  std::map<PairClass, PairSet> cells;
  for (const auto& Rp : uvw.Wcoll)
    for (const auto& [d1, members] : uvw.U_d1)
      for (const auto& R : members) {
        auto J = relation_set(Rp, R);
        if (!J) continue;
        PairClass cls;
        cls.d1 = d1;
        cls.J = *J;
        cls.d2 = containment_exponent(Rp, R) - 1;
        for (int j = 0; j < uvw.n; ++j)
          if (*J >> j & 1u) {
            cls.ell.push_back(log2_len(Rp.sides[j]));
            cls.d3.push_back(log2_len(R.sides[j]) - log2_len(Rp.sides[j]));
          }
        auto& ps = cells[cls];
        ps.cls = cls;
        ps.pairs.emplace_back(Rp, R);
      }

  std::vector<PairSet> out;
  for (auto& [cls, ps] : cells) {
    std::sort(ps.pairs.begin(), ps.pairs.end());
    for (const auto& [Rp, R] : ps.pairs) ps.partners[Rp].push_back(R);
    const std::size_t count = ps.max_partners();
    std::vector<std::size_t> picks(count);
    std::iota(picks.begin(), picks.end(), 0);
    if (count > max_branches) {
      std::mt19937_64 rng(seed ^ fnv1a(cls.key()));
      std::shuffle(picks.begin(), picks.end(), rng);
      picks.resize(max_branches);
      std::sort(picks.begin(), picks.end());
    }
    std::set<RectPair> covered;
    for (auto i : picks) {
      std::map<DyadicRectangle, DyadicRectangle> pi;
      for (const auto& [Rp, list] : ps.partners) {
        pi.emplace(Rp, list[i % list.size()]);
        covered.emplace(Rp, list[i % list.size()]);
      }
      ps.branches.push_back(std::move(pi));
    }
    ps.coverage = static_cast<double>(covered.size()) / static_cast<double>(ps.pairs.size());
    out.push_back(std::move(ps));
  }
  return out;
}

GridFunction indicator(const DyadicRectangle& R, int N) {
  const int n = R.n();
  GridFunction f(n, N);
  std::vector<std::int64_t> lo(n), len(n);
  for (int a = 0; a < n; ++a) {
    const int e = log2_len(R.sides[a]);
    if (e > 0 || -e > grid_log2(N)) throw std::invalid_argument("indicator: side not resolved by the grid");
    len[a] = static_cast<std::int64_t>(N) >> -e;
    lo[a] = R.sides[a].j * len[a];
    if (!R.sides[a].grid.is_plain() || lo[a] < 0 || lo[a] + len[a] > N)
      throw std::invalid_argument("indicator: side outside [0, 1)");
  }
  std::vector<std::int64_t> t(n, 0);
  auto& v = f.values();
  while (true) {
    std::size_t flat = 0;
    for (int a = 0; a < n; ++a) flat = flat * N + static_cast<std::size_t>(lo[a] + t[a]);
    v[flat] = 1.0;
    int a = n - 1;
    for (; a >= 0; --a) {
      if (++t[a] < len[a]) break;
      t[a] = 0;
    }
    if (a < 0) break;
  }
  return f;
}

GridFunction anti_analytic(const GridFunction& f) {
  GridFunction F = f.to_frequency();
  const int n = F.n();
  const int N = F.N();
  auto& v = F.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t rest = i;
    bool keep = true;
    for (int a = 0; a < n; ++a) {
      const int idx = static_cast<int>(rest % N);
      rest /= N;
      keep &= idx > N / 2;
    }
    if (!keep) v[i] = 0;
  }
  return F.to_space();
}

GridFunction assemble_bilinear(const WaveletCoeffs& coeffs, const WaveletFamily& fam, const PairSet& ps,
                               Bilinear variant, std::size_t branch) {
  GridFunction out(fam.n(), fam.N());
  for (const auto& [Rp, R] : ps.pairs)
    if (!fam.admissible(Rp) || !fam.admissible(R)) throw std::invalid_argument("coverage gap");
  auto add_block = [&](const DyadicRectangle& Rp, const DyadicRectangle& R) {
    const double w = beta(coeffs, Rp) * beta(coeffs, R) / std::sqrt(volume(Rp) * volume(R));
    if (w != 0) out = out + indicator(Rp, fam.N()) * w;
  };
  switch (variant) {
    case Bilinear::kX: {
      std::map<DyadicRectangle, GridFunction> cache;
      auto wave = [&](const DyadicRectangle& R) -> const GridFunction& {
        auto it = cache.find(R);
        if (it == cache.end()) it = cache.emplace(R, fam.wavelet(R)).first;
        return it->second;
      };
      for (const auto& [Rp, R] : ps.pairs) {
        const cplx a = coeffs.at(Rp);
        const cplx b = coeffs.at(R);
        if (a == 0.0 || b == 0.0) continue;
        out = out + multiply(wave(Rp).conj(), wave(R)) * (std::conj(a) * b);
      }
      break;
    }
    case Bilinear::kXtilde:
      for (const auto& [Rp, R] : ps.pairs) add_block(Rp, R);
      break;
    case Bilinear::kY:
      if (ps.branches.empty()) break;
      if (branch >= ps.branches.size()) throw std::out_of_range("assemble_bilinear: branch index");
      for (const auto& [Rp, R] : ps.branches[branch]) add_block(Rp, R);
      break;
  }
  return out;
}

OrthogonalityReport orthogonality_check(const std::vector<const PairSet*>& sets, const WaveletFamily& fam,
                                        std::size_t max_pairs) {
  OrthogonalityReport rep;
  std::vector<RectPair> pairs;
  std::optional<CoordSet> J;
  for (const auto* ps : sets) {
    if (J && *J != ps->cls.J) throw std::invalid_argument("orthogonality_check: pair sets with different J");
    J = ps->cls.J;
    pairs.insert(pairs.end(), ps->pairs.begin(), ps->pairs.end());
  }
  if (!J || *J == 0) return rep;

  std::map<DyadicRectangle, GridFunction> cache;
  auto wave = [&](const DyadicRectangle& R) -> const GridFunction& {
    auto it = cache.find(R);
    if (it == cache.end()) it = cache.emplace(R, fam.wavelet(R)).first;
    return it->second;
  };
  auto product = [&](const RectPair& p) { return multiply(wave(p.first), wave(p.second).conj()); };

  for (const auto& p : pairs) {
    rep.max_vanishing = std::max(rep.max_vanishing, anti_analytic(product(p)).norm());
    ++rep.vanishing_checked;
  }

  std::vector<RectPair> sample;
  const std::size_t stride = std::max<std::size_t>(1, (pairs.size() + max_pairs - 1) / std::max<std::size_t>(1, max_pairs));
  for (std::size_t i = 0; i < pairs.size(); i += stride) sample.push_back(pairs[i]);
  std::vector<GridFunction> prods;
  prods.reserve(sample.size());
  for (const auto& p : sample) prods.push_back(product(p));
  const int n = fam.n();
  for (std::size_t a = 0; a < sample.size(); ++a)
    for (std::size_t b = 0; b < sample.size(); ++b) {
      bool gap = false;
      for (int j = 0; j < n && !gap; ++j)
        gap = (*J >> j & 1u) && log2_len(sample[a].first.sides[j]) + 4 < log2_len(sample[b].first.sides[j]);
      if (!gap) continue;
      ++rep.separated_pairs;
      rep.max_inner = std::max(rep.max_inner, std::abs(inner(prods[a], prods[b])));
    }
  return rep;
}

OpenSet exceptional_set(const std::vector<GridFunction>& Ys, const Rational& delta_minus1, int d3_norm) {
  if (Ys.empty()) return OpenSet();
  const int n = Ys.front().n();
  const int N = Ys.front().N();
  const double threshold = to_double(delta_minus1) * std::exp2(d3_norm / 8.0);
  OpenSet E(n);
  for (const auto& Y : Ys) {
    PixelFunction f;
    f.depth.assign(n, grid_log2(N));
    f.origin.assign(n, Rational(0));
    f.extent.assign(n, N);
    f.values.resize(Y.size());
    const auto& v = Y.values();
    for (std::size_t i = 0; i < v.size(); ++i) f.values[i] = std::abs(v[i]);
    E = E.unite(superlevel_strong_function(f, threshold, 0));
  }
  return E.intersect(OpenSet::from_box(Box(n, Interval{0, 1})));
}

double integral_off(const GridFunction& f, const OpenSet& E) {
  const int n = f.n();
  const int N = f.N();
  const auto& v = f.values();
  const Rational w = Rational(1, N);
  double total = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    Box cell(n);
    std::size_t rest = i;
    for (int a = n - 1; a >= 0; --a) {
      const auto t = static_cast<std::int64_t>(rest % N);
      rest /= N;
      cell[a] = Interval{w * t, w * (t + 1)};
    }
    const double outside = E.empty() ? to_double(box_volume(cell))
                                     : to_double(box_volume(cell) - E.measure_within(cell));
    total += std::norm(v[i]) * outside;
  }
  return total;
}

double BoundRow::ratio() const {
  if (lhs == 0) return 0.0;
  // a right side at rounding level relative to the left is a vanishing one
  if (std::abs(rhs) <= 1e-12 * std::abs(lhs)) return std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

namespace {

WaveletCoeffs restrict_to(const WaveletCoeffs& c, const std::vector<DyadicRectangle>& rects) {
  WaveletCoeffs out{c.n, c.N, {}};
  for (const auto& R : rects) {
    const cplx v = c.at(R);
    if (v != 0.0) out.map[R] = v;
  }
  return out;
}

double beta_sq_sum(const WaveletCoeffs& c, const std::vector<DyadicRectangle>& rects) {
  double s = 0;
  for (const auto& R : rects) s += std::norm(c.at(R));
  return s;
}

// sqrt(sum_k w_k 1_{A_k}) for weights given per rectangle A_k.
GridFunction square_sum(const std::vector<std::pair<DyadicRectangle, double>>& terms, int n, int N) {
  GridFunction g(n, N);
  for (const auto& [A, w] : terms)
    if (w != 0) g = g + indicator(A, N) * w;
  for (auto& v : g.values()) v = std::sqrt(std::max(0.0, v.real()));
  return g;
}

std::string class_key(int d1, CoordSet J, int d2) {
  PairClass c;
  c.d1 = d1;
  c.J = J;
  c.d2 = d2;
  auto k = c.key();
  return k.substr(0, k.find(";ell="));
}

std::string class_key(int d1, CoordSet J, int d2, const std::vector<int>& d3) {
  PairClass c;
  c.d1 = d1;
  c.J = J;
  c.d2 = d2;
  c.d3 = d3;
  auto k = c.key();
  return k.substr(0, k.find(";ell=")) + k.substr(k.find(";d3="));
}

constexpr const char* kGlobalRows[] = {"bessel",     "u_mass",       "shadow_normalization", "u_square_l4",
                                       "u_littlewood_paley", "u_anti_analytic", "u_delta2", "v_measure",
                                       "v_l2",       "v_l2_delta",   "v_l4",                 "v_holder",
                                       "v_bilinear", "w_bilinear",   "minus1_small"};

}  // namespace

BoundsReport bounds_report(const WaveletCoeffs& coeffs, const WaveletFamily& fam, const Deltas& deltas,
                           const JourneConfig& cfg, const BoundsOptions& opt) {
  BoundsReport rep;
  auto push = [&](std::string klass, std::string name, double lhs, double rhs, bool exact, bool equality = false) {
    BoundRow r{std::move(klass), std::move(name), lhs, rhs, exact, true};
    if (exact) {
      const double tol = 1e-10 * std::max(1.0, std::abs(rhs));
      r.holds = equality ? std::abs(lhs - rhs) <= tol : lhs <= rhs + tol;
      if (!r.holds) rep.violations.push_back(r.klass + ":" + r.name);
    }
    rep.rows.push_back(std::move(r));
  };

  if (coeffs.pruned(0.0).map.empty()) {
    for (const char* name : kGlobalRows) push("global", name, 0, 0, false);
    return rep;
  }

  rep.uvw = build_UVW(coeffs, fam, deltas, cfg, opt.max_level);
  const UVW& uvw = rep.uvw;
  const int n = uvw.n;
  const int N = fam.N();
  const double s = uvw.scale;
  auto Lp = [s](double v, double p) { return v * std::pow(s, 1.0 / p); };

  WaveletCoeffs cn = coeffs;
  for (auto& [R, v] : cn.map) v /= uvw.bmo;

  const GridFunction fU = synthesize(restrict_to(cn, uvw.U), fam);
  const GridFunction fV = synthesize(restrict_to(cn, uvw.Vcoll), fam);
  const GridFunction fW = synthesize(restrict_to(cn, uvw.Wcoll), fam);
  const double shU = to_double(uvw.shadow_U.measure());
  const double Vm = to_double(uvw.V_set.measure());
  const double dj = to_double(deltas.delta_journe);

  double dm1 = to_double(deltas.delta_minus1);
  if (n >= 2) dm1 = bmo_minus1(cn.pruned(0.0), BmoStrategy::kGreedy).value;

  // Global rows.
  const double sumU = beta_sq_sum(cn, uvw.U);
  std::vector<std::pair<DyadicRectangle, double>> sq;
  for (const auto& R : uvw.U) sq.emplace_back(R, std::norm(cn.at(R)) / volume(R));
  const GridFunction SU = square_sum(sq, n, N);
  const double anti = anti_analytic(multiply(fU, fU.conj())).norm();
  push("global", "bessel", sumU * s, fU.norm() * fU.norm() * s, true, true);
  push("global", "u_mass", sumU * s, shU * s, uvw.exact_witness, true);
  push("global", "shadow_normalization", shU * s, 1.0, true);
  push("global", "u_square_l4", sumU * s, Lp(SU.norm(4), 4) * Lp(SU.norm(4), 4) * std::sqrt(shU * s), true);
  push("global", "u_littlewood_paley", Lp(SU.norm(4), 4), Lp(fU.norm(4), 4), false);
  push("global", "u_anti_analytic", std::pow(2.0, -n) * Lp(fU.norm(4), 4) * Lp(fU.norm(4), 4), Lp(anti, 2), false);
  push("global", "u_delta2", to_double(deltas.delta_2), Lp(anti, 2), false);
  push("global", "v_measure", Vm * s, std::pow(1 + dj, n) * shU * s, true);
  const double v2 = fV.norm() * fV.norm() * s;
  push("global", "v_l2", v2, (Vm - shU) * s, uvw.exact_witness);
  push("global", "v_l2_delta", v2, dj, false);
  push("global", "v_l4", Lp(fV.norm(4), 4), std::pow(dj, 0.25), false);
  const double vb = Lp(anti_analytic(multiply(fV, fU.conj())).norm(), 2);
  push("global", "v_holder", vb, Lp(fU.norm(4), 4) * Lp(fV.norm(4), 4), true);
  push("global", "v_bilinear", vb, std::sqrt(dj), false);
  push("global", "w_bilinear", Lp(anti_analytic(multiply(fW, fU.conj())).norm(), 2), dm1, false);
  push("global", "minus1_small", dm1, to_double(deltas.delta_minus1), false);

  // Per d1.
  for (const auto& [d1, members] : uvw.U_d1) {
    const std::string k = "d1=" + std::to_string(d1);
    const auto sub = restrict_to(cn, members);
    const double b = sub.map.empty() ? 0.0
                                     : bmo_estimate(sub, sub.map.size() <= kExhaustiveLimit ? BmoStrategy::kExhaustive
                                                                                            : BmoStrategy::kGreedy)
                                           .value;
    push(k, "u_d1_bmo", b, std::pow(2.0, (n + 1) * d1) * dm1, false);
    push(k, "use1", beta_sq_sum(cn, members) * s, std::pow(2.0, 2 * (n + 1) * d1) * dm1 * dm1, false);
  }

  rep.sets = partition_pairs(uvw, opt.seed, opt.max_branches);

  // Recount of unclassified pairs.
  for (const auto& Rp : uvw.Wcoll)
    for (const auto& R : uvw.U)
      if (!relation_set(Rp, R)) ++rep.unclassified_pairs;

  // Per (d1, J, d2).
  std::map<std::tuple<int, CoordSet, int>, std::vector<const PairSet*>> by_d2;
  std::map<std::tuple<int, CoordSet, int, std::vector<int>>, std::vector<const PairSet*>> by_d3;
  for (const auto& ps : rep.sets) {
    by_d2[{ps.cls.d1, ps.cls.J, ps.cls.d2}].push_back(&ps);
    by_d3[{ps.cls.d1, ps.cls.J, ps.cls.d2, ps.cls.d3}].push_back(&ps);
  }

  for (const auto& [key, cells] : by_d2) {
    const auto& [d1, J, d2] = key;
    const std::string k = class_key(d1, J, d2);
    // X(J, d2) = sum over ell of X(J, d2, ell); cells sharing ell are merged first.
    std::map<std::vector<int>, GridFunction> X_ell, Xt_ell;
    for (const auto* ps : cells) {
      auto x = assemble_bilinear(cn, fam, *ps, Bilinear::kX);
      auto xt = assemble_bilinear(cn, fam, *ps, Bilinear::kXtilde);
      auto [it, fresh] = X_ell.emplace(ps->cls.ell, x);
      if (!fresh) it->second = it->second + x;
      auto [jt, fresh2] = Xt_ell.emplace(ps->cls.ell, xt);
      if (!fresh2) jt->second = jt->second + xt;
    }
    GridFunction X(n, N);
    double sum_ell = 0, sum_tilde = 0;
    for (const auto& [ell, x] : X_ell) {
      X = X + x;
      sum_ell += x.norm() * x.norm() * s;
    }
    for (const auto& [ell, x] : Xt_ell) sum_tilde += x.norm() * x.norm() * s;
    const double xn = Lp(X.norm(), 2);
    push(k, "x_l2", xn, std::pow(2.0, -d2) * dm1, false);
    push(k, "x_orthogonality", xn * xn, sum_ell, false);
    push(k, "xtilde_2dD", sum_tilde, std::pow(2.0, 8 * n * d2) * dm1 * dm1, false);
    if (J != 0) {
      const auto orth = orthogonality_check(cells, fam);
      push(k, "orthogonality", std::max(orth.max_inner, orth.max_vanishing), 1e-10, true);
    }
  }

  // Per (d1, J, d2, d3).
  for (const auto& [key, cells] : by_d3) {
    const auto& [d1, J, d2, d3] = key;
    const std::string k = class_key(d1, J, d2, d3);
    const int d3n = std::accumulate(d3.begin(), d3.end(), 0);
    const double ndd = static_cast<double>(n * d2);

    std::set<DyadicRectangle> Yset;
    std::size_t branches = 0, max_partners = 0;
    for (const auto* ps : cells) {
      for (const auto& [Rp, list] : ps->partners) Yset.insert(Rp);
      branches = std::max(branches, ps->branches.size());
      max_partners = std::max(max_partners, ps->max_partners());
    }
    const std::vector<DyadicRectangle> Ys(Yset.begin(), Yset.end());
    push(k, "use2", beta_sq_sum(cn, Ys) * s, std::pow(2.0, 2 * ndd), false);
    std::vector<std::pair<DyadicRectangle, double>> t1;
    for (const auto& Rp : Ys) t1.emplace_back(Rp, std::norm(cn.at(Rp)) / volume(Rp));
    const double use1 = Lp(square_sum(t1, n, N).norm(opt.p), opt.p);
    push(k, "Use1", use1, std::pow(2.0, 2 * ndd), false);
    push(k, "branch_count", static_cast<double>(max_partners), std::pow(2.0, ndd), false);

    const OpenSet W = shadow(n, Ys);
    OpenSet cascade = superlevel_strong(W, opt.cascade_c * pow2(-n * d2));
    {
      std::size_t idx = 0;
      for (int j = 0; j < n; ++j)
        if (J >> j & 1u) cascade = superlevel_directional(cascade, j, GridId::plain(), opt.cascade_c * pow2(-d3[idx++]));
    }
    cascade = cascade.intersect(OpenSet::from_box(Box(n, Interval{0, 1})));
    push(k, "cascade_measure", to_double(cascade.measure()) * s,
         std::pow(2.0, d3n + 2 * ndd) * to_double(W.measure()) * s, false);

    double y2 = 0, use2 = 0, use3 = 0, use3_rhs = 1, carleson = 0, e_meas = 0, off_e = 0;
    std::size_t escaped = 0;
    for (std::size_t b = 0; b < branches; ++b) {
      std::vector<GridFunction> Yl;
      std::vector<std::pair<DyadicRectangle, double>> t2;
      std::vector<RectPair> graph;
      for (const auto* ps : cells) {
        const std::size_t bi = b % ps->branches.size();
        Yl.push_back(assemble_bilinear(cn, fam, *ps, Bilinear::kY, bi));
        for (const auto& [Rp, R] : ps->branches[bi]) graph.emplace_back(Rp, R);
      }
      // Cells of one (J, d2, d3) group with equal ell merge into one Y_ell.
      std::map<std::vector<int>, GridFunction> merged;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        auto [it, fresh] = merged.emplace(cells[c]->cls.ell, Yl[c]);
        if (!fresh) it->second = it->second + Yl[c];
      }
      double sum = 0;
      GridFunction sq_sum(n, N);
      std::vector<GridFunction> Yv;
      for (const auto& [ell, y] : merged) {
        sum += y.norm() * y.norm() * s;
        sq_sum = sq_sum + multiply(y, y.conj());
        Yv.push_back(y);
      }
      y2 = std::max(y2, sum);
      double pi_sum = 0;
      for (const auto& [Rp, R] : graph) {
        t2.emplace_back(Rp, std::norm(cn.at(R)) / volume(R));
        pi_sum += std::norm(cn.at(R));
        if (!cascade.contains(R.box())) ++escaped;
      }
      const double u2 = Lp(square_sum(t2, n, N).norm(opt.p), opt.p);
      use2 = std::max(use2, u2);
      carleson = std::max(carleson, pi_sum * s);
      for (auto& v : sq_sum.values()) v = std::sqrt(std::max(0.0, v.real()));
      const double lhs3 = Lp(sq_sum.norm(4), 4);
      const double rhs3 = use1 * u2;
      if (b == 0 || lhs3 * use3_rhs > use3 * rhs3) use3 = lhs3, use3_rhs = rhs3;
      const OpenSet E = exceptional_set(Yv, Rational(dm1), d3n);
      e_meas = std::max(e_meas, E.empty() ? 0.0 : to_double(E.measure()) * s);
      double off = 0;
      for (const auto& y : Yv) off += integral_off(y, E) * s;
      off_e = std::max(off_e, off);
    }
    push(k, "y_2do", y2, std::pow(2.0, 8 * ndd - d3n / 4.0) * dm1 * dm1, false);
    push(k, "Use2", use2, dm1 * std::pow(2.0, 2 * ndd), false);
    if (opt.p == 8.0) push(k, "Use3", use3, use3_rhs, true);
    push(k, "use2_carleson", carleson, std::pow(2.0, 4 * ndd + d3n) * dm1 * dm1 * to_double(W.measure()) * s, false);
    push(k, "cascade_containment", static_cast<double>(escaped), static_cast<double>(branches * Ys.size()), false);
    push(k, "e_measure", e_meas, std::pow(2.0, 16 * ndd - d3n / 2.0), false);
    push(k, "off_e", off_e, dm1 * std::pow(2.0, 3 * ndd - d3n / 4.0), false);
  }
  return rep;
}

std::string rows_to_csv(const std::vector<BoundRow>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "class,name,lhs,rhs,ratio,exact,holds\n";
  for (const auto& r : rows)
    os << '"' << r.klass << "\"," << r.name << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio() << ','
       << (r.exact ? 1 : 0) << ',' << (r.holds ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace hankelab
