#include "hankelab/journe.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace hankelab {

int JourneConfig::d() const {
  if (delta <= 0 || delta >= 1) throw std::invalid_argument("delta must lie in (0, 1)");
  int d = 1;
  while (Rational(1, (BigInt(1) << d) + 1) > delta) ++d;
  return d;
}

OpenSet enlarge_set(const OpenSet& shadow, const Rational& delta, const MaximalOptions& opt) {
  if (shadow.empty()) throw std::invalid_argument("enlarge needs a nonempty collection");
  JourneConfig probe;
  probe.delta = delta;
  const int d = probe.d();
  const int n = shadow.dim();
  OpenSet E = shadow;
  Rational power = delta;  // delta^{2^j}, built up by squaring
  std::vector<Rational> powers(n + 1);
  for (int j = 1; j <= n; ++j) {
    power *= power;
    powers[j] = power;
  }
  for (int j = n; j >= 2; --j) E = superlevel_directional(E, j - 1, GridId::plain(), 1 - powers[j], opt);
  auto grids = shifted_family(d);
  return superlevel_directional_family(E, 0, grids, 1 - delta / 2, opt);
}

OpenSet enlarge(const RectCollection& coll, const JourneConfig& cfg) {
  if (coll.empty()) throw std::invalid_argument("enlarge needs a nonempty collection");
  return enlarge_set(coll.shadow(), cfg.delta, cfg.maximal);
}

namespace {

// Embeddedness queries against one V with cached breakpoints.
class EmbeddingOracle {
 public:
  explicit EmbeddingOracle(const OpenSet& V) : V_(V), bp_(V.dim()) {
    for (int c = 0; c < V.dim(); ++c) bp_[c] = V.breakpoints(c);
  }

  // nullopt when R is not inside V.
  std::optional<Rational> operator()(const Box& R, std::span<const int> coords) const {
    if (coords.empty()) throw std::invalid_argument("embeddedness needs at least one coordinate");
    if (!V_.contains(R)) return std::nullopt;
    std::vector<Rational> cands{Rational(1)};
    for (int c : coords) {
      const Rational h = R[c].length() / 2;
      const Rational center = R[c].center();
      for (const auto& t : bp_[c]) {
        Rational mu = abs(t - center) / h;
        if (mu > 1) cands.push_back(mu);
      }
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    // Containment on (cands[i], cands[i+1]) is decreasing in i; find the first
    // gap where it fails. Beyond the last candidate the box leaves V.
    auto inside_after = [&](std::size_t i) {
      if (i + 1 >= cands.size()) return false;
      Rational mid = (cands[i] + cands[i + 1]) / 2;
      return V_.contains(dilate_box(R, mid, coords));
    };
    std::size_t lo = 0, hi = cands.size() - 1;  // answer index in [lo, hi]
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (inside_after(mid))
        lo = mid + 1;
      else
        hi = mid;
    }
    return cands[lo];
  }

 private:
  const OpenSet& V_;
  std::vector<std::vector<Rational>> bp_;
};

std::vector<GridInterval> s_containing(const Interval& iv, int e_lo, int e_hi) {
  std::vector<GridInterval> out;
  for (int e = e_lo; e <= e_hi; ++e)
    for (const auto& g : s_grids()) {
      GridInterval gi = locate(g, e, iv.lo);
      if (gi.interval().contains(iv)) out.push_back(gi);
    }
  return out;
}

}  // namespace

Rational embeddedness(const Box& R, const OpenSet& V, std::span<const int> coords) {
  auto r = EmbeddingOracle(V)(R, coords);
  if (!r) throw std::invalid_argument("not embedded");
  return *r;
}

Rational embeddedness(const DyadicRectangle& R, const OpenSet& V, std::span<const int> coords) {
  return embeddedness(R.box(), V, coords);
}

FPartition few_small_partition(const RectCollection& coll, const OpenSet& V, int coord) {
  EmbeddingOracle oracle(V);
  const std::vector<int> coords{coord};
  FPartition part;
  for (const auto& R : coll.rects()) {
    auto emb = oracle(R.box(), coords);
    if (!emb) throw std::invalid_argument("not embedded");
    int k = floor_log2(*emb) + 1;
    part[FKey{R.sides[coord], k, coord}].members.push_back(R);
  }
  for (auto& [key, cell] : part) cell.shadow = shadow(coll.n(), cell.members);
  return part;
}

double few_small_ratio(const RectCollection& coll, const OpenSet& V, const Rational& epsilon,
                       std::span<const RectCollection> subsets, int coord) {
  EmbeddingOracle oracle(V);
  const std::vector<int> coords{coord};
  std::map<DyadicRectangle, int> klass;
  for (const auto& R : coll.rects()) {
    auto emb = oracle(R.box(), coords);
    if (!emb) throw std::invalid_argument("not embedded");
    klass[R] = floor_log2(*emb) + 1;
  }
  const double eps = to_double(epsilon);
  double worst = 0;
  for (const auto& sub : subsets) {
    if (sub.empty()) continue;
    std::map<std::pair<GridInterval, int>, std::vector<DyadicRectangle>> cells;
    for (const auto& R : sub.rects()) {
      auto it = klass.find(R);
      if (it == klass.end()) throw std::invalid_argument("subset is not contained in the collection");
      cells[{R.sides[coord], it->second}].push_back(R);
    }
    double sum = 0;
    for (const auto& [key, members] : cells)
      sum += std::exp2(-eps * key.second) * to_double(shadow(coll.n(), members).measure());
    worst = std::max(worst, sum / to_double(sub.shadow().measure()));
  }
  return worst;
}

namespace {

struct PhiCandidate {
  GridInterval J;
  Rational g_hi;  // smallest gamma with J inside gamma R_j
  Rational g_lo;  // largest gamma with (1/4) gamma R_j inside J
};

// phi^m_gamma(R): in coordinates j < m the longest valid S interval.
DyadicRectangle phi_at(const DyadicRectangle& R, int m, const std::vector<std::vector<PhiCandidate>>& cands,
                       const Rational& gamma) {
  DyadicRectangle phi = R;
  for (int j = 0; j < m; ++j) {
    const PhiCandidate* best = nullptr;
    for (const auto& c : cands[j]) {
      if (c.g_hi > gamma || gamma > c.g_lo) continue;
      if (!best || c.J.length() > best->J.length() ||
          (c.J.length() == best->J.length() && c.J < best->J))
        best = &c;
    }
    if (!best) throw std::logic_error("no S interval between R_j and gamma R_j");
    phi.sides[j] = best->J;
  }
  return phi;
}

}  // namespace

JourneResult journe_full(const RectCollection& coll, const JourneConfig& cfg) {
  if (coll.empty()) throw std::invalid_argument("journe_full needs a nonempty collection");
  const int n = coll.n();
  JourneResult res;
  res.shadow_measure = coll.shadow().measure();

  RectCollection current = coll;  // U^{m-1}
  for (int m = 0; m < n; ++m) {
    res.stage_sizes.push_back(current.size());
    const Rational sh = current.shadow().measure();
    Rational delta = cfg.delta;
    OpenSet Vm = enlarge_set(current.shadow(), delta, cfg.maximal);
    for (int h = 0; h < cfg.max_halvings && Vm.measure() > (1 + cfg.delta) * sh; ++h) {
      delta /= 2;
      Vm = enlarge_set(current.shadow(), delta, cfg.maximal);
    }
    res.stage_delta.push_back(delta);

    EmbeddingOracle oracle(Vm);
    const std::vector<int> coords{m};
    std::set<DyadicRectangle> next;
    for (const auto& R : current.rects()) {
      auto emb = oracle(R.box(), coords);
      if (!emb) throw std::logic_error("stage rectangle escaped V^m");
      const Interval side = R.sides[m].interval();
      const Rational c = side.center();
      const Rational h = side.length() / 2;
      const Rational inner_half = std::max(Rational(1), Rational(*emb / 4)) * h;
      const Interval inner{c - inner_half, c + inner_half};
      const Interval outer{c - *emb * h, c + *emb * h};
      bool any = false;
      for (const auto& J : s_containing(inner, ceil_log2(inner.length()), floor_log2(outer.length()))) {
        if (!outer.contains(J.interval())) continue;
        DyadicRectangle E = R;
        E.sides[m] = J;
        next.insert(std::move(E));
        any = true;
      }
      if (!any) throw std::logic_error("no S interval for the stage expansion");
    }
    res.stages.push_back(std::move(Vm));
    if (m + 1 < n) current = RectCollection(n, std::vector<DyadicRectangle>(next.begin(), next.end()));
  }
  res.V = res.stages.back();
  res.V_measure = res.V.measure();

  // beta^m for the original rectangles.
  std::vector<EmbeddingOracle> oracles;
  oracles.reserve(n);
  for (int m = 0; m < n; ++m) oracles.emplace_back(res.stages[m]);
  const std::vector<int> all_coords = [n] {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
  }();

  for (const auto& R : coll.rects()) {
    EmbeddingEntry e;
    e.rect = R;
    {
      const std::vector<int> c0{0};
      auto b1 = oracles[0](R.box(), c0);
      if (!b1) throw std::logic_error("rectangle escaped V^1");
      e.beta.push_back(*b1);
      e.gamma_cap.push_back(0);
      e.gamma_bar.push_back(1);
      e.phi.push_back(R);
    }
    for (int m = 1; m < n; ++m) {
      const Rational gcap = *std::min_element(e.beta.begin(), e.beta.end());
      std::vector<std::vector<PhiCandidate>> cands(m);
      std::vector<Rational> points{Rational(1), gcap};
      for (int j = 0; j < m; ++j) {
        const Interval side = R.sides[j].interval();
        const Rational c = side.center();
        const Rational h = side.length() / 2;
        const int e_lo = exact_log2(side.length());
        const int e_hi = floor_log2(gcap * side.length());
        for (const auto& J : s_containing(side, e_lo, e_hi)) {
          const Interval iv = J.interval();
          const Rational left = c - iv.lo, right = iv.hi - c;
          PhiCandidate pc{J, std::max(left, right) / h, 4 * std::min(left, right) / h};
          if (pc.g_hi > pc.g_lo) continue;
          for (const Rational* p : {&pc.g_hi, &pc.g_lo})
            if (*p > 1 && *p < gcap) points.push_back(*p);
          cands[j].push_back(pc);
        }
      }
      std::sort(points.begin(), points.end());
      points.erase(std::unique(points.begin(), points.end()), points.end());

      const std::vector<int> cm{m};
      auto beta_at = [&](const Rational& gamma, DyadicRectangle& phi_out) {
        phi_out = phi_at(R, m, cands, gamma);
        auto b = oracles[m](phi_out.box(), cm);
        return b ? *b : Rational(0);
      };

      // gamma-bar = sup{gamma in [1, gcap] : beta_gamma >= gamma}; phi is
      // constant on the open gaps between points.
      Rational best_gamma = 0, best_beta = 0;
      DyadicRectangle best_phi;
      auto offer = [&](const Rational& g, const Rational& b, const DyadicRectangle& phi) {
        if (g > best_gamma || (g == best_gamma && b > best_beta)) {
          best_gamma = g;
          best_beta = b;
          best_phi = phi;
        }
      };
      DyadicRectangle phi;
      for (std::size_t i = 0; i < points.size(); ++i) {
        Rational b = beta_at(points[i], phi);
        if (b >= points[i]) offer(points[i], b, phi);
        if (i + 1 < points.size()) {
          const Rational a = points[i], bnd = points[i + 1];
          Rational F = beta_at((a + bnd) / 2, phi);
          if (F > a) offer(F < bnd ? F : bnd, F, phi);
        }
      }
      if (best_gamma < 1) throw std::logic_error("gamma-bar search found no gamma >= 1");
      // beta_gamma jumps when the longest S interval changes, so beta at
      // gamma-bar can exceed gamma-bar; phi only holds gamma-bar/4 R in the
      // earlier coordinates, and capping keeps emb(R) R inside V.
      e.beta.push_back(std::min(best_beta, best_gamma));
      e.gamma_cap.push_back(gcap);
      e.gamma_bar.push_back(best_gamma);
      e.phi.push_back(best_phi);
    }
    auto it = std::min_element(e.beta.begin(), e.beta.end());
    e.iota = static_cast<int>(it - e.beta.begin());
    e.emb = std::max(Rational(1), Rational(*it / 16));
    e.contained = res.V.contains(dilate_rect(R, e.emb, all_coords));
    res.entries.push_back(std::move(e));
  }
  return res;
}

FPartition journe_partition(const JourneResult& res, std::span<const DyadicRectangle> subset) {
  std::map<DyadicRectangle, const EmbeddingEntry*> index;
  for (const auto& e : res.entries) index[e.rect] = &e;
  FPartition part;
  int n = 0;
  for (const auto& R : subset) {
    auto it = index.find(R);
    if (it == index.end()) throw std::invalid_argument("rectangle not in the construction");
    const EmbeddingEntry& e = *it->second;
    n = R.n();
    part[FKey{R.sides[e.iota], floor_log2(e.emb), e.iota}].members.push_back(R);
  }
  for (auto& [key, cell] : part) cell.shadow = shadow(n, cell.members);
  return part;
}

bool probability_bound_holds(std::span<const Rational> values) {
  if (values.empty()) return true;
  Rational mean = 0;
  for (const auto& v : values) {
    if (v < 0 || v > 1) throw std::invalid_argument("values must lie in [0, 1]");
    mean += v;
  }
  mean /= static_cast<long>(values.size());
  const Rational eta = 1 - mean;
  // X < 1 - sqrt(eta)  <=>  (1 - X)^2 > eta  (1 - X >= 0)
  long below = 0;
  for (const auto& v : values)
    if ((1 - v) * (1 - v) > eta) ++below;
  const Rational frac(below, static_cast<long>(values.size()));
  return frac * frac <= eta;
}

int separation_classes(int k, const Rational& delta) { return floor_log2(40 * pow2(k) / delta) + 1; }

std::vector<std::vector<DyadicRectangle>> separate_scales(std::span<const DyadicRectangle> rects, int k,
                                                          const Rational& delta, int coord) {
  const int T = separation_classes(k, delta);
  std::map<int, std::vector<DyadicRectangle>> groups;
  for (const auto& R : rects) {
    int e = exact_log2(R.sides[coord].length());
    groups[((e % T) + T) % T].push_back(R);
  }
  std::vector<std::vector<DyadicRectangle>> out;
  for (auto& [r, g] : groups) out.push_back(std::move(g));
  return out;
}

std::map<GridInterval, OpenSet> h_sets(const FPartition& part, int k, int coord) {
  std::vector<std::pair<GridInterval, const OpenSet*>> cells;
  for (const auto& [key, cell] : part)
    if (std::get<1>(key) == k && std::get<2>(key) == coord) cells.push_back({std::get<0>(key), &cell.shadow});
  std::map<GridInterval, OpenSet> out;
  for (const auto& [I, F] : cells) {
    OpenSet H = *F;
    const Interval iv = I.interval();
    for (const auto& [I2, F2] : cells) {
      const Interval iv2 = I2.interval();
      if (iv2.contains(iv) && !(iv2 == iv)) H = H.subtract(*F2);
    }
    out.emplace(I, std::move(H));
  }
  return out;
}

JourneBmoReport journe_bmo_weights(const WaveletCoeffs& coeffs, const RectCollection& coll, const JourneConfig& cfg,
                                   BmoStrategy strategy) {
  if (coeffs.n != coll.n()) throw std::invalid_argument("support mismatch");
  for (const auto& [R, v] : coeffs.map)
    if (v != cplx(0) && !std::binary_search(coll.rects().begin(), coll.rects().end(), R))
      throw std::invalid_argument("support mismatch");
  JourneBmoReport rep;
  rep.journe = journe_full(coll, cfg);
  const double power = coll.n() + to_double(cfg.epsilon);
  rep.weighted = WaveletCoeffs{coeffs.n, coeffs.N, {}};
  std::map<int, std::vector<DyadicRectangle>> classes;
  for (const auto& e : rep.journe.entries) {
    rep.weighted.map[e.rect] = coeffs.at(e.rect) * std::pow(to_double(e.emb), -power);
    classes[floor_log2(e.emb)].push_back(e.rect);
  }
  rep.weighted_bmo = bmo_estimate(rep.weighted, strategy);
  rep.minus1 = coll.n() >= 2 ? bmo_minus1(coeffs, strategy) : bmo_estimate(coeffs, strategy);
  rep.minus1_value = rep.minus1.value;
  std::vector<std::pair<int, FPartition>> parts;
  for (const auto& [k, members] : classes) {
    parts.emplace_back(k, journe_partition(rep.journe, members));
    for (const auto& [key, cell] : parts.back().second)
      rep.minus1_value = std::max(rep.minus1_value, collection_ratio(coeffs, cell.members));
  }
  for (const auto& [k, part] : parts) {
    ClassCheck cc;
    cc.k = k;
    double cells = 0;
    for (const auto& [key, cell] : part) {
      cc.count += cell.members.size();
      for (const auto& R : cell.members) cc.lhs += std::norm(coeffs.at(R));
      cells += to_double(cell.shadow.measure());
    }
    cc.rhs = rep.minus1_value * rep.minus1_value * cells;
    cc.holds = cc.lhs <= cc.rhs * (1 + 1e-12);
    rep.classes.push_back(cc);
  }
  if (rep.minus1_value > 0) rep.ratio = rep.weighted_bmo.value / rep.minus1_value;
  return rep;
}

}  // namespace hankelab
