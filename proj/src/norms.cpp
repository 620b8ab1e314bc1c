#include "hankelab/norms.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace hankelab {

namespace {

struct Weighted {
  DyadicRectangle rect;
  double w;  // |c(R)|^2
};

std::vector<Weighted> support(const WaveletCoeffs& c) {
  std::vector<Weighted> out;
  for (const auto& [R, v] : c.map)
    if (std::norm(v) > 0) out.push_back({R, std::norm(v)});
  return out;
}

OpenSet rect_set(const DyadicRectangle& R) { return OpenSet::from_box(R.box()); }

void finish(BmoEstimate& e) {
  if (e.witness_set.empty()) return;
  e.rescale_exponent = -ceil_log2(e.witness_set.measure());
}

// Dyadic ancestors of `side`, from itself up to the first one containing `hull`.
std::vector<GridInterval> ancestors(GridInterval side, const Interval& hull) {
  std::vector<GridInterval> out{side};
  for (int step = 0; step < 64 && !side.interval().contains(hull); ++step) {
    side = side.parent();
    out.push_back(side);
  }
  return out;
}

BmoEstimate single_rect(const WaveletCoeffs& c, const std::vector<Weighted>& sup) {
  BmoEstimate e;
  e.strategy = BmoStrategy::kSingleRect;
  e.witness_set = OpenSet(c.n);
  if (sup.empty()) return e;
  const int n = c.n;
  std::vector<Interval> hull(n);
  for (int a = 0; a < n; ++a) {
    hull[a] = sup.front().rect.sides[a].interval();
    for (const auto& s : sup) {
      if (!s.rect.sides[a].grid.is_plain()) throw std::invalid_argument("bmo: coefficients must sit on plain dyadic rectangles");
      auto iv = s.rect.sides[a].interval();
      hull[a].lo = std::min(hull[a].lo, iv.lo);
      hull[a].hi = std::max(hull[a].hi, iv.hi);
    }
  }
  // Every rectangle containing R is a product of ancestors of R's sides, so
  // accumulating each weight on those products gives sum_{R subset R0} for
  // every candidate R0 at once.
  std::map<DyadicRectangle, double> mass;
  for (const auto& s : sup) {
    std::vector<std::vector<GridInterval>> chains(n);
    for (int a = 0; a < n; ++a) chains[a] = ancestors(s.rect.sides[a], hull[a]);
    std::vector<std::size_t> idx(n, 0);
    while (true) {
      DyadicRectangle R0;
      for (int a = 0; a < n; ++a) R0.sides.push_back(chains[a][idx[a]]);
      mass[R0] += s.w;
      int a = n - 1;
      for (; a >= 0; --a) {
        if (++idx[a] < chains[a].size()) break;
        idx[a] = 0;
      }
      if (a < 0) break;
    }
  }
  double best = -1;
  const DyadicRectangle* arg = nullptr;
  for (const auto& [R0, m] : mass) {
    double r = m / to_double(R0.volume());
    if (r > best) {
      best = r;
      arg = &R0;
    }
  }
  e.witness = {*arg};
  e.witness_set = rect_set(*arg);
  e.value = carleson_ratio(c, e.witness_set);
  finish(e);
  return e;
}

BmoEstimate greedy(const WaveletCoeffs& c, const std::vector<Weighted>& sup) {
  BmoEstimate e = single_rect(c, sup);
  e.strategy = BmoStrategy::kGreedy;
  if (sup.empty()) return e;
  std::vector<DyadicRectangle> added;
  while (true) {
    double best = e.value;
    std::size_t arg = sup.size();
    OpenSet best_set;
    for (std::size_t i = 0; i < sup.size(); ++i) {
      if (e.witness_set.contains(sup[i].rect.box())) continue;
      OpenSet U = e.witness_set.unite(rect_set(sup[i].rect));
      double r = carleson_ratio(c, U);
      if (r > best) {
        best = r;
        arg = i;
        best_set = std::move(U);
      }
    }
    if (arg == sup.size()) break;
    e.value = best;
    e.witness_set = std::move(best_set);
    e.witness.push_back(sup[arg].rect);
  }
  finish(e);
  return e;
}

BmoEstimate exhaustive(const WaveletCoeffs& c, const std::vector<Weighted>& sup) {
  if (sup.size() > kExhaustiveLimit)
    throw std::invalid_argument("bmo: exhaustive search refused beyond 16 support rectangles");
  BmoEstimate e;
  e.strategy = BmoStrategy::kExhaustive;
  e.witness_set = OpenSet(c.n);
  const std::size_t M = sup.size();
  std::vector<Box> boxes;
  for (const auto& s : sup) boxes.push_back(s.rect.box());
  // sum_{R subset U} only depends on which support rectangles U contains, and
  // shrinking U to their union keeps the sum while lowering |U|: unions of
  // support rectangles attain the supremum.
  for (std::uint32_t mask = 1; mask < (1u << M); ++mask) {
    std::vector<Box> chosen;
    for (std::size_t i = 0; i < M; ++i)
      if (mask >> i & 1) chosen.push_back(boxes[i]);
    OpenSet U = OpenSet::from_boxes(c.n, chosen);
    double sum = 0;
    bool closed = true;
    for (std::size_t i = 0; i < M; ++i)
      if (U.contains(boxes[i])) {
        sum += sup[i].w;
        closed &= (mask >> i & 1) != 0;
      }
    // a non-closed mask has the same union as its closure, visited separately
    if (!closed) continue;
    double r = std::sqrt(sum / to_double(U.measure()));
    if (r > e.value) {
      e.value = r;
      e.witness_set = std::move(U);
      e.witness.clear();
      for (std::size_t i = 0; i < M; ++i)
        if (mask >> i & 1) e.witness.push_back(sup[i].rect);
    }
  }
  finish(e);
  return e;
}

}  // namespace

std::string to_string(BmoStrategy s) {
  switch (s) {
    case BmoStrategy::kSingleRect: return "single";
    case BmoStrategy::kGreedy: return "greedy";
    case BmoStrategy::kExhaustive: return "exhaustive";
    case BmoStrategy::kFrozenCoordinate: return "frozen";
  }
  return "?";
}

BmoStrategy parse_strategy(std::string_view s) {
  if (s == "single" || s == "single-rect") return BmoStrategy::kSingleRect;
  if (s == "greedy" || s == "greedy-downset") return BmoStrategy::kGreedy;
  if (s == "exhaustive") return BmoStrategy::kExhaustive;
  if (s == "frozen" || s == "frozen-coordinate") return BmoStrategy::kFrozenCoordinate;
  throw std::invalid_argument("unknown strategy: " + std::string(s));
}

double carleson_ratio(const WaveletCoeffs& c, const OpenSet& U) {
  Rational m = U.measure();
  if (m == 0) throw std::invalid_argument("carleson_ratio: zero-measure set");
  double sum = 0;
  for (const auto& [R, v] : c.map)
    if (std::norm(v) > 0 && U.contains(R.box())) sum += std::norm(v);
  return std::sqrt(sum / to_double(m));
}

double collection_ratio(const WaveletCoeffs& c, std::span<const DyadicRectangle> coll) {
  if (coll.empty()) return 0;
  Rational m = shadow(c.n, coll).measure();
  double sum = 0;
  for (const auto& R : coll) sum += std::norm(c.at(R));
  return std::sqrt(sum / to_double(m));
}

BmoEstimate bmo_estimate(const WaveletCoeffs& c, BmoStrategy strategy) {
  auto sup = support(c);
  switch (strategy) {
    case BmoStrategy::kSingleRect: return single_rect(c, sup);
    case BmoStrategy::kGreedy: return greedy(c, sup);
    case BmoStrategy::kExhaustive: return exhaustive(c, sup);
    case BmoStrategy::kFrozenCoordinate: return bmo_minus1(c, BmoStrategy::kGreedy);
  }
  throw std::logic_error("bmo_estimate: bad strategy");
}

BmoEstimate bmo_minus1(const WaveletCoeffs& c, BmoStrategy strategy) {
  if (c.n < 2) throw std::invalid_argument("bmo_minus1: needs n >= 2");
  if (strategy == BmoStrategy::kFrozenCoordinate) strategy = BmoStrategy::kGreedy;
  BmoEstimate best;
  best.strategy = BmoStrategy::kFrozenCoordinate;
  best.witness_set = OpenSet(c.n);
  auto sup = support(c);
  for (int k = 0; k < c.n; ++k) {
    std::map<GridInterval, std::vector<const Weighted*>> groups;
    for (const auto& s : sup) groups[s.rect.sides[k]].push_back(&s);
    for (const auto& [I, members] : groups) {
      WaveletCoeffs inner{c.n - 1, c.N, {}};
      std::map<DyadicRectangle, DyadicRectangle> full;
      for (const auto* s : members) {
        DyadicRectangle Rp;
        for (int a = 0; a < c.n; ++a)
          if (a != k) Rp.sides.push_back(s->rect.sides[a]);
        inner.map[Rp] = c.at(s->rect);
        full.emplace(Rp, s->rect);
      }
      // one free parameter: single intervals are optimal
      BmoEstimate e = bmo_estimate(inner, c.n == 2 ? BmoStrategy::kSingleRect : strategy);
      if (e.witness_set.empty()) continue;
      std::vector<DyadicRectangle> coll;
      for (const auto& [Rp, R] : full)
        if (e.witness_set.contains(Rp.box())) coll.push_back(R);
      double r = collection_ratio(c, coll);
      if (r > best.value) {
        best.value = r;
        best.witness = std::move(coll);
        best.witness_set = shadow(c.n, best.witness);
        best.frozen_coord = k;
      }
    }
  }
  finish(best);
  return best;
}

CarlesonViolation::CarlesonViolation(OpenSet s, double m)
    : std::runtime_error("Carleson condition violated on " + s.to_string()), set(std::move(s)), mass(m) {}

double john_nirenberg_check(const std::map<DyadicRectangle, double>& a, const OpenSet& W, double p,
                            std::span<const OpenSet> test_sets) {
  if (p < 1) throw std::invalid_argument("john_nirenberg_check: p must be >= 1");
  for (const auto& T : test_sets) {
    double mass = 0;
    for (const auto& [R, w] : a)
      if (T.contains(R.box())) mass += w;
    if (mass > to_double(T.measure()) * (1 + 1e-12)) throw CarlesonViolation(T, mass);
  }
  const int n = W.dim();
  std::vector<std::pair<Box, double>> inside;
  std::vector<std::vector<Rational>> cuts(n);
  for (const auto& [R, w] : a) {
    Box b = R.box();
    if (!W.contains(b)) continue;
    inside.emplace_back(b, w / to_double(box_volume(b)));
    for (int i = 0; i < n; ++i) {
      cuts[i].push_back(b[i].lo);
      cuts[i].push_back(b[i].hi);
    }
  }
  double Wm = to_double(W.measure());
  if (inside.empty()) return 0;
  std::vector<std::size_t> ext(n), stride(n);
  std::size_t total = 1;
  for (int i = n - 1; i >= 0; --i) {
    std::sort(cuts[i].begin(), cuts[i].end());
    cuts[i].erase(std::unique(cuts[i].begin(), cuts[i].end()), cuts[i].end());
    ext[i] = cuts[i].size();  // one slot past the last cell for the difference array
    stride[i] = total;
    total *= ext[i];
  }
  if (total > (std::size_t{1} << 26)) throw std::runtime_error("john_nirenberg_check: too many cells");
  std::vector<double> diff(total, 0.0);
  for (const auto& [b, h] : inside) {
    std::vector<std::size_t> lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo[i] = std::lower_bound(cuts[i].begin(), cuts[i].end(), b[i].lo) - cuts[i].begin();
      hi[i] = std::lower_bound(cuts[i].begin(), cuts[i].end(), b[i].hi) - cuts[i].begin();
    }
    for (unsigned corner = 0; corner < (1u << n); ++corner) {
      std::size_t off = 0;
      int sign = 1;
      for (int i = 0; i < n; ++i) {
        bool up = corner >> i & 1;
        off += (up ? hi[i] : lo[i]) * stride[i];
        if (up) sign = -sign;
      }
      diff[off] += sign * h;
    }
  }
  for (int i = 0; i < n; ++i)
    for (std::size_t f = 0; f < total; ++f)
      if ((f / stride[i]) % ext[i] != 0) diff[f] += diff[f - stride[i]];
  double integral = 0;
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t f = 0; f < total; ++f) {
    bool valid = true;
    double vol = 1;
    for (int i = 0; i < n; ++i) {
      std::size_t k = (f / stride[i]) % ext[i];
      if (k + 1 >= ext[i]) {
        valid = false;
        break;
      }
      vol *= to_double(cuts[i][k + 1] - cuts[i][k]);
    }
    if (valid && diff[f] > 0) integral += vol * std::pow(diff[f], p);
  }
  return std::pow(integral / Wm, 1.0 / p);
}

std::vector<OpenSet> carleson_test_sets(const std::map<DyadicRectangle, double>& a, const OpenSet& W,
                                        std::uint64_t seed, int count) {
  std::vector<OpenSet> out{W};
  std::vector<DyadicRectangle> rects;
  for (const auto& [R, w] : a) {
    rects.push_back(R);
    out.push_back(rect_set(R));
  }
  std::mt19937_64 rng(seed);
  for (int t = 0; t < count && !rects.empty(); ++t) {
    std::vector<DyadicRectangle> pick;
    for (const auto& R : rects)
      if (rng() & 1) pick.push_back(R);
    if (!pick.empty()) out.push_back(shadow(W.dim(), pick));
  }
  return out;
}

std::map<DyadicRectangle, double> carleson_normalize(const std::map<DyadicRectangle, double>& a,
                                                     std::span<const OpenSet> test_sets) {
  double worst = 0;
  for (const auto& T : test_sets) {
    double mass = 0;
    for (const auto& [R, w] : a)
      if (T.contains(R.box())) mass += w;
    worst = std::max(worst, mass / to_double(T.measure()));
  }
  auto out = a;
  if (worst > 0)
    for (auto& [R, w] : out) w /= worst;
  return out;
}

std::string estimate_to_json(const BmoEstimate& e) {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& R : e.witness) w.push_back(serialize_rect(R));
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& b : e.witness_set.boxes()) boxes.push_back(box_to_string(b));
  nlohmann::json doc = {{"schema", "v1"},
                        {"value", e.value},
                        {"strategy", to_string(e.strategy)},
                        {"witness", w},
                        {"witness_set", boxes},
                        {"rescale_exponent", e.rescale_exponent}};
  if (e.frozen_coord >= 0) doc["frozen_coord"] = e.frozen_coord;
  return doc.dump(1);
}

}  // namespace hankelab
