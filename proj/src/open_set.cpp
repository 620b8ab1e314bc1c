#include "hankelab/open_set.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace hankelab {

Rational box_volume(const Box& box) {
  Rational v = 1;
  for (const auto& iv : box) {
    if (iv.empty()) return 0;
    v *= iv.length();
  }
  return v;
}

bool box_contains(const Box& outer, const Box& inner) {
  if (outer.size() != inner.size()) throw std::invalid_argument("box dimension mismatch");
  for (const auto& iv : inner)
    if (iv.empty()) return true;
  for (std::size_t i = 0; i < outer.size(); ++i)
    if (!outer[i].contains(inner[i])) return false;
  return true;
}

std::string box_to_string(const Box& box) {
  std::string s;
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (i) s += "x";
    s += "[" + to_string(box[i].lo) + "," + to_string(box[i].hi) + ")";
  }
  return s;
}

OpenSet OpenSet::full_point() {
  OpenSet p(0);
  p.full_ = true;
  return p;
}

bool operator==(const OpenSet& a, const OpenSet& b) {
  if (a.dim_ != b.dim_) return false;
  if (a.dim_ == 0) return a.full_ == b.full_;
  if (a.slabs_.size() != b.slabs_.size()) return false;
  for (std::size_t i = 0; i < a.slabs_.size(); ++i) {
    const auto& x = a.slabs_[i];
    const auto& y = b.slabs_[i];
    if (x.lo != y.lo || x.hi != y.hi || !(x.section == y.section)) return false;
  }
  return true;
}

void OpenSet::push_slab(std::vector<Slab>& out, Rational lo, Rational hi, OpenSet section) {
  if (section.empty() || hi <= lo) return;
  if (!out.empty() && out.back().hi == lo && out.back().section == section) {
    out.back().hi = std::move(hi);
    return;
  }
  out.push_back(Slab{std::move(lo), std::move(hi), std::move(section)});
}

Rational OpenSet::measure() const {
  if (dim_ == 0) return full_ ? Rational(1) : Rational(0);
  Rational m = 0;
  for (const auto& s : slabs_) m += (s.hi - s.lo) * s.section.measure();
  return m;
}

OpenSet OpenSet::combine(const OpenSet& a, const OpenSet& b, Op op) {
  if (a.dim_ != b.dim_) throw std::invalid_argument("OpenSet dimension mismatch");
  if (a.dim_ == 0) {
    OpenSet r(0);
    switch (op) {
      case Op::kUnion: r.full_ = a.full_ || b.full_; break;
      case Op::kIntersect: r.full_ = a.full_ && b.full_; break;
      case Op::kSubtract: r.full_ = a.full_ && !b.full_; break;
    }
    return r;
  }
  OpenSet out(a.dim_);
  if (op == Op::kIntersect && (a.empty() || b.empty())) return out;
  if (op == Op::kSubtract && (a.empty() || b.empty())) return a;
  if (op == Op::kUnion) {
    if (a.empty()) return b;
    if (b.empty()) return a;
  }

  std::vector<Rational> pts;
  pts.reserve(2 * (a.slabs_.size() + b.slabs_.size()));
  for (const auto& s : a.slabs_) {
    pts.push_back(s.lo);
    pts.push_back(s.hi);
  }
  for (const auto& s : b.slabs_) {
    pts.push_back(s.lo);
    pts.push_back(s.hi);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Rational& p = pts[i];
    const Rational& q = pts[i + 1];
    while (ia < a.slabs_.size() && a.slabs_[ia].hi <= p) ++ia;
    while (ib < b.slabs_.size() && b.slabs_[ib].hi <= p) ++ib;
    const OpenSet* sa = (ia < a.slabs_.size() && a.slabs_[ia].lo <= p) ? &a.slabs_[ia].section : nullptr;
    const OpenSet* sb = (ib < b.slabs_.size() && b.slabs_[ib].lo <= p) ? &b.slabs_[ib].section : nullptr;
    switch (op) {
      case Op::kUnion:
        if (sa && sb)
          push_slab(out.slabs_, p, q, combine(*sa, *sb, op));
        else if (sa)
          push_slab(out.slabs_, p, q, *sa);
        else if (sb)
          push_slab(out.slabs_, p, q, *sb);
        break;
      case Op::kIntersect:
        if (sa && sb) push_slab(out.slabs_, p, q, combine(*sa, *sb, op));
        break;
      case Op::kSubtract:
        if (sa && sb)
          push_slab(out.slabs_, p, q, combine(*sa, *sb, op));
        else if (sa)
          push_slab(out.slabs_, p, q, *sa);
        break;
    }
  }
  return out;
}

OpenSet OpenSet::unite(const OpenSet& other) const { return combine(*this, other, Op::kUnion); }
OpenSet OpenSet::intersect(const OpenSet& other) const { return combine(*this, other, Op::kIntersect); }
OpenSet OpenSet::subtract(const OpenSet& other) const { return combine(*this, other, Op::kSubtract); }

OpenSet OpenSet::from_box(const Box& box) {
  const int dim = static_cast<int>(box.size());
  if (dim == 0) return full_point();
  for (const auto& iv : box)
    if (iv.empty()) return OpenSet(dim);
  OpenSet section = from_box(Box(box.begin() + 1, box.end()));
  OpenSet out(dim);
  out.slabs_.push_back(Slab{box[0].lo, box[0].hi, std::move(section)});
  return out;
}

OpenSet OpenSet::from_boxes(int dim, std::span<const Box> boxes) {
  std::vector<OpenSet> level;
  level.reserve(boxes.size());
  for (const auto& b : boxes) {
    if (static_cast<int>(b.size()) != dim) throw std::invalid_argument("box dimension mismatch");
    OpenSet s = from_box(b);
    if (!s.empty()) level.push_back(std::move(s));
  }
  if (level.empty()) return dim == 0 ? OpenSet(0) : OpenSet(dim);
  while (level.size() > 1) {
    std::vector<OpenSet> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) next.push_back(level[i].unite(level[i + 1]));
    if (level.size() % 2) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  return std::move(level.front());
}

OpenSet OpenSet::from_cells(const std::vector<std::vector<Rational>>& cuts,
                            const std::vector<char>& covered) {
  const std::size_t dim = cuts.size();
  std::vector<std::size_t> strides(dim, 1);
  std::size_t total = 1;
  for (std::size_t c = dim; c-- > 0;) {
    strides[c] = total;
    if (cuts[c].size() < 2) return OpenSet(static_cast<int>(dim));
    total *= cuts[c].size() - 1;
  }
  if (covered.size() != total) throw std::invalid_argument("cell bitmap size mismatch");
  std::function<OpenSet(std::size_t, std::size_t)> build = [&](std::size_t c, std::size_t offset) {
    if (c == dim) return covered[offset] ? full_point() : OpenSet(0);
    OpenSet out(static_cast<int>(dim - c));
    const auto& cut = cuts[c];
    for (std::size_t i = 0; i + 1 < cut.size(); ++i)
      push_slab(out.slabs_, cut[i], cut[i + 1], build(c + 1, offset + i * strides[c]));
    return out;
  };
  return build(0, 0);
}

bool OpenSet::contains(const Box& box) const {
  if (static_cast<int>(box.size()) != dim_) throw std::invalid_argument("box dimension mismatch");
  if (dim_ == 0) return full_;
  for (const auto& iv : box)
    if (iv.empty()) return true;
  const Interval& iv = box[0];
  Box tail(box.begin() + 1, box.end());
  Rational cursor = iv.lo;
  for (const auto& s : slabs_) {
    if (s.hi <= cursor) continue;
    if (s.lo > cursor) return false;
    if (!s.section.contains(tail)) return false;
    cursor = s.hi;
    if (cursor >= iv.hi) return true;
  }
  return false;
}

Rational OpenSet::measure_within(const Box& box) const {
  if (static_cast<int>(box.size()) != dim_) throw std::invalid_argument("box dimension mismatch");
  if (dim_ == 0) return full_ ? Rational(1) : Rational(0);
  const Interval& iv = box[0];
  if (iv.empty()) return 0;
  Box tail(box.begin() + 1, box.end());
  Rational m = 0;
  for (const auto& s : slabs_) {
    if (s.hi <= iv.lo) continue;
    if (s.lo >= iv.hi) break;
    Rational lo = s.lo > iv.lo ? s.lo : iv.lo;
    Rational hi = s.hi < iv.hi ? s.hi : iv.hi;
    Rational inner = s.section.measure_within(tail);
    if (inner != 0) m += (hi - lo) * inner;
  }
  return m;
}

void OpenSet::collect_boxes(Box& prefix, std::vector<Box>& out) const {
  if (dim_ == 0) {
    if (full_) out.push_back(prefix);
    return;
  }
  for (const auto& s : slabs_) {
    prefix.push_back(Interval{s.lo, s.hi});
    s.section.collect_boxes(prefix, out);
    prefix.pop_back();
  }
}

std::vector<Box> OpenSet::boxes() const {
  std::vector<Box> out;
  Box prefix;
  collect_boxes(prefix, out);
  return out;
}

std::vector<Rational> OpenSet::breakpoints(int coord) const {
  std::vector<Rational> pts;
  std::function<void(const OpenSet&, int)> walk = [&](const OpenSet& s, int level) {
    if (s.dim_ == 0) return;
    for (const auto& slab : s.slabs_) {
      if (level == coord) {
        pts.push_back(slab.lo);
        pts.push_back(slab.hi);
      } else {
        walk(slab.section, level + 1);
      }
    }
  };
  walk(*this, 0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

OpenSet OpenSet::permuted(std::span<const int> order) const {
  if (static_cast<int>(order.size()) != dim_) throw std::invalid_argument("permutation size mismatch");
  std::vector<Box> bs = boxes();
  for (auto& b : bs) {
    Box p(dim_);
    for (int i = 0; i < dim_; ++i) p[i] = b[order[i]];
    b = std::move(p);
  }
  return from_boxes(dim_, bs);
}

OpenSet OpenSet::project(int coord) const {
  std::vector<Box> bs;
  for (const auto& b : boxes()) bs.push_back(Box{b[coord]});
  return from_boxes(1, bs);
}

OpenSet OpenSet::map_last_fibers(const std::function<OpenSet(const OpenSet&)>& fn) const {
  if (dim_ == 1) {
    OpenSet r = fn(*this);
    if (r.dim() != 1) throw std::logic_error("fiber map changed dimension");
    return r;
  }
  if (dim_ == 0) throw std::invalid_argument("map_last_fibers on a point set");
  OpenSet out(dim_);
  for (const auto& s : slabs_) push_slab(out.slabs_, s.lo, s.hi, s.section.map_last_fibers(fn));
  return out;
}

OpenSet OpenSet::map_fibers(int coord, const std::function<OpenSet(const OpenSet&)>& fn) const {
  if (coord < 0 || coord >= dim_) throw std::invalid_argument("fiber coordinate out of range");
  if (coord == dim_ - 1) return map_last_fibers(fn);
  if (coord > 0) {
    OpenSet out(dim_);
    for (const auto& s : slabs_) push_slab(out.slabs_, s.lo, s.hi, s.section.map_fibers(coord - 1, fn));
    return out;
  }
  // coord == 0 with dim_ > 1: rotate the first coordinate to the end.
  std::vector<int> order(dim_), inverse(dim_);
  for (int i = 0; i < dim_; ++i) order[i] = (i + 1) % dim_;
  for (int i = 0; i < dim_; ++i) inverse[order[i]] = i;
  return permuted(order).map_last_fibers(fn).permuted(inverse);
}

std::string OpenSet::to_string() const {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& b : boxes()) {
    if (!first) os << " u ";
    first = false;
    os << box_to_string(b);
  }
  os << "}";
  return os.str();
}

}  // namespace hankelab
