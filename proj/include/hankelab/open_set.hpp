#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hankelab/rational.hpp"

namespace hankelab {

/// Half-open interval [lo, hi).
struct Interval {
  Rational lo;
  Rational hi;

  Rational length() const { return hi - lo; }
  Rational center() const { return (lo + hi) / 2; }
  bool empty() const { return hi <= lo; }
  bool contains(const Interval& o) const { return o.empty() || (lo <= o.lo && o.hi <= hi); }
  friend bool operator==(const Interval& a, const Interval& b) { return a.lo == b.lo && a.hi == b.hi; }
};

/// Axis-aligned half-open box, one interval per coordinate.
using Box = std::vector<Interval>;

Rational box_volume(const Box& box);
bool box_contains(const Box& outer, const Box& inner);
std::string box_to_string(const Box& box);

/// A finite union of half-open rational boxes in R^dim.
///
/// Stored as a canonical slab tree: along the first coordinate the set is a
/// sorted list of disjoint slabs, each carrying the (dim-1)-dimensional cross
/// section that is constant over the slab. Adjacent slabs with equal sections
/// are always merged and empty sections are dropped, so two OpenSets are equal
/// as point sets iff they compare equal structurally.
class OpenSet {
 public:
  struct Slab;

  OpenSet() = default;
  explicit OpenSet(int dim) : dim_(dim) {}

  static OpenSet from_box(const Box& box);
  static OpenSet from_boxes(int dim, std::span<const Box> boxes);
  /// The set covered by cells of a rectilinear lattice; `cuts[c]` holds the
  /// sorted cut points of coordinate c and `covered` is row-major over cells
  /// (coordinate 0 slowest).
  static OpenSet from_cells(const std::vector<std::vector<Rational>>& cuts,
                            const std::vector<char>& covered);

  int dim() const { return dim_; }
  bool empty() const { return dim_ == 0 ? !full_ : slabs_.empty(); }
  Rational measure() const;

  OpenSet unite(const OpenSet& other) const;
  OpenSet intersect(const OpenSet& other) const;
  OpenSet subtract(const OpenSet& other) const;

  bool contains(const Box& box) const;
  bool contains(const OpenSet& other) const { return other.subtract(*this).empty(); }
  /// |this ∩ box|
  Rational measure_within(const Box& box) const;

  /// Disjoint boxes whose union is the set (canonical order).
  std::vector<Box> boxes() const;
  /// All slab endpoints appearing at tree level `coord`.
  std::vector<Rational> breakpoints(int coord) const;
  /// Coordinate i of the result is coordinate order[i] of this set.
  OpenSet permuted(std::span<const int> order) const;
  /// Projection onto one coordinate.
  OpenSet project(int coord) const;

  /// Replaces every one-dimensional fiber along the last coordinate with
  /// fn(fiber) and renormalizes.
  OpenSet map_last_fibers(const std::function<OpenSet(const OpenSet&)>& fn) const;
  /// Same as map_last_fibers but for fibers along an arbitrary coordinate.
  OpenSet map_fibers(int coord, const std::function<OpenSet(const OpenSet&)>& fn) const;

  const std::vector<Slab>& slabs() const { return slabs_; }

  friend bool operator==(const OpenSet& a, const OpenSet& b);
  friend bool operator!=(const OpenSet& a, const OpenSet& b) { return !(a == b); }

  std::string to_string() const;

 private:
  enum class Op { kUnion, kIntersect, kSubtract };
  static OpenSet combine(const OpenSet& a, const OpenSet& b, Op op);
  static OpenSet full_point();
  static void push_slab(std::vector<Slab>& out, Rational lo, Rational hi, OpenSet section);
  void collect_boxes(Box& prefix, std::vector<Box>& out) const;

  int dim_ = 0;
  bool full_ = false;  // only meaningful when dim_ == 0
  std::vector<Slab> slabs_;
};

struct OpenSet::Slab {
  Rational lo;
  Rational hi;
  OpenSet section;
};

}  // namespace hankelab
