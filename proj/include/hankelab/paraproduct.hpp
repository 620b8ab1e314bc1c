#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hankelab/dyadic.hpp"
#include "hankelab/grid_function.hpp"
#include "hankelab/journe.hpp"
#include "hankelab/norms.hpp"
#include "hankelab/open_set.hpp"
#include "hankelab/wavelet.hpp"

namespace hankelab {

struct Deltas {
  Rational delta_minus1 = Rational(1, 32);
  Rational delta_journe = Rational(1, 8);
  Rational delta_2 = Rational(1, 16);
  Rational delta_3 = Rational(1, 64);

  /// Throws std::invalid_argument unless every delta lies in (0, 1).
  void validate() const;
};

/// Subset of coordinates as a bit mask (bit j set means j is in J).
using CoordSet = std::uint32_t;

/// Output of build_UVW. Measures are in the native units of the unit torus;
/// `scale` = 2^{rescale exponent} converts them to the normalization
/// 1/2 < |sh(U)| <= 1, and the coefficients are divided by `bmo` so that the
/// witness has Carleson ratio 1.
struct UVW {
  int n = 0;
  std::vector<DyadicRectangle> U;
  OpenSet shadow_U;
  OpenSet V_set;
  std::vector<DyadicRectangle> Vcoll;
  std::vector<DyadicRectangle> Wcoll;
  std::map<int, std::vector<DyadicRectangle>> U_d1;
  std::map<DyadicRectangle, int> d1_of;
  JourneResult journe;
  double bmo = 0;
  double scale = 1;
  /// True when U came from the exhaustive search (a true maximizer).
  bool exact_witness = false;
};

/// U is the witness of bmo_estimate (exhaustive when the support allows it,
/// greedy otherwise) restricted to support rectangles inside the witness set.
/// V_set comes from journe_full with delta = delta_journe. Vcoll and Wcoll
/// range over all admissible rectangles of `fam` with every level at most
/// `max_level` (-1: no limit). d1 = floor(log2 Emb(R)). Throws
/// std::invalid_argument("degenerate witness") for a zero symbol.
UVW build_UVW(const WaveletCoeffs& coeffs, const WaveletFamily& fam, const Deltas& deltas, const JourneConfig& cfg,
              int max_level = -1);

/// 8|R'_j| < |R_j| for j in J, |R'_j|/8 <= |R_j| <= 8|R'_j| otherwise.
bool prec_J(const DyadicRectangle& Rp, const DyadicRectangle& R, CoordSet J);
/// The unique J with Rp prec_J R, if any.
std::optional<CoordSet> relation_set(const DyadicRectangle& Rp, const DyadicRectangle& R);
/// Smallest t >= 0 with Rp inside the concentric dilate 2^t R.
int containment_exponent(const DyadicRectangle& Rp, const DyadicRectangle& R);

struct PairClass {
  int d1 = 0;
  CoordSet J = 0;
  int d2 = 0;
  std::vector<int> ell;  // log2 |R'_j|, j in J ascending
  std::vector<int> d3;   // log2(|R_j| / |R'_j|), j in J ascending

  int d3_norm() const;
  std::string key() const;
  friend std::strong_ordering operator<=>(const PairClass&, const PairClass&) = default;
  friend bool operator==(const PairClass&, const PairClass&) = default;
};

using RectPair = std::pair<DyadicRectangle, DyadicRectangle>;  // (R', R)

/// One cell X(J, d2, ell, d3) at fixed d1. Branch i maps each R' to its
/// (i mod count)-th partner in sorted order, so the branches together cover
/// every pair of the cell.
struct PairSet {
  PairClass cls;
  std::vector<RectPair> pairs;  // sorted
  std::map<DyadicRectangle, std::vector<DyadicRectangle>> partners;
  std::vector<std::map<DyadicRectangle, DyadicRectangle>> branches;
  /// Fraction of pairs lying on some listed branch (1 unless sampled).
  double coverage = 1;

  std::size_t max_partners() const;
};

/// d2 = t - 1 for t = containment_exponent(R', R); then R' is inside
/// 2^{d2+4} R but not inside 2^{d2} R, and d2 >= d1 because R' is not in V.
/// Pairs related by no J are dropped. When a cell has more than
/// `max_branches` branches, that many are sampled with `seed`.
std::vector<PairSet> partition_pairs(const UVW& uvw, std::uint64_t seed = 0, std::size_t max_branches = 64);

enum class Bilinear { kX, kXtilde, kY };

/// X = sum conj(b_{R'} v_{R'}) b_R v_R, Xtilde = sum beta(R') beta(R) / sqrt(|R'| |R|) 1_{R'},
/// Y = Xtilde restricted to the graph of branch `branch`. Throws
/// std::invalid_argument("coverage gap") when a rectangle is not admissible.
GridFunction assemble_bilinear(const WaveletCoeffs& coeffs, const WaveletFamily& fam, const PairSet& ps,
                               Bilinear variant, std::size_t branch = 0);

/// Indicator of a plain dyadic rectangle on the grid of side N.
GridFunction indicator(const DyadicRectangle& R, int N);
/// Keeps the frequencies that are negative in every coordinate.
GridFunction anti_analytic(const GridFunction& f);

struct OrthogonalityReport {
  std::size_t separated_pairs = 0;  // pairs of pairs with a 16x gap in some j in J
  double max_inner = 0;             // largest |<v_{R'} conj v_R, v_{~R'} conj v_{~R}>|
  std::size_t vanishing_checked = 0;
  double max_vanishing = 0;         // largest ||P^minus(v_{R'} conj v_R)||_2
  bool holds(double tol = 1e-10) const { return max_inner <= tol && max_vanishing <= tol; }
};

/// All pairs of the listed sets must share J. At most `max_pairs` pairs
/// (evenly spaced) enter the quadratic orthogonality scan.
OrthogonalityReport orthogonality_check(const std::vector<const PairSet*>& sets, const WaveletFamily& fam,
                                        std::size_t max_pairs = 128);

/// Union over ell of {M Y_ell > delta_minus1 2^{d3_norm/8}} with the dyadic
/// strong maximal function of |Y_ell|, intersected with the unit cube.
OpenSet exceptional_set(const std::vector<GridFunction>& Ys, const Rational& delta_minus1, int d3_norm);

/// Integral of |f|^2 over the complement of E (f constant on grid cells).
double integral_off(const GridFunction& f, const OpenSet& E);

/// One measured inequality lhs <= C rhs. Exact rows carry C = 1 and must hold
/// up to rounding; the others record ratio = lhs / rhs for constant freezing.
struct BoundRow {
  std::string klass;  // "global", "d1=..", or a PairClass key
  std::string name;
  double lhs = 0;
  double rhs = 0;
  bool exact = false;
  bool holds = true;

  /// lhs / rhs; infinite when rhs vanishes up to 1e-12 |lhs|.
  double ratio() const;
};

struct BoundsReport {
  UVW uvw;
  std::vector<PairSet> sets;
  std::vector<BoundRow> rows;
  std::size_t unclassified_pairs = 0;
  std::vector<std::string> violations;  // exact rows that fail
};

struct BoundsOptions {
  int max_level = -1;
  std::uint64_t seed = 0;
  std::size_t max_branches = 64;
  /// Lebesgue exponent used for the square-function rows.
  double p = 8.0;
  /// 1/2 keeps the cascade thresholds strict as c 2^{-x}.
  Rational cascade_c = Rational(1, 2);
};

/// Runs the whole pipeline on coefficients normalized to Carleson ratio 1 on
/// the witness and tabulates every inequality (see README for the row names).
BoundsReport bounds_report(const WaveletCoeffs& coeffs, const WaveletFamily& fam, const Deltas& deltas,
                           const JourneConfig& cfg, const BoundsOptions& opt = {});

std::string rows_to_csv(const std::vector<BoundRow>& rows);

}  // namespace hankelab
