#pragma once

#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "hankelab/dyadic.hpp"
#include "hankelab/maximal.hpp"
#include "hankelab/norms.hpp"
#include "hankelab/open_set.hpp"

namespace hankelab {

struct JourneConfig {
  Rational delta = Rational(1, 8);
  Rational epsilon = Rational(1, 2);
  MaximalOptions maximal;
  /// journe_full reruns enlarge with delta/2, delta/4, ... until the stage
  /// measure bound |V^m| <= (1 + delta)|sh| holds (at most this many halvings).
  int max_halvings = 10;

  /// Smallest d >= 1 with 1/(2^d + 1) <= delta.
  int d() const;
};

/// Backwards-induction enlargement: Enl(n+1) = sh, Enl(j) = {M_j 1 > 1 - delta^{2^j}}
/// for j = n..2 (plain grid), then V = {M_1^{D_d} 1 > 1 - delta/2}.
OpenSet enlarge(const RectCollection& coll, const JourneConfig& cfg);
OpenSet enlarge_set(const OpenSet& shadow, const Rational& delta, const MaximalOptions& opt = {});

/// sup{mu >= 1 : R dilated by mu in `coords` lies in V}. Containment is
/// monotone in mu and only changes where a dilated edge crosses a breakpoint
/// of V, so the supremum is one of those crossing values and is attained.
/// Throws std::invalid_argument("not embedded") when R is not inside V.
Rational embeddedness(const Box& R, const OpenSet& V, std::span<const int> coords);
Rational embeddedness(const DyadicRectangle& R, const OpenSet& V, std::span<const int> coords);

/// One cell of an F-partition.
struct FCell {
  std::vector<DyadicRectangle> members;
  OpenSet shadow;
};

/// Key (I, k, m): frozen side I in coordinate m and class index k.
using FKey = std::tuple<GridInterval, int, int>;
using FPartition = std::map<FKey, FCell>;

/// Groups rectangles by their side in `coord` and the class k with
/// 2^{k-1} <= emb < 2^k, emb being the embeddedness in coordinate `coord`.
FPartition few_small_partition(const RectCollection& coll, const OpenSet& V, int coord);

/// max over subsets of sum_{I,k} 2^{-eps k} |F(I,k,U')| / |sh(U')|. Empty
/// subsets are skipped. Returns a double since 2^{-eps k} is irrational in general.
double few_small_ratio(const RectCollection& coll, const OpenSet& V, const Rational& epsilon,
                       std::span<const RectCollection> subsets, int coord = 0);

/// Per-rectangle data of the full construction.
struct EmbeddingEntry {
  DyadicRectangle rect;
  Rational emb;  // max(1, min_m beta^m / 16)
  int iota = 0;  // coordinate attaining the minimum (lowest index on ties)
  std::vector<Rational> beta;       // beta^m, capped at gamma-bar for m >= 1
  std::vector<Rational> gamma_cap;  // gamma_m (infinite for m = 0, stored as 0)
  std::vector<Rational> gamma_bar;  // gamma-bar at stage m (1 for m = 0)
  std::vector<DyadicRectangle> phi; // phi^m(R)
  bool contained = false;           // Emb(R) R inside V, checked exactly
};

struct JourneResult {
  OpenSet V;
  std::vector<OpenSet> stages;          // V^1 .. V^n
  std::vector<std::size_t> stage_sizes; // |U^0| .. |U^{n-1}|
  std::vector<Rational> stage_delta;    // delta actually used per stage
  std::vector<EmbeddingEntry> entries;  // one per rectangle of the input
  Rational shadow_measure;
  Rational V_measure;
};

JourneResult journe_full(const RectCollection& coll, const JourneConfig& cfg);

/// F(I, k, m, U') from Emb and iota: 2^k <= Emb < 2^{k+1}, iota = m, R_m = I.
FPartition journe_partition(const JourneResult& res, std::span<const DyadicRectangle> subset);

/// Checks the probability proposition on a finite list of values in [0, 1]
/// with uniform weights: with eta = 1 - mean, the fraction of values below
/// 1 - sqrt(eta) is at most sqrt(eta). Exact.
bool probability_bound_holds(std::span<const Rational> values);

/// Splits a class of rectangles by side length in `coord` so that within a
/// subclass distinct lengths differ by more than 40 * 2^k / delta.
std::vector<std::vector<DyadicRectangle>> separate_scales(std::span<const DyadicRectangle> rects, int k,
                                                          const Rational& delta, int coord = 0);
/// The subclass count bound used by separate_scales: floor(log2(40 2^k / delta)) + 1.
int separation_classes(int k, const Rational& delta);

/// H(I) = F(I) - union of F(I') over I' strictly containing I, for the cells
/// of one class k in coordinate `coord`.
std::map<GridInterval, OpenSet> h_sets(const FPartition& part, int k, int coord);

/// Verification of sum_{R in U'} |<b, v_R>|^2 <= BMO_{-1}^2 sum_{I,m} |F(I,k,m,U')|
/// for the class U' of rectangles with 2^k <= Emb < 2^{k+1}.
struct ClassCheck {
  int k = 0;
  std::size_t count = 0;
  double lhs = 0;
  double rhs = 0;
  bool holds = false;
};

struct JourneBmoReport {
  JourneResult journe;
  WaveletCoeffs weighted;     // coeffs(R) Emb(R)^{-(n+eps)}
  BmoEstimate weighted_bmo;
  BmoEstimate minus1;
  /// The BMO_{-1} lower bound used in the class checks: the estimate above
  /// or the ratio of an F cell (each cell has one frozen side), whichever is larger.
  double minus1_value = 0;
  std::vector<ClassCheck> classes;
  /// weighted_bmo.value / minus1_value (0 when both vanish).
  double ratio = 0;
};

/// Runs journe_full on `coll` and weights `coeffs` by the embeddedness.
/// Throws std::invalid_argument("support mismatch") if a nonzero coefficient
/// sits on a rectangle outside `coll`.
JourneBmoReport journe_bmo_weights(const WaveletCoeffs& coeffs, const RectCollection& coll, const JourneConfig& cfg,
                                   BmoStrategy strategy = BmoStrategy::kGreedy);

}  // namespace hankelab
