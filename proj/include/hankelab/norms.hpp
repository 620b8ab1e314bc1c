#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hankelab/dyadic.hpp"
#include "hankelab/open_set.hpp"
#include "hankelab/wavelet.hpp"

namespace hankelab {

enum class BmoStrategy { kSingleRect, kGreedy, kExhaustive, kFrozenCoordinate };

std::string to_string(BmoStrategy s);
BmoStrategy parse_strategy(std::string_view s);

/// A lower bound for a BMO-type supremum together with the set or collection
/// attaining it. For BMO the witness is an open set U and value is
/// carleson_ratio(c, U). For BMO_{-1} the witness is a collection with one
/// frozen side and value is collection_ratio(c, witness).
struct BmoEstimate {
  double value = 0;
  OpenSet witness_set;
  std::vector<DyadicRectangle> witness;
  BmoStrategy strategy = BmoStrategy::kSingleRect;
  /// e with 1/2 < 2^e |witness_set| <= 1: dilating one coordinate by 2^e
  /// brings the witness to the normalization 1/2 < |sh| <= 1.
  int rescale_exponent = 0;
  int frozen_coord = -1;  // BMO_{-1} only
};

/// [|U|^{-1} sum_{R subset U} |c(R)|^2]^{1/2}; containment is exact.
double carleson_ratio(const WaveletCoeffs& c, const OpenSet& U);
/// [|sh(coll)|^{-1} sum_{R in coll} |c(R)|^2]^{1/2}.
double collection_ratio(const WaveletCoeffs& c, std::span<const DyadicRectangle> coll);

/// Exhaustive search is limited to this many nonzero coefficients.
inline constexpr std::size_t kExhaustiveLimit = 16;

/// single-rect: best dyadic rectangle (rectangular BMO); greedy: starts from
/// that rectangle and adds the support rectangle with the best resulting
/// ratio while it improves; exhaustive: every union of support rectangles,
/// which attains the true supremum for a finitely supported family.
BmoEstimate bmo_estimate(const WaveletCoeffs& c, BmoStrategy strategy);

/// Supremum over a frozen coordinate k and interval I of the collection
/// ratio over collections with R_k = I. The inner problem is the
/// (n-1)-parameter Carleson problem; it is solved exactly by single intervals
/// when n = 2 and by `strategy` otherwise.
BmoEstimate bmo_minus1(const WaveletCoeffs& c, BmoStrategy strategy);

struct CarlesonViolation : std::runtime_error {
  OpenSet set;
  double mass = 0;
  CarlesonViolation(OpenSet s, double m);
};

/// ||sum_{R subset W} (a_R/|R|) 1_R||_p / |W|^{1/p}, after checking
/// sum_{R subset W'} a_R <= |W'| on every test set (throws CarlesonViolation).
double john_nirenberg_check(const std::map<DyadicRectangle, double>& a, const OpenSet& W, double p,
                            std::span<const OpenSet> test_sets);

/// Seeded test sets for the Carleson precondition: W, every rectangle, and
/// `count` shadows of random subfamilies.
std::vector<OpenSet> carleson_test_sets(const std::map<DyadicRectangle, double>& a, const OpenSet& W,
                                        std::uint64_t seed, int count);

/// Scales weights a_R so that the Carleson condition holds on the test sets
/// with equality on the worst one.
std::map<DyadicRectangle, double> carleson_normalize(const std::map<DyadicRectangle, double>& a,
                                                     std::span<const OpenSet> test_sets);

std::string estimate_to_json(const BmoEstimate& e);

}  // namespace hankelab
