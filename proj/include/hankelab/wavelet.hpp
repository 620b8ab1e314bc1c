#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hankelab/dyadic.hpp"
#include "hankelab/grid_function.hpp"

namespace hankelab {

/// Discrete analytic wavelets on Z_N. The interval I = [m 2^{-j}, (m+1) 2^{-j})
/// of the unit torus, 0 <= j <= log2(N) - 2, carries
///   what_I(xi) = 2^{-j/2} e^{-2 pi i (m + 1/2) 2^{-j} xi}  for 2^j <= xi < 2^{j+1},
/// and zero elsewhere. For fixed j these are a unitary DFT of the block, so the
/// family is an orthonormal basis of the positive frequencies 1..N/2-1, each
/// w_I is centered at c(I), and the support [1,2) / |I| sits inside the band
/// [2/3, 8/3] / |I|.
class WaveletFamily {
 public:
  WaveletFamily() = default;
  WaveletFamily(int N, int n);

  int N() const { return N_; }
  int n() const { return n_; }
  int levels() const { return levels_; }  // j = 0 .. levels()-1
  /// Number of 1-D members, N/2 - 1.
  int size1d() const { return (1 << levels_) - 1; }
  static int index1d(int j, std::int64_t m) { return (1 << j) - 1 + static_cast<int>(m); }

  /// 1-D tables indexed [member * N + position]: frequency index or space sample.
  const std::vector<cplx>& freq_table() const { return freq_; }
  const std::vector<cplx>& space_table() const { return space_; }

  /// Level j (|I| = 2^{-j}) and translation m of a plain dyadic side; throws
  /// std::invalid_argument if the side is outside the admissible range.
  std::pair<int, std::int64_t> side_index(const GridInterval& side) const;
  bool admissible(const DyadicRectangle& R) const;
  GridInterval side(int j, std::int64_t m) const;

  /// v_R = prod_j w_{R_j}(x_j) in space representation.
  GridFunction wavelet(const DyadicRectangle& R) const;
  /// Every admissible rectangle, in index order.
  std::vector<DyadicRectangle> rectangles() const;

 private:
  int N_ = 0;
  int n_ = 0;
  int levels_ = 0;
  std::vector<cplx> freq_;
  std::vector<cplx> space_;
};

WaveletFamily build_family(int N, int n);

struct WaveletCoeffs {
  int n = 0;
  int N = 0;
  std::map<DyadicRectangle, cplx> map;

  cplx at(const DyadicRectangle& R) const;
  /// Drops entries with |c| <= tol.
  WaveletCoeffs pruned(double tol) const;
  double l2_squared() const;
  WaveletCoeffs operator+(const WaveletCoeffs& o) const;
};

/// <f, v_R> for every admissible R.
WaveletCoeffs analyze(const GridFunction& f, const WaveletFamily& fam);
/// sum_R c(R) v_R.
GridFunction synthesize(const WaveletCoeffs& c, const WaveletFamily& fam);
/// S(x) = (sum_R |c(R)|^2 / |R| 1_R(x))^{1/2}, sampled at grid points.
GridFunction square_function(const WaveletCoeffs& c);

/// Orthogonal projection onto the family's span: each coordinate keeps
/// frequencies 1..N/2-1.
GridFunction project_admissible(const GridFunction& f);

std::string coeffs_to_json(const WaveletCoeffs& c);
WaveletCoeffs coeffs_from_json(const std::string& text);

/// max_x |w_I(x)| |I|^{1/2} (1 + dist(x, I)/|I|)^2 over all 1-D members,
/// distances measured on the torus.
double localization_constant(const WaveletFamily& fam);

}  // namespace hankelab
