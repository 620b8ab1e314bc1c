#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hankelab {

using cplx = std::complex<double>;

/// Complex function on the torus Z_N^n. Values are row-major with coordinate
/// 0 slowest. In the frequency representation entry xi holds
/// fhat(xi) = N^{-n} sum_t f(t) e^{-2 pi i xi.t / N}, so that the L2 norm
/// (normalized counting measure in space) equals the l2 norm of fhat.
class GridFunction {
 public:
  enum class Rep { kSpace, kFrequency };

  GridFunction() = default;
  GridFunction(int n, int N, Rep rep = Rep::kSpace);
  GridFunction(int n, int N, std::vector<cplx> values, Rep rep);

  int n() const { return n_; }
  int N() const { return N_; }
  Rep rep() const { return rep_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<cplx>& values() const { return values_; }
  std::vector<cplx>& values() { return values_; }

  GridFunction to_frequency() const;
  GridFunction to_space() const;

  /// Signed frequency of DFT index i (Nyquist maps to -N/2).
  static int signed_freq(int index, int N) { return index <= N / 2 - 1 ? index : index - N; }
  static int freq_index(int freq, int N) { return ((freq % N) + N) % N; }
  std::size_t flat(std::span<const int> idx) const;

  /// L^p norm with respect to normalized measure on the torus.
  double norm(double p = 2.0) const;
  /// <f, g> = N^{-n} sum f conj(g).
  friend cplx inner(const GridFunction& f, const GridFunction& g);

  GridFunction conj() const;
  GridFunction abs() const;
  GridFunction operator+(const GridFunction& o) const;
  GridFunction operator-(const GridFunction& o) const;
  GridFunction operator*(cplx s) const;
  /// Pointwise product (both taken in space).
  friend GridFunction multiply(const GridFunction& a, const GridFunction& b);

  /// 16-byte header {n, N} as little-endian uint64, then complex64 (two
  /// little-endian float32) space values.
  void write_binary(std::ostream& os) const;
  static GridFunction read_binary(std::istream& is);

 private:
  int n_ = 0;
  int N_ = 0;
  Rep rep_ = Rep::kSpace;
  std::vector<cplx> values_;
};

}  // namespace hankelab
