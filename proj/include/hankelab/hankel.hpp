#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "hankelab/grid_function.hpp"
#include "hankelab/wavelet.hpp"

namespace hankelab {

/// sigma(j) in {+1, -1} per coordinate.
struct SignPattern {
  std::vector<int> sigma;

  int sgn() const;
  SignPattern operator-() const;
  /// All 2^n patterns; pattern bit j set means sigma(j) = -1.
  static std::vector<SignPattern> all(int n);
  static SignPattern plus(int n) { return {std::vector<int>(n, 1)}; }
  static SignPattern minus(int n) { return {std::vector<int>(n, -1)}; }
};

/// Frequencies of f-hat with some coordinate equal to 0 or N/2 carry more than
/// tol * ||f||_2 of mass.
bool has_inadmissible_mass(const GridFunction& f, double tol = 1e-12);
/// Zeroes every frequency with a coordinate equal to 0 or N/2.
GridFunction project_nonzero(const GridFunction& f);

/// Keeps frequencies whose sign in coordinate j is sigma(j). Throws
/// std::invalid_argument when f has mass at frequency 0 or Nyquist.
GridFunction project_sigma(const GridFunction& f, const SignPattern& sigma);

/// Dense matrix in the orthonormal exponential basis e_xi(t) = e^{2 pi i xi.t/N}.
struct OperatorMatrix {
  std::vector<std::vector<int>> domain;
  std::vector<std::vector<int>> codomain;
  Eigen::MatrixXcd M;
};

/// Largest coordinate magnitude of a frequency carrying mass above tol * max.
int bandwidth(const GridFunction& f, double tol = 1e-13);

struct HankelOptions {
  /// Analytic domain [1, K]^n and anti-analytic codomain [-K, -1]^n; 0 picks
  /// K = max(2, bandwidth of P^plus b), which already captures the full
  /// operator since columns beyond the bandwidth vanish.
  int K = 0;
};

/// Matrix of phi -> P^minus(conj(b) phi). Requires 2K < N/2 so every product
/// frequency is represented without wrap-around (std::invalid_argument otherwise).
OperatorMatrix hankel_matrix(const GridFunction& b, const HankelOptions& opt = {});

/// Largest singular value: dense SVD up to dimension 4096, power iteration on
/// A^H A (relative tolerance 1e-8) above.
double operator_norm(const OperatorMatrix& A);
double operator_norm(const Eigen::MatrixXcd& A);

enum class CommutatorMethod { kNested, kProjectionSum };

/// Commutators compressed to the truncation {xi : 1 <= |xi_j| <= K}.
/// kNested: [...[[M_b, H_1], H_2], ..., H_n] with H_j = P_j^- - P_j^+.
/// kProjectionSum: -2^n sum_sigma sgn(sigma) P^{-sigma} M_b P^sigma.
/// The two agree up to the factor (-1)^{n+1}: nested equals
/// (-2)^n sum_sigma sgn(sigma) P^{-sigma} M_b P^sigma.
OperatorMatrix commutator_matrix(const GridFunction& b, CommutatorMethod method, int K = 0);

/// Integral of conj(P^plus b) f g with normalized measure. f and g must be
/// analytic and admissible with bandwidth(f) + bandwidth(g) < N/2.
cplx duality_pair(const GridFunction& b, const GridFunction& f, const GridFunction& g);

struct InnerOuter {
  GridFunction inner;
  GridFunction outer;
  std::vector<cplx> roots;  // of h(z) = sum_k hhat(k) z^k, excluding the z^m factor
  int zero_order = 0;       // multiplicity of the root at z = 0
  double residual = 0;      // ||inner outer - h||_2 / ||h||_2
};

/// h(z) = sum_{k>=0} hhat(k) z^k on the grid z = e^{2 pi i t/N}. The inner
/// factor is z^m times the Blaschke product over roots inside the disk, the
/// outer factor h / inner. Throws on zero input, on negative frequencies, and
/// when the reassembly residual exceeds 1e-8.
InnerOuter inner_outer_factor(const GridFunction& h);

/// Splits h = a b with ||a||_2 ||b||_2 = ||h||_1: a = inner sqrt(outer),
/// b = sqrt(outer), using the branch of sqrt(outer) analytic in the disk.
std::pair<GridFunction, GridFunction> balanced_factor(const GridFunction& h);

struct WeakFactorization {
  std::vector<std::pair<GridFunction, GridFunction>> pairs;
  GridFunction psi;          // sum_R c(R) v_R
  double tensor_bound = 0;   // sum_k ||phi_k||_2 ||varphi_k||_2
  double residual = 0;       // ||sum_k phi_k varphi_k - psi||_2
  double pairing_error = 0;  // |<psi, b> - sum |c|^2| when b is given
  int frozen_coord = -1;
};

/// psi = sum_R c(R) v_R for c supported on a collection with a common side in
/// some coordinate k: psi = w_I(x_k) psi'(x'). w_I is split by
/// balanced_factor; psi' directly when it has one variable, otherwise by
/// grouping on the next coordinate and recursing. Throws if no coordinate is
/// frozen.
WeakFactorization weak_factorization_witness(const WaveletCoeffs& c, const WaveletFamily& fam,
                                             const std::optional<GridFunction>& b = std::nullopt);

}  // namespace hankelab
