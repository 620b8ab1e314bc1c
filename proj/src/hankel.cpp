#include "hankelab/hankel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

namespace hankelab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Signed frequency of every coordinate of flat index f.
std::vector<int> freq_of(std::size_t f, int n, int N) {
  std::vector<int> xi(n);
  for (int a = n - 1; a >= 0; --a) {
    xi[a] = GridFunction::signed_freq(static_cast<int>(f % N), N);
    f /= N;
  }
  return xi;
}

bool all_positive(const std::vector<int>& xi, int N) {
  for (int x : xi)
    if (x < 1 || x > N / 2 - 1) return false;
  return true;
}

bool nonzero_coords(const std::vector<int>& xi, int N) {
  for (int x : xi)
    if (x == 0 || x == -N / 2) return false;
  return true;
}

GridFunction mask(const GridFunction& f, const std::function<bool(const std::vector<int>&)>& keep) {
  auto F = f.to_frequency();
  for (std::size_t i = 0; i < F.size(); ++i)
    if (!keep(freq_of(i, F.n(), F.N()))) F.values()[i] = 0;
  return F.to_space();
}

GridFunction plus_part(const GridFunction& b) {
  int N = b.N();
  return mask(b, [N](const std::vector<int>& xi) { return all_positive(xi, N); });
}

// Multi-indices of the box prod_j [lo, hi] \ {0}, row-major.
std::vector<std::vector<int>> index_box(int n, int lo, int hi) {
  std::vector<int> axis;
  for (int x = lo; x <= hi; ++x)
    if (x != 0) axis.push_back(x);
  std::vector<std::vector<int>> out;
  std::vector<std::size_t> idx(n, 0);
  if (axis.empty()) return out;
  while (true) {
    std::vector<int> xi(n);
    for (int a = 0; a < n; ++a) xi[a] = axis[idx[a]];
    out.push_back(std::move(xi));
    int a = n - 1;
    for (; a >= 0; --a) {
      if (++idx[a] < axis.size()) break;
      idx[a] = 0;
    }
    if (a < 0) break;
  }
  return out;
}

double mass_outside_plus(const GridFunction& f) {
  auto F = f.to_frequency();
  double bad = 0, total = 0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    double m = std::norm(F.values()[i]);
    total += m;
    if (!all_positive(freq_of(i, F.n(), F.N()), F.N())) bad += m;
  }
  return total == 0 ? 0 : std::sqrt(bad / total);
}

// f (1-D) in coordinate k times g in the remaining coordinates.
GridFunction tensor_insert(const GridFunction& f, const GridFunction& g, int k) {
  const int d = g.n() + 1, N = f.N();
  auto fs = f.to_space(), gs = g.to_space();
  GridFunction out(d, N);
  std::vector<int> t(d, 0);
  for (auto& v : out.values()) {
    std::size_t gi = 0;
    for (int a = 0; a < d; ++a)
      if (a != k) gi = gi * N + t[a];
    v = fs.values()[t[k]] * gs.values()[gi];
    for (int a = d - 1; a >= 0; --a) {
      if (++t[a] < N) break;
      t[a] = 0;
    }
  }
  return out;
}

struct PolyData {
  cplx lead;
  std::vector<cplx> roots;
  int zero_order = 0;
};

PolyData polynomial_roots(const GridFunction& h) {
  if (h.n() != 1) throw std::invalid_argument("inner_outer_factor: one-variable input required");
  auto F = h.to_frequency();
  const int N = h.N();
  double total = 0, neg = 0, mx = 0;
  for (int i = 0; i < N; ++i) {
    double m = std::norm(F.values()[i]);
    total += m;
    if (GridFunction::signed_freq(i, N) < 0) neg += m;
    else mx = std::max(mx, std::sqrt(m));
  }
  if (total == 0) throw std::invalid_argument("inner_outer_factor: zero input");
  if (std::sqrt(neg / total) > 1e-12) throw std::invalid_argument("inner_outer_factor: input is not analytic");
  const double tol = 1e-14 * mx;
  int lo = -1, hi = -1;
  for (int k = 0; k <= N / 2 - 1; ++k)
    if (std::abs(F.values()[k]) > tol) {
      if (lo < 0) lo = k;
      hi = k;
    }
  PolyData p;
  p.zero_order = lo;
  p.lead = F.values()[hi];
  const int d = hi - lo;
  if (d > 0) {
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 1; i < d; ++i) C(i, i - 1) = 1;
    for (int i = 0; i < d; ++i) C(i, d - 1) = -F.values()[lo + i] / p.lead;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("inner_outer_factor: root finding failed");
    for (int i = 0; i < d; ++i) p.roots.push_back(es.eigenvalues()(i));
  }
  return p;
}

cplx grid_point(int t, int N) { return std::polar(1.0, kTwoPi * t / N); }

}  // namespace

int SignPattern::sgn() const {
  int s = 1;
  for (int x : sigma) s *= x;
  return s;
}

SignPattern SignPattern::operator-() const {
  SignPattern r = *this;
  for (int& x : r.sigma) x = -x;
  return r;
}

std::vector<SignPattern> SignPattern::all(int n) {
  std::vector<SignPattern> out;
  for (unsigned bits = 0; bits < (1u << n); ++bits) {
    SignPattern s{std::vector<int>(n)};
    for (int j = 0; j < n; ++j) s.sigma[j] = (bits >> j & 1) ? -1 : 1;
    out.push_back(std::move(s));
  }
  return out;
}

bool has_inadmissible_mass(const GridFunction& f, double tol) {
  auto F = f.to_frequency();
  double bad = 0, total = 0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    double m = std::norm(F.values()[i]);
    total += m;
    if (!nonzero_coords(freq_of(i, F.n(), F.N()), F.N())) bad += m;
  }
  return total > 0 && std::sqrt(bad) > tol * std::sqrt(total);
}

GridFunction project_nonzero(const GridFunction& f) {
  int N = f.N();
  return mask(f, [N](const std::vector<int>& xi) { return nonzero_coords(xi, N); });
}

GridFunction project_sigma(const GridFunction& f, const SignPattern& sigma) {
  if (static_cast<int>(sigma.sigma.size()) != f.n()) throw std::invalid_argument("project_sigma: dimension mismatch");
  if (has_inadmissible_mass(f)) throw std::invalid_argument("project_sigma: mass at frequency 0 or Nyquist");
  return mask(f, [&](const std::vector<int>& xi) {
    for (std::size_t j = 0; j < xi.size(); ++j)
      if ((xi[j] > 0 ? 1 : -1) != sigma.sigma[j]) return false;
    return true;
  });
}

int bandwidth(const GridFunction& f, double tol) {
  auto F = f.to_frequency();
  double mx = 0;
  for (const auto& v : F.values()) mx = std::max(mx, std::abs(v));
  if (mx == 0) return 0;
  int B = 0;
  for (std::size_t i = 0; i < F.size(); ++i)
    if (std::abs(F.values()[i]) > tol * mx)
      for (int x : freq_of(i, F.n(), F.N())) B = std::max(B, std::abs(x));
  return B;
}

OperatorMatrix hankel_matrix(const GridFunction& b, const HankelOptions& opt) {
  const int n = b.n(), N = b.N();
  int K = opt.K > 0 ? opt.K : std::max(2, bandwidth(plus_part(b)));
  if (2 * K >= N / 2) throw std::invalid_argument("hankel_matrix: guard band violated (need 2K < N/2)");
  auto F = b.to_frequency();
  OperatorMatrix A;
  A.domain = index_box(n, 1, K);
  A.codomain = index_box(n, -K, -1);
  A.M = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(A.codomain.size()), static_cast<Eigen::Index>(A.domain.size()));
  std::vector<int> diff(n);
  for (std::size_t c = 0; c < A.domain.size(); ++c)
    for (std::size_t r = 0; r < A.codomain.size(); ++r) {
      // (conj(b) e_eta)^(zeta) = conj(bhat(eta - zeta)); eta - zeta is positive in every coordinate
      for (int a = 0; a < n; ++a) diff[a] = A.domain[c][a] - A.codomain[r][a];
      A.M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = std::conj(F.values()[F.flat(diff)]);
    }
  return A;
}

double operator_norm(const Eigen::MatrixXcd& A) {
  if (A.size() == 0) return 0;
  if (std::max(A.rows(), A.cols()) <= 4096) {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(A);
    return svd.singularValues()(0);
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(A.cols());
  for (auto& x : v) x = cplx(g(rng), g(rng));
  v.normalize();
  double lambda = 0;
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXcd w = A.adjoint() * (A * v);
    double next = w.norm();
    if (next == 0) return 0;
    v = w / next;
    if (std::abs(next - lambda) <= 1e-8 * next) return std::sqrt(next);
    lambda = next;
  }
  return std::sqrt(lambda);
}

double operator_norm(const OperatorMatrix& A) { return operator_norm(A.M); }

OperatorMatrix commutator_matrix(const GridFunction& b, CommutatorMethod method, int K) {
  const int n = b.n(), N = b.N();
  auto bb = project_nonzero(b);
  if (K <= 0) K = std::max(2, bandwidth(bb));
  if (2 * K >= N / 2) throw std::invalid_argument("commutator_matrix: guard band violated (need 2K < N/2)");
  auto F = bb.to_frequency();
  OperatorMatrix A;
  A.domain = index_box(n, -K, K);
  A.codomain = A.domain;
  const auto D = static_cast<Eigen::Index>(A.domain.size());
  Eigen::MatrixXcd M(D, D);
  std::vector<int> diff(n);
  for (Eigen::Index c = 0; c < D; ++c)
    for (Eigen::Index r = 0; r < D; ++r) {
      for (int a = 0; a < n; ++a) diff[a] = A.codomain[r][a] - A.domain[c][a];
      M(r, c) = F.values()[F.flat(diff)];
    }
  if (method == CommutatorMethod::kNested) {
    Eigen::MatrixXcd C = M;
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXcd h(D);
      for (Eigen::Index i = 0; i < D; ++i) h(i) = A.domain[i][j] < 0 ? 1.0 : -1.0;  // P_j^- - P_j^+
      C = (C * h.asDiagonal() - h.asDiagonal() * C).eval();
    }
    A.M = std::move(C);
  } else {
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(D, D);
    for (const auto& s : SignPattern::all(n)) {
      Eigen::VectorXcd p(D), q(D);
      for (Eigen::Index i = 0; i < D; ++i) {
        bool in = true, out = true;
        for (int j = 0; j < n; ++j) {
          int sign = A.domain[i][j] > 0 ? 1 : -1;
          in &= sign == s.sigma[j];
          out &= sign == -s.sigma[j];
        }
        p(i) = in ? 1.0 : 0.0;
        q(i) = out ? 1.0 : 0.0;
      }
      C += (-std::ldexp(1.0, n) * s.sgn()) * (q.asDiagonal() * M * p.asDiagonal());
    }
    A.M = std::move(C);
  }
  return A;
}

cplx duality_pair(const GridFunction& b, const GridFunction& f, const GridFunction& g) {
  if (b.n() != f.n() || b.n() != g.n() || b.N() != f.N() || b.N() != g.N())
    throw std::invalid_argument("duality_pair: grid mismatch");
  if (mass_outside_plus(f) > 1e-12 || mass_outside_plus(g) > 1e-12)
    throw std::invalid_argument("duality_pair: f and g must be analytic");
  if (bandwidth(f) + bandwidth(g) >= f.N() / 2) throw std::invalid_argument("duality_pair: guard band violated");
  return inner(multiply(f, g), plus_part(b));
}

InnerOuter inner_outer_factor(const GridFunction& h) {
  auto p = polynomial_roots(h);
  const int N = h.N();
  InnerOuter io{GridFunction(1, N), GridFunction(1, N), p.roots, p.zero_order, 0};
  for (int t = 0; t < N; ++t) {
    cplx z = grid_point(t, N);
    cplx in = std::pow(z, p.zero_order), out = p.lead;
    for (const auto& r : p.roots) {
      if (std::abs(r) < 1) {
        in *= (z - r) / (1.0 - std::conj(r) * z);
        out *= 1.0 - std::conj(r) * z;
      } else {
        out *= z - r;
      }
    }
    io.inner.values()[t] = in;
    io.outer.values()[t] = out;
  }
  auto hs = h.to_space();
  io.residual = (multiply(io.inner, io.outer) - hs).norm(2) / hs.norm(2);
  if (!(io.residual <= 1e-8))
    throw std::runtime_error("inner_outer_factor: reassembly residual " + std::to_string(io.residual));
  return io;
}

std::pair<GridFunction, GridFunction> balanced_factor(const GridFunction& h) {
  auto io = inner_outer_factor(h);
  const int N = h.N();
  GridFunction s(1, N);
  for (int t = 0; t < N; ++t) {
    cplx z = grid_point(t, N);
    // every factor has nonnegative real part on the closed disk, so the
    // principal square root is analytic there
    cplx v = 1;
    for (const auto& r : io.roots) v *= std::abs(r) < 1 ? std::sqrt(1.0 - std::conj(r) * z) : std::sqrt(1.0 - z / r);
    s.values()[t] = v;
  }
  // outer / s^2 is a constant; read it off where s is largest
  std::size_t best = 0;
  for (std::size_t t = 1; t < s.size(); ++t)
    if (std::abs(s.values()[t]) > std::abs(s.values()[best])) best = t;
  cplx rc = std::sqrt(io.outer.values()[best] / (s.values()[best] * s.values()[best]));
  for (auto& v : s.values()) v *= rc;
  return {multiply(io.inner, s), s};
}

WeakFactorization weak_factorization_witness(const WaveletCoeffs& c, const WaveletFamily& fam,
                                             const std::optional<GridFunction>& b) {
  auto sup = c.pruned(0.0);
  WeakFactorization out;
  out.psi = synthesize(sup, fam);
  const int n = fam.n(), N = fam.N();
  if (sup.map.empty()) return out;
  for (int k = 0; k < n && out.frozen_coord < 0; ++k) {
    bool frozen = true;
    const auto& I = sup.map.begin()->first.sides[k];
    for (const auto& [R, v] : sup.map) frozen &= R.sides[k] == I;
    if (frozen) out.frozen_coord = k;
  }
  if (out.frozen_coord < 0) throw std::invalid_argument("weak_factorization_witness: collection is not (n-1)-parameter");

  using Terms = std::vector<std::pair<DyadicRectangle, cplx>>;
  std::vector<WaveletFamily> fams;  // fams[d] has dimension d
  for (int d = 0; d <= n; ++d) fams.push_back(d == 0 ? WaveletFamily() : WaveletFamily(N, d));

  std::function<std::vector<std::pair<GridFunction, GridFunction>>(const Terms&, int, int)> split =
      [&](const Terms& terms, int d, int k) {
        std::vector<std::pair<GridFunction, GridFunction>> pairs;
        auto [a1, a2] = balanced_factor(fams[1].wavelet(DyadicRectangle{{terms.front().first.sides[k]}}));
        if (d == 1) {
          pairs.emplace_back(a1 * terms.front().second, a2);
          return pairs;
        }
        Terms rest;
        for (const auto& [R, v] : terms) {
          DyadicRectangle Rp;
          for (int a = 0; a < d; ++a)
            if (a != k) Rp.sides.push_back(R.sides[a]);
          rest.emplace_back(std::move(Rp), v);
        }
        if (d == 2) {
          WaveletCoeffs cp{1, N, {}};
          for (const auto& [Rp, v] : rest) cp.map[Rp] += v;
          auto [b1, b2] = balanced_factor(synthesize(cp, fams[1]));
          pairs.emplace_back(tensor_insert(a1, b1, k), tensor_insert(a2, b2, k));
          return pairs;
        }
        std::map<GridInterval, Terms> groups;
        for (auto& t : rest) groups[t.first.sides[0]].push_back(t);
        for (const auto& [J, group] : groups)
          for (auto& [p, q] : split(group, d - 1, 0))
            pairs.emplace_back(tensor_insert(a1, p, k), tensor_insert(a2, q, k));
        return pairs;
      };
  Terms all(sup.map.begin(), sup.map.end());
  out.pairs = split(all, n, out.frozen_coord);

  GridFunction sum(n, N);
  for (const auto& [p, q] : out.pairs) {
    sum = sum + multiply(p, q);
    out.tensor_bound += p.norm(2) * q.norm(2);
  }
  out.residual = (sum - out.psi).norm(2);
  if (b) out.pairing_error = std::abs(inner(out.psi, *b) - cplx(sup.l2_squared()));
  return out;
}

}  // namespace hankelab
