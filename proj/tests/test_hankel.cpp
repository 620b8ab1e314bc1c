#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "hankelab/hankel.hpp"

using namespace hankelab;

namespace {

GridFunction mode(int n, int N, std::vector<int> xi, cplx a = 1.0) {
  GridFunction F(n, N, GridFunction::Rep::kFrequency);
  F.values()[F.flat(xi)] = a;
  return F.to_space();
}

// Random symbol with frequencies in [-B, B]^n, no zero coordinate.
GridFunction random_symbol(int n, int N, int B, std::mt19937_64& rng, bool analytic = false) {
  std::normal_distribution<double> g;
  GridFunction F(n, N, GridFunction::Rep::kFrequency);
  std::vector<int> xi(n);
  for (std::size_t i = 0; i < F.size(); ++i) {
    std::size_t f = i;
    bool ok = true;
    for (int a = n - 1; a >= 0; --a) {
      xi[a] = GridFunction::signed_freq(static_cast<int>(f % N), N);
      f /= N;
      ok &= xi[a] != 0 && std::abs(xi[a]) <= B && (!analytic || xi[a] > 0);
    }
    if (ok) F.values()[i] = cplx(g(rng), g(rng));
  }
  return F.to_space();
}

// Keeps frequencies for which keep(xi) holds.
GridFunction filter(const GridFunction& f, const std::function<bool(const std::vector<int>&)>& keep) {
  auto F = f.to_frequency();
  int n = F.n(), N = F.N();
  std::vector<int> xi(n);
  for (std::size_t i = 0; i < F.size(); ++i) {
    std::size_t r = i;
    for (int a = n - 1; a >= 0; --a) {
      xi[a] = GridFunction::signed_freq(static_cast<int>(r % N), N);
      r /= N;
    }
    if (!keep(xi)) F.values()[i] = 0;
  }
  return F.to_space();
}

cplx coefficient(const GridFunction& f, const std::vector<int>& xi) {
  auto F = f.to_frequency();
  return F.values()[F.flat(xi)];
}

}  // namespace

TEST_CASE("signed projections") {
  auto f = mode(2, 16, {2, -3});
  CHECK((project_sigma(f, SignPattern{{1, -1}}) - f).norm(2) < 1e-15);
  CHECK(project_sigma(f, SignPattern{{1, 1}}).norm(2) < 1e-15);
  CHECK_THROWS(project_sigma(mode(2, 16, {0, 3}), SignPattern{{1, 1}}));

  std::mt19937_64 rng(1);
  auto r = random_symbol(3, 16, 7, rng);
  GridFunction sum(3, 16);
  for (const auto& s : SignPattern::all(3)) sum = sum + project_sigma(r, s);
  CHECK((sum - r).norm(2) <= 1e-12 * r.norm(2));
  CHECK(SignPattern{{1, -1, -1}}.sgn() == 1);
}

TEST_CASE("hankel matrix: single mode and zero symbol") {
  auto b = mode(1, 32, {2});
  auto A = hankel_matrix(b, HankelOptions{4});
  for (std::size_t c = 0; c < A.domain.size(); ++c)
    for (std::size_t r = 0; r < A.codomain.size(); ++r) {
      bool hit = A.domain[c][0] == 1 && A.codomain[r][0] == -1;
      CHECK(std::abs(A.M(r, c) - cplx(hit ? 1.0 : 0.0)) <= 1e-12);
    }
  CHECK(operator_norm(hankel_matrix(GridFunction(2, 32))) == 0.0);
  CHECK(operator_norm(hankel_matrix(mode(2, 32, {3, 2}, std::polar(1.0, 0.7)))) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS(hankel_matrix(mode(1, 32, {9})));
}

TEST_CASE("hankel matrix matches products computed on the grid") {
  std::mt19937_64 rng(2);
  for (int n : {1, 2}) {
    int N = 32;
    auto b = random_symbol(n, N, 4, rng);
    auto A = hankel_matrix(b);
    for (std::size_t c = 0; c < A.domain.size(); ++c) {
      auto phi = mode(n, N, A.domain[c]);
      auto out = filter(multiply(b.conj(), phi), [](const std::vector<int>& xi) {
        for (int x : xi)
          if (x >= 0) return false;
        return true;
      });
      double captured = 0;
      for (std::size_t r = 0; r < A.codomain.size(); ++r) {
        cplx e = coefficient(out, A.codomain[r]);
        CHECK(std::abs(A.M(r, c) - e) <= 1e-12);
        captured += std::norm(e);
      }
      // the codomain truncation holds the whole image
      CHECK(std::abs(captured - std::pow(out.norm(2), 2)) <= 1e-12);
    }
  }
}

TEST_CASE("hankel matrix depends only on the all-plus part") {
  std::mt19937_64 rng(3);
  auto b = random_symbol(2, 64, 5, rng, true);
  auto noise = filter(random_symbol(2, 64, 5, rng), [](const std::vector<int>& xi) { return xi[0] < 0 || xi[1] < 0; });
  auto A = hankel_matrix(b), B = hankel_matrix(b + noise);
  CHECK(A.M.rows() == B.M.rows());
  CHECK((A.M - B.M).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("hankel norm is invariant under swapping coordinates") {
  std::mt19937_64 rng(4);
  auto b = random_symbol(2, 32, 4, rng, true);
  GridFunction s(2, 32);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) s.values()[i * 32 + j] = b.values()[j * 32 + i];
  CHECK(operator_norm(hankel_matrix(b)) == doctest::Approx(operator_norm(hankel_matrix(s))).epsilon(1e-12));
}

TEST_CASE("operator norm") {
  CHECK(operator_norm(Eigen::MatrixXcd::Identity(8, 8)) == doctest::Approx(1.0));
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  CHECK(operator_norm(d) == doctest::Approx(3.0));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd A(50, 50);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = cplx(g(rng), g(rng));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A.adjoint() * A);
  CHECK(std::abs(operator_norm(A) - std::sqrt(es.eigenvalues().maxCoeff())) <= 1e-8 * operator_norm(A));

  // tall matrix takes the power iteration path
  Eigen::MatrixXcd T(5000, 3);
  for (Eigen::Index i = 0; i < T.size(); ++i) T.data()[i] = cplx(g(rng), g(rng));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> et(T.adjoint() * T);
  CHECK(std::abs(operator_norm(T) - std::sqrt(et.eigenvalues().maxCoeff())) <= 1e-6 * std::sqrt(et.eigenvalues().maxCoeff()));
}

TEST_CASE("commutator: nested form against grid operators") {
  std::mt19937_64 rng(6);
  int n = 2, N = 32, K = 3;
  auto b = random_symbol(n, N, 3, rng);
  auto C = commutator_matrix(b, CommutatorMethod::kNested, K);
  auto inF = [K](const std::vector<int>& xi) {
    for (int x : xi)
      if (x == 0 || std::abs(x) > K) return false;
    return true;
  };
  std::function<GridFunction(const GridFunction&, int)> apply = [&](const GridFunction& x, int level) {
    if (level == 0) return filter(multiply(b, filter(x, inF)), inF);
    auto H = [&](const GridFunction& y) {
      auto minus = filter(y, [level](const std::vector<int>& xi) { return xi[level - 1] < 0; });
      auto plus = filter(y, [level](const std::vector<int>& xi) { return xi[level - 1] > 0; });
      return minus - plus;
    };
    return apply(H(x), level - 1) - H(apply(x, level - 1));
  };
  for (std::size_t c = 0; c < C.domain.size(); ++c) {
    auto col = apply(mode(n, N, C.domain[c]), n);
    for (std::size_t r = 0; r < C.codomain.size(); ++r) CHECK(std::abs(C.M(r, c) - coefficient(col, C.codomain[r])) <= 1e-12);
  }
}

TEST_CASE("commutator: nested equals (-1)^(n+1) times the projection sum") {
  std::mt19937_64 rng(7);
  for (auto [n, N] : {std::pair{1, 32}, std::pair{2, 32}, std::pair{3, 16}}) {
    for (int trial = 0; trial < 3; ++trial) {
      auto b = random_symbol(n, N, 3, rng);
      auto A = commutator_matrix(b, CommutatorMethod::kNested);
      auto B = commutator_matrix(b, CommutatorMethod::kProjectionSum);
      double sign = n % 2 == 1 ? 1.0 : -1.0;
      CHECK((A.M - sign * B.M).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(A.M.cwiseAbs().maxCoeff() > 1e-3);
    }
  }
  // constants vanish after the admissibility projection
  GridFunction one(2, 32);
  for (auto& v : one.values()) v = 2.5;
  CHECK(commutator_matrix(one, CommutatorMethod::kNested).M.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duality pairing") {
  auto b = mode(1, 32, {2});
  CHECK(std::abs(duality_pair(b, mode(1, 32, {1}), mode(1, 32, {1})) - 1.0) < 1e-12);
  CHECK(std::abs(duality_pair(b, GridFunction(1, 32), mode(1, 32, {1}))) == 0.0);
  CHECK_THROWS(duality_pair(b, mode(1, 32, {-1}), mode(1, 32, {1})));

  std::mt19937_64 rng(8);
  for (int n : {1, 2}) {
    auto bb = random_symbol(n, 64, 6, rng);
    auto f = random_symbol(n, 64, 6, rng, true);
    auto g = random_symbol(n, 64, 6, rng, true);
    auto lhs = duality_pair(bb, f, g);
    auto hb = filter(multiply(bb.conj(), f), [](const std::vector<int>& xi) {
      for (int x : xi)
        if (x >= 0) return false;
      return true;
    });
    CHECK(std::abs(lhs - inner(hb, g.conj())) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    // and through the matrix: <H_b f, conj(g)>
    auto A = hankel_matrix(bb, HankelOptions{6});
    Eigen::VectorXcd fv(A.M.cols()), gv(A.M.rows());
    for (Eigen::Index c = 0; c < fv.size(); ++c) fv(c) = coefficient(f, A.domain[c]);
    for (Eigen::Index r = 0; r < gv.size(); ++r) {
      auto xi = A.codomain[r];
      for (int& x : xi) x = -x;
      gv(r) = coefficient(g, xi);  // conj(g) has coefficient conj(ghat(-zeta)) at zeta
    }
    cplx via = (A.M * fv).cwiseProduct(gv).sum();
    CHECK(std::abs(lhs - via) <= 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("inner-outer factorization") {
  // no zeros in the disk: 3 + z has its root at -3
  GridFunction h = mode(1, 64, {0}, 3.0) + mode(1, 64, {1});
  auto io = inner_outer_factor(h);
  for (auto v : io.inner.values()) CHECK(std::abs(v - cplx(1)) < 1e-12);
  CHECK((io.outer - h).norm(2) < 1e-12);

  auto z = inner_outer_factor(mode(1, 64, {1}));
  CHECK((z.inner - mode(1, 64, {1})).norm(2) < 1e-12);
  for (auto v : z.outer.values()) CHECK(std::abs(v - cplx(1)) < 1e-12);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    GridFunction F(1, 64, GridFunction::Rep::kFrequency);
    for (int k = 1; k <= 20; ++k) F.values()[k] = cplx(g(rng), g(rng));
    auto hh = F.to_space();
    auto r = inner_outer_factor(hh);
    CHECK((multiply(r.inner, r.outer) - hh).norm(2) <= 1e-8 * hh.norm(2));
    for (auto v : r.inner.values()) CHECK(std::abs(std::abs(v) - 1) <= 1e-8);
    CHECK(std::abs(r.outer.norm(2) - hh.norm(2)) <= 1e-8 * hh.norm(2));
    // zeros of the outer factor: roots outside the disk and reflections of those inside
    for (auto root : r.roots) CHECK(std::abs(root) > 0);
    auto [a, b] = balanced_factor(hh);
    CHECK((multiply(a, b) - hh).norm(2) <= 1e-8 * hh.norm(2));
    CHECK(a.norm(2) * b.norm(2) == doctest::Approx(hh.norm(1)).epsilon(1e-8));
  }
  CHECK_THROWS(inner_outer_factor(GridFunction(1, 64)));
  CHECK_THROWS(inner_outer_factor(mode(1, 64, {-2})));
}

TEST_CASE("weak factorization witness") {
  auto fam = build_family(64, 2);
  auto R = plain_rect(std::vector<int>{1, 2}, std::vector<std::int64_t>{1, 2});
  auto single = weak_factorization_witness(WaveletCoeffs{2, 64, {{R, 1.0}}}, fam);
  CHECK(single.pairs.size() == 1);
  CHECK(single.residual <= 1e-6);
  CHECK(single.tensor_bound <= 1.0 + 1e-9);

  std::mt19937_64 rng(10);
  std::normal_distribution<double> g;
  GridFunction b = project_admissible(random_symbol(2, 64, 31, rng));
  auto c = analyze(b, fam);
  WaveletCoeffs u{2, 64, {}};
  for (int j : {1, 3}) {
    auto S = plain_rect(std::vector<int>{2, j}, std::vector<std::int64_t>{1, 1});
    u.map[S] = c.at(S);
  }
  auto w = weak_factorization_witness(u, fam, b);
  CHECK(w.frozen_coord == 0);
  CHECK(w.residual <= 1e-6);
  CHECK(w.pairing_error <= 1e-10);

  WaveletCoeffs bad{2, 64, {{plain_rect(std::vector<int>{1, 1}, std::vector<std::int64_t>{0, 0}), 1.0},
                            {plain_rect(std::vector<int>{2, 2}, std::vector<std::int64_t>{1, 1}), 1.0}}};
  CHECK_THROWS(weak_factorization_witness(bad, fam));

  auto fam3 = build_family(16, 3);
  WaveletCoeffs t{3, 16, {}};
  for (int j1 = 0; j1 < 2; ++j1)
    for (int j2 = 0; j2 < 3; ++j2)
      t.map[plain_rect(std::vector<int>{1, j1, j2}, std::vector<std::int64_t>{1, 0, j2 > 0 ? 1 : 0})] = cplx(g(rng), g(rng));
  auto w3 = weak_factorization_witness(t, fam3);
  CHECK(w3.residual <= 1e-6);
  CHECK(w3.pairs.size() == 2);
}
