#include "hankelab/wavelet.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hankelab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Applies the rows x cols matrix M along `axis` of a row-major tensor whose
// extent on that axis is cols; the result has extent rows there.
std::vector<cplx> apply_axis(const std::vector<cplx>& in, std::vector<int>& shape, int axis,
                             const std::vector<cplx>& M, int rows, int cols) {
  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  std::vector<cplx> out(outer * rows * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (int c = 0; c < cols; ++c) {
      const cplx* src = &in[(o * cols + c) * inner];
      for (int r = 0; r < rows; ++r) {
        cplx m = M[static_cast<std::size_t>(r) * cols + c];
        if (m == cplx(0)) continue;
        cplx* dst = &out[(o * rows + r) * inner];
        for (std::size_t i = 0; i < inner; ++i) dst[i] += m * src[i];
      }
    }
  shape[axis] = rows;
  return out;
}

std::pair<int, std::int64_t> level_of(int k) {
  int j = std::bit_width(static_cast<unsigned>(k + 1)) - 1;
  return {j, k + 1 - (std::int64_t{1} << j)};
}

int log2_exact(int N) {
  if (N < 1 || (N & (N - 1)) != 0) throw std::invalid_argument("wavelet family: N must be a power of two");
  return std::countr_zero(static_cast<unsigned>(N));
}

// Level and offset of a plain dyadic side with 2^level <= N.
std::pair<int, std::int64_t> plain_side(const GridInterval& s, int N) {
  if (!s.grid.is_plain()) throw std::invalid_argument("wavelet: rectangle side not in the plain dyadic grid");
  std::int64_t level = -s.k;
  if (level < 0 || (std::int64_t{1} << level) > N || s.j < 0 || s.j >= (std::int64_t{1} << level))
    throw std::invalid_argument("wavelet: rectangle side outside the unit torus grid");
  return {static_cast<int>(level), s.j};
}

}  // namespace

WaveletFamily::WaveletFamily(int N, int n) : N_(N), n_(n) {
  int L = log2_exact(N);
  levels_ = L - 1;
  if (levels_ < 2) throw std::invalid_argument("wavelet family: N too small to host two scales");
  if (n < 1) throw std::invalid_argument("wavelet family: n must be positive");
  int K = size1d();
  freq_.assign(static_cast<std::size_t>(K) * N, 0.0);
  space_.assign(static_cast<std::size_t>(K) * N, 0.0);
  for (int k = 0; k < K; ++k) {
    auto [j, m] = level_of(k);
    double amp = std::pow(2.0, -0.5 * j);
    double shift = (static_cast<double>(m) + 0.5) / static_cast<double>(1 << j);
    for (int xi = 1 << j; xi < (2 << j); ++xi)
      freq_[static_cast<std::size_t>(k) * N + xi] = std::polar(amp, -kTwoPi * shift * xi);
    const auto row = freq_.begin() + static_cast<std::ptrdiff_t>(k) * N;
    const GridFunction w(1, N, std::vector<cplx>(row, row + N), GridFunction::Rep::kFrequency);
    const auto sp = w.to_space().values();
    std::copy(sp.begin(), sp.end(), space_.begin() + static_cast<std::ptrdiff_t>(k) * N);
  }
}

WaveletFamily build_family(int N, int n) { return WaveletFamily(N, n); }

std::pair<int, std::int64_t> WaveletFamily::side_index(const GridInterval& s) const {
  auto [level, m] = plain_side(s, N_);
  if (level >= levels_) throw std::invalid_argument("wavelet: side finer than the family's finest scale");
  return {level, m};
}

bool WaveletFamily::admissible(const DyadicRectangle& R) const {
  if (R.n() != n_) return false;
  try {
    for (const auto& s : R.sides) side_index(s);
  } catch (const std::invalid_argument&) {
    return false;
  }
  return true;
}

GridInterval WaveletFamily::side(int j, std::int64_t m) const { return GridInterval{GridId::plain(), -j, m}; }

GridFunction WaveletFamily::wavelet(const DyadicRectangle& R) const {
  if (R.n() != n_) throw std::invalid_argument("wavelet: dimension mismatch");
  std::vector<int> rows(n_);
  for (int a = 0; a < n_; ++a) {
    auto [j, m] = side_index(R.sides[a]);
    rows[a] = index1d(j, m);
  }
  GridFunction g(n_, N_);
  std::vector<int> t(n_, 0);
  for (auto& v : g.values()) {
    cplx p = 1;
    for (int a = 0; a < n_; ++a) p *= space_[static_cast<std::size_t>(rows[a]) * N_ + t[a]];
    v = p;
    for (int a = n_ - 1; a >= 0; --a) {
      if (++t[a] < N_) break;
      t[a] = 0;
    }
  }
  return g;
}

std::vector<DyadicRectangle> WaveletFamily::rectangles() const {
  int K = size1d();
  std::vector<DyadicRectangle> out;
  std::vector<int> idx(n_, 0);
  while (true) {
    DyadicRectangle R;
    for (int a = 0; a < n_; ++a) {
      auto [j, m] = level_of(idx[a]);
      R.sides.push_back(side(j, m));
    }
    out.push_back(std::move(R));
    int a = n_ - 1;
    for (; a >= 0; --a) {
      if (++idx[a] < K) break;
      idx[a] = 0;
    }
    if (a < 0) break;
  }
  return out;
}

cplx WaveletCoeffs::at(const DyadicRectangle& R) const {
  auto it = map.find(R);
  return it == map.end() ? cplx(0) : it->second;
}

WaveletCoeffs WaveletCoeffs::pruned(double tol) const {
  WaveletCoeffs r{n, N, {}};
  for (const auto& [R, v] : map)
    if (std::abs(v) > tol) r.map.emplace(R, v);
  return r;
}

double WaveletCoeffs::l2_squared() const {
  double s = 0;
  for (const auto& [R, v] : map) s += std::norm(v);
  return s;
}

WaveletCoeffs WaveletCoeffs::operator+(const WaveletCoeffs& o) const {
  if (n != o.n || N != o.N) throw std::invalid_argument("coefficients: grid mismatch");
  WaveletCoeffs r = *this;
  for (const auto& [R, v] : o.map) r.map[R] += v;
  return r;
}

WaveletCoeffs analyze(const GridFunction& f, const WaveletFamily& fam) {
  if (f.n() != fam.n() || f.N() != fam.N()) throw std::invalid_argument("analyze: grid mismatch");
  int N = fam.N(), K = fam.size1d(), n = fam.n();
  std::vector<cplx> A(static_cast<std::size_t>(K) * N);
  for (std::size_t i = 0; i < A.size(); ++i) A[i] = std::conj(fam.freq_table()[i]);
  auto data = f.to_frequency().values();
  std::vector<int> shape(n, N);
  for (int a = 0; a < n; ++a) data = apply_axis(data, shape, a, A, K, N);
  WaveletCoeffs c{n, N, {}};
  auto rects = fam.rectangles();
  for (std::size_t i = 0; i < rects.size(); ++i) c.map.emplace_hint(c.map.end(), std::move(rects[i]), data[i]);
  return c;
}

GridFunction synthesize(const WaveletCoeffs& c, const WaveletFamily& fam) {
  if (c.n != fam.n() || c.N != fam.N()) throw std::invalid_argument("synthesize: grid mismatch");
  int N = fam.N(), K = fam.size1d(), n = fam.n();
  std::size_t total = 1;
  for (int a = 0; a < n; ++a) total *= K;
  std::vector<cplx> data(total);
  for (const auto& [R, v] : c.map) {
    std::size_t flat = 0;
    for (int a = 0; a < n; ++a) {
      auto [j, m] = fam.side_index(R.sides.at(a));
      flat = flat * K + WaveletFamily::index1d(j, m);
    }
    data[flat] += v;
  }
  std::vector<cplx> S(static_cast<std::size_t>(N) * K);
  for (int k = 0; k < K; ++k)
    for (int xi = 0; xi < N; ++xi) S[static_cast<std::size_t>(xi) * K + k] = fam.freq_table()[static_cast<std::size_t>(k) * N + xi];
  std::vector<int> shape(n, K);
  for (int a = 0; a < n; ++a) data = apply_axis(data, shape, a, S, N, K);
  return GridFunction(n, N, std::move(data), GridFunction::Rep::kFrequency).to_space();
}

GridFunction square_function(const WaveletCoeffs& c) {
  int n = c.n, N = c.N;
  std::vector<double> acc;
  {
    GridFunction tmp(n, N);
    acc.assign(tmp.size(), 0.0);
  }
  std::vector<std::int64_t> lo(n), len(n);
  for (const auto& [R, v] : c.map) {
    if (R.n() != n) throw std::invalid_argument("square_function: dimension mismatch");
    double vol = 1;
    for (int a = 0; a < n; ++a) {
      auto [level, m] = plain_side(R.sides[a], N);
      len[a] = N >> level;
      lo[a] = m * len[a];
      vol /= static_cast<double>(std::int64_t{1} << level);
    }
    double w = std::norm(v) / vol;
    std::vector<std::int64_t> t(n, 0);
    while (true) {
      std::size_t flat = 0;
      for (int a = 0; a < n; ++a) flat = flat * N + static_cast<std::size_t>(lo[a] + t[a]);
      acc[flat] += w;
      int a = n - 1;
      for (; a >= 0; --a) {
        if (++t[a] < len[a]) break;
        t[a] = 0;
      }
      if (a < 0) break;
    }
  }
  std::vector<cplx> vals(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) vals[i] = std::sqrt(acc[i]);
  return GridFunction(n, N, std::move(vals), GridFunction::Rep::kSpace);
}

GridFunction project_admissible(const GridFunction& f) {
  auto F = f.to_frequency();
  int n = F.n(), N = F.N();
  std::vector<int> idx(n, 0);
  for (auto& v : F.values()) {
    for (int a = 0; a < n; ++a)
      if (idx[a] < 1 || idx[a] > N / 2 - 1) {
        v = 0;
        break;
      }
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < N) break;
      idx[a] = 0;
    }
  }
  return F.to_space();
}

std::string coeffs_to_json(const WaveletCoeffs& c) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [R, v] : c.map) arr.push_back({{"rect", serialize_rect(R)}, {"re", v.real()}, {"im", v.imag()}});
  nlohmann::json doc = {{"schema", "v1"}, {"n", c.n}, {"N", c.N}, {"coefficients", arr}};
  return doc.dump(1);
}

WaveletCoeffs coeffs_from_json(const std::string& text) {
  auto doc = nlohmann::json::parse(text);
  WaveletCoeffs c;
  const nlohmann::json* arr = &doc;
  if (doc.is_object()) {
    c.n = doc.at("n").get<int>();
    c.N = doc.at("N").get<int>();
    arr = &doc.at("coefficients");
  }
  for (const auto& e : *arr) {
    auto R = parse_rect(e.at("rect").get<std::string>());
    if (c.n == 0) c.n = R.n();
    if (R.n() != c.n) throw std::invalid_argument("coefficients: mixed dimensions");
    c.map[R] += cplx(e.at("re").get<double>(), e.at("im").get<double>());
  }
  return c;
}

double localization_constant(const WaveletFamily& fam) {
  int N = fam.N();
  double C = 0;
  for (int k = 0; k < fam.size1d(); ++k) {
    auto [j, m] = level_of(k);
    std::int64_t len = N >> j, lo = m * len, hi = lo + len;  // grid units
    for (int t = 0; t < N; ++t) {
      std::int64_t d = 0;
      if (t < lo || t >= hi) {
        std::int64_t right = ((t - hi) % N + N) % N;
        std::int64_t left = ((lo - t) % N + N) % N;
        d = std::min(right, left);
      }
      double dist = static_cast<double>(d) / N, I = static_cast<double>(len) / N;
      double w = std::abs(fam.space_table()[static_cast<std::size_t>(k) * N + t]);
      C = std::max(C, w * std::sqrt(I) * std::pow(1.0 + dist / I, 2));
    }
  }
  return C;
}

}  // namespace hankelab
