#include "hankelab/grid_function.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <stdexcept>

namespace hankelab {

namespace {

std::size_t total_size(int n, int N) {
  if (n < 1 || N < 1) throw std::invalid_argument("grid: n and N must be positive");
  std::size_t s = 1;
  for (int i = 0; i < n; ++i) s *= static_cast<std::size_t>(N);
  return s;
}

// Planning is not thread safe in FFTW; execution with new-array functions is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

std::vector<cplx> fft(const std::vector<cplx>& in, int n, int N, int sign) {
  std::vector<cplx> out(in.size());
  std::vector<int> dims(n, N);
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mutex());
    plan = fftw_plan_dft(n, dims.data(), src, dst, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

void check_same(const GridFunction& a, const GridFunction& b) {
  if (a.n() != b.n() || a.N() != b.N()) throw std::invalid_argument("grid mismatch");
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("grid function: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f32(std::ostream& os, float f) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(f);
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

float get_f32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("grid function: truncated data");
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return std::bit_cast<float>(u);
}

}  // namespace

GridFunction::GridFunction(int n, int N, Rep rep) : n_(n), N_(N), rep_(rep), values_(total_size(n, N)) {}

GridFunction::GridFunction(int n, int N, std::vector<cplx> values, Rep rep)
    : n_(n), N_(N), rep_(rep), values_(std::move(values)) {
  if (values_.size() != total_size(n, N)) throw std::invalid_argument("grid function: size mismatch");
}

GridFunction GridFunction::to_frequency() const {
  if (rep_ == Rep::kFrequency) return *this;
  auto out = fft(values_, n_, N_, FFTW_FORWARD);
  double scale = 1.0 / static_cast<double>(values_.size());
  for (auto& v : out) v *= scale;
  return GridFunction(n_, N_, std::move(out), Rep::kFrequency);
}

GridFunction GridFunction::to_space() const {
  if (rep_ == Rep::kSpace) return *this;
  return GridFunction(n_, N_, fft(values_, n_, N_, FFTW_BACKWARD), Rep::kSpace);
}

std::size_t GridFunction::flat(std::span<const int> idx) const {
  std::size_t f = 0;
  for (int i = 0; i < n_; ++i) f = f * N_ + static_cast<std::size_t>(freq_index(idx[i], N_));
  return f;
}

double GridFunction::norm(double p) const {
  const auto& s = rep_ == Rep::kSpace ? values_ : to_space().values_;
  double acc = 0;
  if (std::isinf(p)) {
    for (const auto& v : s) acc = std::max(acc, std::abs(v));
    return acc;
  }
  for (const auto& v : s) acc += std::pow(std::abs(v), p);
  return std::pow(acc / static_cast<double>(s.size()), 1.0 / p);
}

cplx inner(const GridFunction& f, const GridFunction& g) {
  check_same(f, g);
  // Both representations give the same value: Plancherel in measure units.
  if (f.rep() == GridFunction::Rep::kFrequency && g.rep() == GridFunction::Rep::kFrequency) {
    cplx acc = 0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += f.values()[i] * std::conj(g.values()[i]);
    return acc;
  }
  auto a = f.to_space(), b = g.to_space();
  cplx acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.values()[i] * std::conj(b.values()[i]);
  return acc / static_cast<double>(a.size());
}

GridFunction GridFunction::conj() const {
  auto s = to_space();
  for (auto& v : s.values_) v = std::conj(v);
  return s;
}

GridFunction GridFunction::abs() const {
  auto s = to_space();
  for (auto& v : s.values_) v = std::abs(v);
  return s;
}

GridFunction GridFunction::operator+(const GridFunction& o) const {
  check_same(*this, o);
  GridFunction r = rep_ == o.rep_ ? *this : to_space();
  const auto& ov = rep_ == o.rep_ ? o.values_ : o.to_space().values_;
  for (std::size_t i = 0; i < r.values_.size(); ++i) r.values_[i] += ov[i];
  return r;
}

GridFunction GridFunction::operator-(const GridFunction& o) const { return *this + o * cplx(-1.0); }

GridFunction GridFunction::operator*(cplx s) const {
  GridFunction r = *this;
  for (auto& v : r.values_) v *= s;
  return r;
}

GridFunction multiply(const GridFunction& a, const GridFunction& b) {
  check_same(a, b);
  auto r = a.to_space();
  auto bs = b.to_space();
  for (std::size_t i = 0; i < r.size(); ++i) r.values()[i] *= bs.values()[i];
  return r;
}

void GridFunction::write_binary(std::ostream& os) const {
  put_u64(os, static_cast<std::uint64_t>(n_));
  put_u64(os, static_cast<std::uint64_t>(N_));
  for (const auto& v : to_space().values_) {
    put_f32(os, static_cast<float>(v.real()));
    put_f32(os, static_cast<float>(v.imag()));
  }
}

GridFunction GridFunction::read_binary(std::istream& is) {
  auto n = get_u64(is), N = get_u64(is);
  if (n < 1 || n > 8 || N < 1 || N > (1u << 20)) throw std::runtime_error("grid function: bad header");
  GridFunction g(static_cast<int>(n), static_cast<int>(N));
  for (auto& v : g.values_) {
    float re = get_f32(is);
    float im = get_f32(is);
    v = cplx(re, im);
  }
  return g;
}

}  // namespace hankelab
