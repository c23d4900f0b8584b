#include "mpn/tensor.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mpn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Matrix::set_row(std::size_t r, std::span<const double> v) {
  if (v.size() != cols_) {
    throw DimensionError("set_row: row of " + shape() + " given " + shape_of(v));
  }
  std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

std::string shape_of(std::span<const double> v) { return "[" + std::to_string(v.size()) + "]"; }

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(std::span<const double> x) {
  Vector out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = sigmoid(x[k]);
  return out;
}

Vector tanh_vec(std::span<const double> x) {
  Vector out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = std::tanh(x[k]);
  return out;
}

Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b) {
  if (w.cols() != x.size() || w.rows() != b.size()) {
    throw DimensionError("affine: W " + w.shape() + ", x " + shape_of(x) + ", b " + shape_of(b));
  }
  Vector out(b.begin(), b.end());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto wr = w.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) acc += wr[c] * x[c];
    out[r] += acc;
  }
  return out;
}

Vector hadamard(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("hadamard: " + shape_of(a) + " vs " + shape_of(b));
  }
  Vector out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

void add_outer(Matrix& acc, std::span<const double> a, std::span<const double> b) {
  if (acc.rows() != a.size() || acc.cols() != b.size()) {
    throw DimensionError("add_outer: acc " + acc.shape() + ", a " + shape_of(a) + ", b " + shape_of(b));
  }
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r] == 0.0) continue;
    auto row = acc.row(r);
    for (std::size_t c = 0; c < b.size(); ++c) row[c] += a[r] * b[c];
  }
}

void add_transposed_product(std::span<double> acc, const Matrix& w, std::span<const double> v) {
  if (w.rows() != v.size() || w.cols() != acc.size()) {
    throw DimensionError("add_transposed_product: W " + w.shape() + ", v " + shape_of(v) +
                         ", acc " + shape_of(acc));
  }
  for (std::size_t r = 0; r < w.rows(); ++r) {
    if (v[r] == 0.0) continue;
    const auto wr = w.row(r);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += wr[c] * v[r];
  }
}

void add_to(std::span<double> acc, std::span<const double> v) {
  if (acc.size() != v.size()) {
    throw DimensionError("add_to: " + shape_of(acc) + " vs " + shape_of(v));
  }
  for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k];
}

Vector concat(std::initializer_list<std::span<const double>> parts) {
  std::size_t n = 0;
  for (auto p : parts) n += p.size();
  Vector out;
  out.reserve(n);
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return splitmix64(seed_ + counter_ * kGamma);
}

double Rng::next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  const double v = lo + (hi - lo) * next_double();
  return v < hi ? v : std::nextafter(hi, lo);
}

double Rng::normal() {
  const double u1 = 1.0 - next_double();  // (0, 1]
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x < limit) return x % n;
  }
}

Rng Rng::fork(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

Vector rng_uniform(Rng& rng, double lo, double hi, std::size_t n) {
  if (!(lo < hi)) {
    throw std::invalid_argument("rng_uniform: invalid range [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + ")");
  }
  Vector out(n);
  for (auto& v : out) v = rng.uniform(lo, hi);
  return out;
}

std::vector<std::size_t> permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t k = 0; k < n; ++k) idx[k] = k;
  for (std::size_t k = n; k > 1; --k) {
    const auto j = static_cast<std::size_t>(rng.below(k));
    std::swap(idx[k - 1], idx[j]);
  }
  return idx;
}

}  // namespace mpn
