#pragma once

// Dense vectors/matrices, elementwise nonlinearities and the counter-based
// random generator shared by every other module. All arithmetic is double.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpn {

using Vector = std::vector<double>;

/// Thrown whenever operand shapes disagree. The message names both shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void set_row(std::size_t r, std::span<const double> v);
  void fill(double v);

  std::string shape() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_of(std::span<const double> v);

// Branch-on-sign form; never evaluates exp of a positive argument.
double sigmoid(double x);
Vector sigmoid(std::span<const double> x);
Vector tanh_vec(std::span<const double> x);

/// w·x + b
Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b);
Vector hadamard(std::span<const double> a, std::span<const double> b);

// Accumulating kernels used by the backward passes.
void add_outer(Matrix& acc, std::span<const double> a, std::span<const double> b);  // acc += a bᵀ
void add_transposed_product(std::span<double> acc, const Matrix& w, std::span<const double> v);  // acc += wᵀ v
void add_to(std::span<double> acc, std::span<const double> v);

Vector concat(std::initializer_list<std::span<const double>> parts);

bool all_finite(std::span<const double> v);

/// Counter-based generator: the k-th draw (k = 1, 2, ...) is the SplitMix64
/// finalizer applied to seed + k·0x9E3779B97F4A7C15. The stream is therefore
/// a pure function of (seed, counter) on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double next_double();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (one draw per pair of uniforms).
  double normal();
  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream; does not advance this generator.
  Rng fork(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// n uniform draws on [lo, hi). Throws std::invalid_argument unless lo < hi.
Vector rng_uniform(Rng& rng, double lo, double hi, std::size_t n);

/// Fisher-Yates permutation of 0..n-1 driven by `rng`.
std::vector<std::size_t> permutation(Rng& rng, std::size_t n);

}  // namespace mpn
