#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>

#include "mpn/model.hpp"
#include "mpn/sample.hpp"
#include "mpn/tensor.hpp"

namespace testing {

inline mpn::Matrix random_matrix(mpn::Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                                 double hi = 1.0) {
  mpn::Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

inline mpn::Matrix random_binary(mpn::Rng& rng, std::size_t rows, std::size_t cols, double p = 0.5) {
  mpn::Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.next_double() < p ? 1.0 : 0.0;
  return m;
}

// A model with every parameter (biases and b_g included) drawn uniformly.
inline mpn::MpnModel random_model(mpn::Rng& rng, const mpn::MpnDims& dims, double scale = 0.5) {
  mpn::MpnModel m = mpn::MpnModel::zeros(dims);
  mpn::for_each_tensor(m, [&](std::span<double> t, bool) {
    for (auto& v : t) v = rng.uniform(-scale, scale);
  });
  return m;
}

// A sample with consistent segment and stepwise labels.
inline mpn::Sample random_sample(mpn::Rng& rng, const mpn::MpnDims& d, double p = 0.3) {
  mpn::Sample s;
  s.z = random_matrix(rng, d.history, d.observed);
  s.c = random_matrix(rng, d.total, d.context);
  s.o_true = random_binary(rng, d.horizon(), d.labels, p);
  s.y_true.assign(d.labels, 0.0);
  for (std::size_t t = 0; t < d.horizon(); ++t) {
    for (std::size_t l = 0; l < d.labels; ++l) {
      if (s.o_true(t, l) == 1.0) s.y_true[l] = 1.0;
    }
  }
  return s;
}

// Fresh empty directory below the working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
