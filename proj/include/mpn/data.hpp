#pragma once

// Dataset schema, validation, splitting and the mean-padding utility.
//
// On-disk format: JSON Lines. Line 1 is the header record
//
//   {"format":"mpn-dataset","version":1,"tau":30,"T":40,"L":6,"d_z":8,
//    "d_c":4,"label_names":["fault_1",...],"source":"synthetic","count":N}
//
// followed by one record per sample
//
//   {"z":[[...d_z...], ...tau rows],"c":[[...d_c...], ...T rows],
//    "y":[...L 0/1...],"o":[[...L 0/1...], ...T-tau rows]}
//
// Numbers are written with 17 significant digits, so a save/load cycle is
// bit-exact. Every sample is checked on load: shapes, finiteness, binary
// labels, and y[l] == 1{sum_t o_t[l] > 0}.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpn/model.hpp"
#include "mpn/sample.hpp"

namespace mpn {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataSource { synthetic, phm_adapter, har_adapter };

std::string to_string(DataSource s);
DataSource data_source_from_string(const std::string& s);

struct DatasetMeta {
  std::size_t history = 0;  // τ
  std::size_t total = 0;    // T
  std::size_t labels = 0;   // L
  std::size_t observed = 0; // d_z
  std::size_t context = 0;  // d_c
  std::vector<std::string> label_names;
  DataSource source = DataSource::synthetic;

  std::size_t horizon() const { return total - history; }
  MpnDims model_dims() const { return {labels, observed, context, history, total}; }
  void validate() const;
  bool operator==(const DatasetMeta&) const = default;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Sample> samples;
};

/// Throws DataError naming `index` and the violated rule.
void validate_sample(const DatasetMeta& meta, const Sample& s, std::size_t index);

/// ỹ derived from õ by the "any step" rule.
Vector segment_from_stepwise(const Matrix& o_true);

void write_dataset(std::ostream& out, const Dataset& ds);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

struct Splits {
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;
};

/// Seeded shuffle, then contiguous slices train | validation | test.
Splits split(const std::vector<Sample>& samples, const SplitSizes& sizes, std::uint64_t seed);

/// Extends a τ×d rows matrix to T rows filled with per-column means of the
/// original rows.
Matrix pad_mean(const Matrix& z, std::size_t total);

/// Number of samples with ỹ[l] = 1, per label.
std::vector<std::size_t> class_stats(const std::vector<Sample>& samples);

/// N×L matrix of segment labels.
Matrix segment_matrix(const std::vector<Sample>& samples);

}  // namespace mpn
