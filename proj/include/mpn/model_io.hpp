#pragma once

// Versioned text format for trained models and their decision classifiers.
//
//   mpn-model 1
//   dims <L> <d_z> <d_c> <tau> <T>
//   tensor <name> <rows> <cols>
//   <rows*cols values, shortest round-trip decimal, space separated>
//   ...                                   (17 tensors, fixed order below)
//   classifier <role> <kind> <n_rules>
//   rule <fallback> <fallback_threshold> <weight> <bias> <negative_mean> <positive_mean>
//   ...
//   end
//
// Tensor order: encoder.{w_forget,w_input,w_cell,w_output,b_forget,b_input,
// b_cell,b_output}, decoder.{same}, b_g. Biases are stored as 1×L. Doubles
// are written with std::to_chars, so save → load is bit-exact.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpn/decide.hpp"
#include "mpn/model.hpp"

namespace mpn {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedClassifier {
  std::string role;  // e.g. "segment.svm", "step.svm"
  LabelClassifier classifier;
  bool operator==(const NamedClassifier&) const = default;
};

struct ModelFile {
  MpnModel model;
  std::vector<NamedClassifier> classifiers;

  const LabelClassifier* find(const std::string& role) const;
  bool operator==(const ModelFile&) const = default;
};

inline constexpr int kModelFormatVersion = 1;

std::string format_double(double v);
double parse_double(const std::string& token);

void write_model(std::ostream& out, const ModelFile& file);
ModelFile read_model(std::istream& in);

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace mpn
