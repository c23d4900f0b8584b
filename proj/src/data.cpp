#include "mpn/data.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace mpn {

using json = nlohmann::json;

std::string to_string(DataSource s) {
  switch (s) {
    case DataSource::synthetic: return "synthetic";
    case DataSource::phm_adapter: return "phm_adapter";
    case DataSource::har_adapter: return "har_adapter";
  }
  return "unknown";
}

DataSource data_source_from_string(const std::string& s) {
  if (s == "synthetic") return DataSource::synthetic;
  if (s == "phm_adapter") return DataSource::phm_adapter;
  if (s == "har_adapter") return DataSource::har_adapter;
  throw DataError("unknown dataset source '" + s + "'");
}

void DatasetMeta::validate() const {
  if (labels < 1) throw DataError("dataset header: L must be at least 1");
  if (history >= total) {
    throw DataError("dataset header: tau (" + std::to_string(history) + ") must be less than T (" +
                    std::to_string(total) + ")");
  }
  if (!label_names.empty() && label_names.size() != labels) {
    throw DataError("dataset header: " + std::to_string(label_names.size()) +
                    " label names for L = " + std::to_string(labels));
  }
}

Vector segment_from_stepwise(const Matrix& o_true) {
  Vector y(o_true.cols(), 0.0);
  for (std::size_t s = 0; s < o_true.rows(); ++s) {
    for (std::size_t l = 0; l < o_true.cols(); ++l) {
      if (o_true(s, l) > 0.0) y[l] = 1.0;
    }
  }
  return y;
}

void validate_sample(const DatasetMeta& meta, const Sample& s, std::size_t index) {
  const std::string where = "sample " + std::to_string(index) + ": ";
  auto shape_rule = [&](const Matrix& m, std::size_t r, std::size_t c, const char* name) {
    if (m.rows() != r || m.cols() != c) {
      throw DataError(where + name + " has shape " + m.shape() + ", expected [" + std::to_string(r) +
                      "x" + std::to_string(c) + "]");
    }
  };
  shape_rule(s.z, meta.history, meta.observed, "z");
  shape_rule(s.c, meta.total, meta.context, "c");
  shape_rule(s.o_true, meta.horizon(), meta.labels, "o");
  if (s.y_true.size() != meta.labels) {
    throw DataError(where + "y has length " + std::to_string(s.y_true.size()) + ", expected " +
                    std::to_string(meta.labels));
  }
  if (!all_finite(s.z.values())) throw DataError(where + "z contains a non-finite value");
  if (!all_finite(s.c.values())) throw DataError(where + "c contains a non-finite value");
  auto binary = [](double v) { return v == 0.0 || v == 1.0; };
  for (double v : s.y_true) {
    if (!binary(v)) throw DataError(where + "y entries must be 0 or 1");
  }
  for (double v : s.o_true.values()) {
    if (!binary(v)) throw DataError(where + "o entries must be 0 or 1");
  }
  const Vector derived = segment_from_stepwise(s.o_true);
  for (std::size_t l = 0; l < meta.labels; ++l) {
    if (derived[l] != s.y_true[l]) {
      throw DataError(where + "segment label " + std::to_string(l) + " is " +
                      std::to_string(static_cast<int>(s.y_true[l])) +
                      " but the stepwise labels imply " + std::to_string(static_cast<int>(derived[l])));
    }
  }
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t expected_cols, const std::string& what) {
  if (!j.is_array()) throw DataError(what + " must be an array of rows");
  Matrix m(j.size(), expected_cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != expected_cols) {
      throw DataError(what + " row " + std::to_string(r) + " must have " +
                      std::to_string(expected_cols) + " entries");
    }
    for (std::size_t c = 0; c < expected_cols; ++c) {
      if (!row[c].is_number()) throw DataError(what + " contains a non-numeric entry");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& ds) {
  const auto& m = ds.meta;
  json header = {{"format", "mpn-dataset"}, {"version", 1},       {"tau", m.history},
                 {"T", m.total},            {"L", m.labels},      {"d_z", m.observed},
                 {"d_c", m.context},        {"label_names", m.label_names},
                 {"source", to_string(m.source)}, {"count", ds.samples.size()}};
  out << header.dump() << "\n";
  for (const auto& s : ds.samples) {
    json rec = {{"z", matrix_to_json(s.z)},
                {"c", matrix_to_json(s.c)},
                {"y", s.y_true},
                {"o", matrix_to_json(s.o_true)}};
    out << rec.dump() << "\n";
  }
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset: missing header record");
  Dataset ds;
  std::size_t declared = 0;
  try {
    const json h = json::parse(line);
    if (h.value("format", "") != "mpn-dataset") throw DataError("dataset: not an mpn-dataset file");
    if (h.value("version", 0) != 1) throw DataError("dataset: unsupported version");
    ds.meta.history = h.at("tau").get<std::size_t>();
    ds.meta.total = h.at("T").get<std::size_t>();
    ds.meta.labels = h.at("L").get<std::size_t>();
    ds.meta.observed = h.at("d_z").get<std::size_t>();
    ds.meta.context = h.at("d_c").get<std::size_t>();
    ds.meta.label_names = h.value("label_names", std::vector<std::string>{});
    ds.meta.source = data_source_from_string(h.value("source", "synthetic"));
    declared = h.value("count", std::size_t{0});
  } catch (const json::exception& e) {
    throw DataError(std::string("dataset header: ") + e.what());
  }
  ds.meta.validate();

  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Sample s;
    try {
      const json r = json::parse(line);
      s.z = matrix_from_json(r.at("z"), ds.meta.observed, "z");
      s.c = matrix_from_json(r.at("c"), ds.meta.context, "c");
      s.o_true = matrix_from_json(r.at("o"), ds.meta.labels, "o");
      const auto& y = r.at("y");
      if (!y.is_array()) throw DataError("y must be an array");
      for (const auto& v : y) {
        if (!v.is_number()) throw DataError("y contains a non-numeric entry");
        s.y_true.push_back(v.get<double>());
      }
    } catch (const json::exception& e) {
      throw DataError("sample " + std::to_string(index) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("sample " + std::to_string(index) + ": " + e.what());
    }
    validate_sample(ds.meta, s, index);
    ds.samples.push_back(std::move(s));
    ++index;
  }
  if (declared != 0 && declared != ds.samples.size()) {
    throw DataError("dataset: header declares " + std::to_string(declared) + " samples, found " +
                    std::to_string(ds.samples.size()));
  }
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_dataset(out, ds);
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return read_dataset(in);
}

Splits split(const std::vector<Sample>& samples, const SplitSizes& sizes, std::uint64_t seed) {
  const std::size_t need = sizes.train + sizes.validation + sizes.test;
  if (need > samples.size()) {
    throw DataError("split: requested " + std::to_string(need) + " samples but only " +
                    std::to_string(samples.size()) + " are available");
  }
  Rng rng(seed);
  const auto order = permutation(rng, samples.size());
  Splits out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < sizes.train; ++i) out.train.push_back(samples[order[k++]]);
  for (std::size_t i = 0; i < sizes.validation; ++i) out.validation.push_back(samples[order[k++]]);
  for (std::size_t i = 0; i < sizes.test; ++i) out.test.push_back(samples[order[k++]]);
  return out;
}

Matrix pad_mean(const Matrix& z, std::size_t total) {
  if (total < z.rows()) {
    throw std::invalid_argument("pad_mean: target length " + std::to_string(total) +
                                " is shorter than the " + std::to_string(z.rows()) + " observed rows");
  }
  Matrix out(total, z.cols());
  Vector mean(z.cols(), 0.0);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    out.set_row(r, z.row(r));
    add_to(mean, z.row(r));
  }
  if (z.rows() > 0) {
    for (auto& m : mean) m /= static_cast<double>(z.rows());
  }
  for (std::size_t r = z.rows(); r < total; ++r) out.set_row(r, mean);
  return out;
}

std::vector<std::size_t> class_stats(const std::vector<Sample>& samples) {
  if (samples.empty()) return {};
  std::vector<std::size_t> counts(samples.front().y_true.size(), 0);
  for (const auto& s : samples) {
    for (std::size_t l = 0; l < counts.size(); ++l) {
      if (s.y_true.at(l) > 0.5) ++counts[l];
    }
  }
  return counts;
}

Matrix segment_matrix(const std::vector<Sample>& samples) {
  const std::size_t L = samples.empty() ? 0 : samples.front().y_true.size();
  Matrix m(samples.size(), L);
  for (std::size_t i = 0; i < samples.size(); ++i) m.set_row(i, samples[i].y_true);
  return m;
}

}  // namespace mpn
