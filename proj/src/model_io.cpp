#include "mpn/model_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mpn {

const LabelClassifier* ModelFile::find(const std::string& role) const {
  for (const auto& c : classifiers) {
    if (c.role == role) return &c.classifier;
  }
  return nullptr;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw FormatError("cannot format double");
  return {buf.data(), end};
}

double parse_double(const std::string& token) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || end != token.data() + token.size()) {
    throw FormatError("invalid number '" + token + "'");
  }
  return v;
}

namespace {

const std::array<const char*, 8> kLstmTensorNames = {
    "w_forget", "w_input", "w_cell", "w_output", "b_forget", "b_input", "b_cell", "b_output"};

struct TensorSlot {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::span<double> values;
};

std::vector<TensorSlot> slots(MpnModel& m) {
  std::vector<TensorSlot> out;
  auto add_lstm = [&](const std::string& prefix, LstmParams& p) {
    std::size_t k = 0;
    p.for_each_tensor([&](std::span<double> t, bool is_weight) {
      const std::size_t rows = is_weight ? p.hidden : 1;
      out.push_back({prefix + "." + kLstmTensorNames[k++], rows, t.size() / std::max<std::size_t>(rows, 1), t});
    });
  };
  add_lstm("encoder", m.encoder);
  add_lstm("decoder", m.decoder);
  out.push_back({"b_g", 1, m.b_g.size(), m.b_g});
  return out;
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next() {
    std::string tok;
    if (!(in_ >> tok)) throw FormatError("model file: unexpected end of input");
    return tok;
  }
  void expect(const std::string& want) {
    const auto got = next();
    if (got != want) throw FormatError("model file: expected '" + want + "', found '" + got + "'");
  }
  std::size_t count() {
    const auto tok = next();
    std::size_t v = 0;
    auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || end != tok.data() + tok.size()) {
      throw FormatError("model file: invalid count '" + tok + "'");
    }
    return v;
  }
  double real() { return parse_double(next()); }

 private:
  std::istream& in_;
};

}  // namespace

void write_model(std::ostream& out, const ModelFile& file) {
  const MpnModel& m = file.model;
  const MpnDims& d = m.dims;
  out << "mpn-model " << kModelFormatVersion << "\n";
  out << "dims " << d.labels << ' ' << d.observed << ' ' << d.context << ' ' << d.history << ' '
      << d.total << "\n";
  MpnModel copy = m;
  for (const auto& slot : slots(copy)) {
    out << "tensor " << slot.name << ' ' << slot.rows << ' ' << slot.cols << "\n";
    for (std::size_t k = 0; k < slot.values.size(); ++k) {
      if (k > 0) out << ' ';
      out << format_double(slot.values[k]);
    }
    out << "\n";
  }
  for (const auto& named : file.classifiers) {
    const auto& c = named.classifier;
    out << "classifier " << named.role << ' ' << to_string(c.kind) << ' ' << c.rules.size() << "\n";
    for (const auto& r : c.rules) {
      out << "rule " << (r.fallback ? 1 : 0) << ' ' << format_double(r.fallback_threshold) << ' '
          << format_double(r.weight) << ' ' << format_double(r.bias) << ' '
          << format_double(r.negative_mean) << ' ' << format_double(r.positive_mean) << "\n";
    }
  }
  out << "end\n";
}

ModelFile read_model(std::istream& in) {
  TokenReader tr(in);
  tr.expect("mpn-model");
  const auto version = tr.count();
  if (version != static_cast<std::size_t>(kModelFormatVersion)) {
    throw FormatError("model file: unsupported format version " + std::to_string(version));
  }
  tr.expect("dims");
  MpnDims d;
  d.labels = tr.count();
  d.observed = tr.count();
  d.context = tr.count();
  d.history = tr.count();
  d.total = tr.count();
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }

  ModelFile file;
  file.model = MpnModel::zeros(d);
  for (auto& slot : slots(file.model)) {
    tr.expect("tensor");
    tr.expect(slot.name);
    const auto rows = tr.count();
    const auto cols = tr.count();
    if (rows != slot.rows || cols != slot.cols) {
      throw FormatError("model file: tensor " + slot.name + " has shape " + std::to_string(rows) +
                        "x" + std::to_string(cols) + ", expected " + std::to_string(slot.rows) + "x" +
                        std::to_string(slot.cols));
    }
    for (auto& v : slot.values) v = tr.real();
  }

  for (;;) {
    const auto tok = tr.next();
    if (tok == "end") break;
    if (tok != "classifier") throw FormatError("model file: unexpected token '" + tok + "'");
    NamedClassifier named;
    named.role = tr.next();
    try {
      named.classifier.kind = classifier_kind_from_string(tr.next());
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("model file: ") + e.what());
    }
    const auto n = tr.count();
    named.classifier.rules.resize(n);
    for (auto& r : named.classifier.rules) {
      tr.expect("rule");
      r.fallback = tr.count() != 0;
      r.fallback_threshold = tr.real();
      r.weight = tr.real();
      r.bias = tr.real();
      r.negative_mean = tr.real();
      r.positive_mean = tr.real();
    }
    file.classifiers.push_back(std::move(named));
  }
  return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_model(out, file);
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path.string() + "'");
  return read_model(in);
}

}  // namespace mpn
