#include "mpn/adapters.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mpn {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r\"");
    const auto e = cell.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && end == s.data() + s.size();
}

double number_or_nan(const std::string& s) {
  double v = 0.0;
  return parse_number(s, v) ? v : std::nan("");
}

// Days since 1970-01-01 in the proleptic Gregorian calendar.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_positions(const std::vector<std::size_t>& rows,
                                                                  std::size_t length,
                                                                  const WindowOptions& opts) {
  std::vector<std::size_t> valid(rows.size(), 0);
  std::size_t total_valid = 0;
  for (std::size_t f = 0; f < rows.size(); ++f) {
    valid[f] = rows[f] >= length ? rows[f] - length + 1 : 0;
    total_valid += valid[f];
  }
  if (opts.count > 0 && total_valid == 0) {
    throw DataError("window sampling: no series is long enough for a window of " +
                    std::to_string(length) + " rows");
  }
  Rng rng(opts.seed);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::map<std::size_t, std::set<std::size_t>> taken;
  const std::size_t max_attempts = 1000 * std::max<std::size_t>(opts.count, 1);
  for (std::size_t attempt = 0; out.size() < opts.count; ++attempt) {
    if (attempt >= max_attempts) {
      throw DataError("window sampling: cannot place " + std::to_string(opts.count) +
                      " non-overlapping windows");
    }
    std::size_t g = static_cast<std::size_t>(rng.below(total_valid));
    std::size_t f = 0;
    while (g >= valid[f]) g -= valid[f++];
    if (!opts.allow_overlap) {
      auto& used = taken[f];
      auto it = used.lower_bound(g >= length ? g - length + 1 : 0);
      if (it != used.end() && *it < g + length) continue;
      used.insert(g);
    }
    out.emplace_back(f, g);
  }
  return out;
}

Sample cut_window(const Matrix& z_all, const Matrix& c_all, const Matrix& o_all, std::size_t start,
                  std::size_t history, std::size_t horizon) {
  Sample s;
  s.z = Matrix(history, z_all.cols());
  s.c = Matrix(history + horizon, c_all.cols());
  s.o_true = Matrix(horizon, o_all.cols());
  for (std::size_t t = 0; t < history; ++t) s.z.set_row(t, z_all.row(start + t));
  for (std::size_t t = 0; t < history + horizon; ++t) s.c.set_row(t, c_all.row(start + t));
  for (std::size_t t = 0; t < horizon; ++t) s.o_true.set_row(t, o_all.row(start + history + t));
  s.y_true = segment_from_stepwise(s.o_true);
  return s;
}

void fill_forward(Matrix& m) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double last = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (std::isfinite(m(r, c))) last = m(r, c);
      else m(r, c) = last;
    }
  }
}

Matrix take_stride(const Matrix& m, std::size_t stride) {
  if (stride <= 1) return m;
  Matrix out((m.rows() + stride - 1) / stride, m.cols());
  for (std::size_t r = 0, k = 0; r < m.rows(); r += stride, ++k) out.set_row(k, m.row(r));
  return out;
}

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open '" + p.string() + "'");
  return in;
}

}  // namespace

double parse_time(const std::string& text) {
  double v = 0.0;
  if (parse_number(text, v)) return v;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &s) >= 5 ||
      std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s) >= 5) {
  } else if (std::sscanf(text.c_str(), "%d/%d/%d %d:%d:%d", &mo, &d, &y, &h, &mi, &s) >= 5) {
  } else {
    throw DataError("unrecognized time stamp '" + text + "'");
  }
  const long long days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return static_cast<double>(days * 86400LL + h * 3600LL + mi * 60LL + s);
}

std::vector<std::size_t> sample_window_starts(std::size_t rows, std::size_t length,
                                              const WindowOptions& opts) {
  std::vector<std::size_t> out;
  for (const auto& [f, start] : sample_positions({rows}, length, opts)) out.push_back(start);
  return out;
}

Dataset convert_phm(const PhmOptions& opts) {
  // time -> unit id -> readings
  std::map<double, std::map<int, std::vector<double>>> comp, zone;
  std::set<int> comp_ids, zone_ids;

  auto read_units = [](const std::filesystem::path& path, std::size_t width,
                       std::map<double, std::map<int, std::vector<double>>>& table, std::set<int>& ids) {
    auto in = open_or_throw(path);
    std::string line;
    std::getline(in, line);  // header
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto cells = split_csv(line);
      if (cells.size() < 2 + width) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(2 + width) + " columns");
      }
      double id = 0.0;
      if (!parse_number(cells[0], id)) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": invalid unit id");
      }
      std::vector<double> vals(width);
      for (std::size_t k = 0; k < width; ++k) vals[k] = number_or_nan(cells[2 + k]);
      table[parse_time(cells[1])][static_cast<int>(id)] = std::move(vals);
      ids.insert(static_cast<int>(id));
    }
  };
  read_units(opts.a_file, 8, comp, comp_ids);
  if (!opts.b_file.empty()) read_units(opts.b_file, 2, zone, zone_ids);

  struct Fault {
    double start, end;
    int code;
  };
  std::vector<Fault> faults;
  {
    auto in = open_or_throw(opts.c_file);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto cells = split_csv(line);
      if (cells.size() < 3) throw DataError(opts.c_file.string() + ": expected start,end,code");
      double code = 0.0;
      if (!parse_number(cells[2], code)) throw DataError(opts.c_file.string() + ": invalid fault code");
      faults.push_back({parse_time(cells[0]), parse_time(cells[1]), static_cast<int>(code)});
    }
  }

  std::vector<double> times;
  for (const auto& [t, _] : comp) times.push_back(t);
  const std::size_t dz = 4 * comp_ids.size() + 2 * zone_ids.size();
  const std::size_t dc = 4 * comp_ids.size();
  const std::size_t L = opts.codes.size();
  Matrix z_all(times.size(), dz, std::nan("")), c_all(times.size(), dc, std::nan("")), o_all(times.size(), L);
  for (std::size_t r = 0; r < times.size(); ++r) {
    std::size_t k = 0;
    for (int id : comp_ids) {
      const auto& row = comp[times[r]];
      auto it = row.find(id);
      for (std::size_t j = 0; j < 4; ++j) {
        if (it != row.end()) {
          z_all(r, 4 * k + j) = it->second[j];
          c_all(r, 4 * k + j) = it->second[4 + j];
        }
      }
      ++k;
    }
    std::size_t zk = 0;
    auto zrow = zone.find(times[r]);
    for (int id : zone_ids) {
      for (std::size_t j = 0; j < 2; ++j) {
        if (zrow != zone.end()) {
          auto it = zrow->second.find(id);
          if (it != zrow->second.end()) z_all(r, 4 * comp_ids.size() + 2 * zk + j) = it->second[j];
        }
      }
      ++zk;
    }
    for (const auto& f : faults) {
      if (times[r] < f.start || times[r] > f.end) continue;
      for (std::size_t l = 0; l < L; ++l) {
        if (opts.codes[l] == f.code) o_all(r, l) = 1.0;
      }
    }
  }
  fill_forward(z_all);
  fill_forward(c_all);
  z_all = take_stride(z_all, opts.window.stride);
  c_all = take_stride(c_all, opts.window.stride);
  o_all = take_stride(o_all, opts.window.stride);

  Dataset ds;
  ds.meta.history = opts.window.history;
  ds.meta.total = opts.window.history + opts.window.horizon;
  ds.meta.labels = L;
  ds.meta.observed = dz;
  ds.meta.context = dc;
  for (int code : opts.codes) ds.meta.label_names.push_back("fault_" + std::to_string(code));
  ds.meta.source = DataSource::phm_adapter;
  ds.meta.validate();
  for (const auto& [f, start] : sample_positions({z_all.rows()}, ds.meta.total, opts.window)) {
    ds.samples.push_back(cut_window(z_all, c_all, o_all, start, opts.window.history, opts.window.horizon));
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) validate_sample(ds.meta, ds.samples[i], i);
  return ds;
}

Dataset convert_har(const HarOptions& opts) {
  if (opts.files.empty()) throw DataError("convert-har: no input files");
  if (opts.obs_first < 1 || opts.obs_last < opts.obs_first) throw DataError("convert-har: bad observation columns");

  std::vector<std::vector<std::vector<double>>> tables;
  std::set<int> motions, objects;
  const std::size_t need = std::max({opts.obs_last, opts.activity_column, opts.motion_column, opts.object_column});
  for (const auto& path : opts.files) {
    auto in = open_or_throw(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ss(line);
      std::vector<double> row;
      std::string tok;
      while (ss >> tok) row.push_back(number_or_nan(tok));
      if (row.empty()) continue;
      if (row.size() < need) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected at least " +
                        std::to_string(need) + " columns");
      }
      const double mo = row[opts.motion_column - 1];
      const double ob = row[opts.object_column - 1];
      if (std::isfinite(mo) && mo != 0.0) motions.insert(static_cast<int>(mo));
      if (std::isfinite(ob) && ob != 0.0) objects.insert(static_cast<int>(ob));
      rows.push_back(std::move(row));
    }
    tables.push_back(std::move(rows));
  }

  const std::vector<int> motion_codes(motions.begin(), motions.end());
  const std::vector<int> object_codes(objects.begin(), objects.end());
  const std::size_t L = motion_codes.size() + object_codes.size();
  if (L == 0) throw DataError("convert-har: no right-arm labels found");
  const std::size_t dz = opts.obs_last - opts.obs_first + 1;
  const std::size_t dc = opts.activity_codes.size();

  std::vector<Matrix> zs, cs, os;
  std::vector<std::size_t> lengths;
  for (const auto& rows : tables) {
    Matrix z(rows.size(), dz), c(rows.size(), dc), o(rows.size(), L);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t k = 0; k < dz; ++k) z(r, k) = rows[r][opts.obs_first - 1 + k];
      const double act = rows[r][opts.activity_column - 1];
      for (std::size_t k = 0; k < dc; ++k) c(r, k) = act == opts.activity_codes[k] ? 1.0 : 0.0;
      const double mo = rows[r][opts.motion_column - 1];
      const double ob = rows[r][opts.object_column - 1];
      for (std::size_t k = 0; k < motion_codes.size(); ++k) o(r, k) = mo == motion_codes[k] ? 1.0 : 0.0;
      for (std::size_t k = 0; k < object_codes.size(); ++k) {
        o(r, motion_codes.size() + k) = ob == object_codes[k] ? 1.0 : 0.0;
      }
    }
    fill_forward(z);
    zs.push_back(take_stride(z, opts.window.stride));
    cs.push_back(take_stride(c, opts.window.stride));
    os.push_back(take_stride(o, opts.window.stride));
    lengths.push_back(zs.back().rows());
  }

  Dataset ds;
  ds.meta.history = opts.window.history;
  ds.meta.total = opts.window.history + opts.window.horizon;
  ds.meta.labels = L;
  ds.meta.observed = dz;
  ds.meta.context = dc;
  for (int code : motion_codes) ds.meta.label_names.push_back("motion_" + std::to_string(code));
  for (int code : object_codes) ds.meta.label_names.push_back("object_" + std::to_string(code));
  ds.meta.source = DataSource::har_adapter;
  ds.meta.validate();
  for (const auto& [f, start] : sample_positions(lengths, ds.meta.total, opts.window)) {
    ds.samples.push_back(cut_window(zs[f], cs[f], os[f], start, opts.window.history, opts.window.horizon));
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) validate_sample(ds.meta, ds.samples[i], i);
  return ds;
}

}  // namespace mpn
