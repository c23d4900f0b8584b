#include "mpn/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpn/adapters.hpp"
#include "mpn/data.hpp"
#include "mpn/decide.hpp"
#include "mpn/evaluate.hpp"
#include "mpn/model_io.hpp"
#include "mpn/synth.hpp"
#include "mpn/train.hpp"

namespace mpn {

namespace {

using json = nlohmann::json;

// Sub-seeds derived from --seed: split = seed, model init/shuffle from
// TrainConfig::seed = seed, classifier fitting = seed forked on stream 3.
constexpr std::uint64_t kClassifierStream = 3;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CommonFlags {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct SplitFlags {
  std::string split = "auto";
  std::string subset = "test";
};

SplitSizes parse_split(const std::string& text, std::size_t n) {
  if (text == "auto") {
    if (n >= 1000) return {500, 100, 400};
    return {n / 2, n / 10, n - n / 2 - n / 10};
  }
  SplitSizes s;
  char c1 = 0, c2 = 0;
  std::istringstream ss(text);
  if (!(ss >> s.train >> c1 >> s.validation >> c2 >> s.test) || c1 != ',' || c2 != ',') {
    throw UsageError("--split expects 'auto' or three comma-separated counts, got '" + text + "'");
  }
  return s;
}

const std::vector<Sample>& pick_subset(const Splits& sp, const std::vector<Sample>& all, const std::string& which) {
  if (which == "train") return sp.train;
  if (which == "validation") return sp.validation;
  if (which == "test") return sp.test;
  return all;
}

void check_subset_name(const std::string& s) {
  if (s != "train" && s != "validation" && s != "test" && s != "all") {
    throw UsageError("--subset must be one of train, validation, test, all");
  }
}

void check_dims(const MpnDims& model, const DatasetMeta& meta) {
  if (!(model == meta.model_dims())) {
    throw DataError("dataset dimensions (L=" + std::to_string(meta.labels) + ", d_z=" +
                    std::to_string(meta.observed) + ", d_c=" + std::to_string(meta.context) +
                    ", tau=" + std::to_string(meta.history) + ", T=" + std::to_string(meta.total) +
                    ") do not match the model");
  }
}

void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  ensure_parent(p);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + p.string() + "' failed");
}

void print_stats(std::ostream& out, const Dataset& ds) {
  auto counts = class_stats(ds.samples);
  if (counts.empty()) counts.assign(ds.meta.labels, 0);
  out << "samples: " << ds.samples.size() << "\n";
  out << "label,name,count\n";
  for (std::size_t l = 0; l < counts.size(); ++l) {
    const std::string name = l < ds.meta.label_names.size() ? ds.meta.label_names[l] : "label_" + std::to_string(l);
    out << l << ',' << name << ',' << counts[l] << "\n";
  }
}

json report_json(const PrfReport& r) {
  json j;
  for (const auto& [k, v] : report_fields(r)) j[k] = v;
  return j;
}

// ---------------------------------------------------------------- generate

struct GenerateFlags {
  std::size_t n = 1000;
  std::string out;
  std::optional<double> noise;
  std::vector<double> rarity;
};

int cmd_generate(const GenerateFlags& f, const CommonFlags& common, std::ostream& out) {
  SynthConfig cfg = SynthConfig::defaults();
  cfg.seed = common.seed;
  if (f.noise) cfg.noise = *f.noise;
  if (!f.rarity.empty()) {
    if (f.rarity.size() != cfg.triggers.size()) {
      throw UsageError("--rarity needs one multiplier per label (" + std::to_string(cfg.triggers.size()) + ")");
    }
    for (std::size_t l = 0; l < f.rarity.size(); ++l) cfg.triggers[l].rarity = f.rarity[l];
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Dataset ds = synth_generate(cfg, f.n);
  save_dataset(f.out, ds);
  print_stats(out, ds);
  return kExitOk;
}

// ----------------------------------------------------------------- convert

struct ConvertFlags {
  std::string out;
  std::size_t n = 1000;
  std::size_t tau = 0;
  std::size_t horizon = 0;
  std::size_t stride = 1;
  bool no_overlap = false;
  // phm
  std::string a_file, b_file, c_file;
  std::vector<int> codes;
  // har
  std::vector<std::string> files;
  std::size_t obs_first = 2, obs_last = 243, activity_column = 245, motion_column = 248, object_column = 249;
};

WindowOptions window_from(const ConvertFlags& f, const CommonFlags& common, std::size_t tau, std::size_t horizon) {
  WindowOptions w;
  w.history = f.tau ? f.tau : tau;
  w.horizon = f.horizon ? f.horizon : horizon;
  w.count = f.n;
  w.stride = f.stride;
  w.allow_overlap = !f.no_overlap;
  w.seed = common.seed;
  if (w.horizon < 1) throw UsageError("--horizon must be at least 1");
  if (w.stride < 1) throw UsageError("--stride must be at least 1");
  return w;
}

int cmd_convert_phm(const ConvertFlags& f, const CommonFlags& common, std::ostream& out) {
  PhmOptions o;
  o.a_file = f.a_file;
  o.b_file = f.b_file;
  o.c_file = f.c_file;
  if (!f.codes.empty()) o.codes = f.codes;
  o.window = window_from(f, common, 30, 10);
  const Dataset ds = convert_phm(o);
  save_dataset(f.out, ds);
  print_stats(out, ds);
  return kExitOk;
}

int cmd_convert_har(const ConvertFlags& f, const CommonFlags& common, std::ostream& out) {
  HarOptions o;
  for (const auto& p : f.files) o.files.emplace_back(p);
  o.obs_first = f.obs_first;
  o.obs_last = f.obs_last;
  o.activity_column = f.activity_column;
  o.motion_column = f.motion_column;
  o.object_column = f.object_column;
  o.window = window_from(f, common, 75, 25);
  const Dataset ds = convert_har(o);
  save_dataset(f.out, ds);
  print_stats(out, ds);
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainFlags {
  std::string data;
  std::string out;
  std::string history;
  std::string loss = "base";
  double eta = 0.01;
  double lambda = 0.1;
  double beta = 0.5;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t patience = 25;
  std::optional<double> clip_norm;
  std::string optimizer = "adam";
  SplitFlags split;
  bool verbose = false;
  // gridsearch only
  std::string grid_file;
  std::string report;
};

TrainConfig train_config_from(const TrainFlags& f, const CommonFlags& common) {
  TrainConfig c;
  try {
    c.loss = loss_config_from_string(f.loss);
    c.optimizer = optimizer_from_string(f.optimizer);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  c.learning_rate = f.eta;
  c.l2 = f.lambda;
  c.beta = f.beta;
  c.batch_size = f.batch_size;
  c.max_epochs = f.max_epochs;
  c.patience = f.patience;
  c.clip_norm = f.clip_norm;
  c.seed = common.seed;
  c.threads = common.threads;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

struct LoadedData {
  Dataset ds;
  Splits splits;
};

LoadedData load_and_split(const std::string& path, const std::string& split_text, std::uint64_t seed) {
  LoadedData d;
  d.ds = load_dataset(path);
  d.splits = split(d.ds.samples, parse_split(split_text, d.ds.samples.size()), seed);
  return d;
}

// The weight -log p is 0 for a label present in every training sample,
// which silences its positive term; say so.
void warn_always_present(std::ostream& log, const LoadedData& d) {
  if (d.splits.train.empty()) return;
  std::vector<std::size_t> always;
  class_weights(segment_matrix(d.splits.train), &always);
  for (auto l : always) {
    const std::string name = l < d.ds.meta.label_names.size() ? d.ds.meta.label_names[l] : std::to_string(l);
    log << "warning: label '" << name << "' is present in every training sample; its class weight is 0\n";
  }
}

ModelFile finish_model(const MpnModel& model, const std::vector<Sample>& train_set, std::uint64_t seed,
                       std::size_t threads) {
  ModelFile file{model, {}};
  if (!train_set.empty()) {
    const EmbeddedSet emb = embed(model, train_set, threads);
    file.classifiers = fit_classifiers(emb, Rng(seed).fork(kClassifierStream).seed());
  }
  return file;
}

std::string history_path(const TrainFlags& f) {
  return f.history.empty() ? f.out + ".history.csv" : f.history;
}

int cmd_train(const TrainFlags& f, const CommonFlags& common, std::ostream& out, std::ostream& log) {
  const TrainConfig cfg = train_config_from(f, common);
  parse_split(f.split.split, 0);
  const auto data = load_and_split(f.data, f.split.split, common.seed);
  warn_always_present(log, data);
  Rng init_rng = Rng(cfg.seed).fork(kInitStream);
  const MpnModel init = MpnModel::initialized(data.ds.meta.model_dims(), init_rng);

  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult res = train(init, data.splits.train, data.splits.validation, cfg, [&](const EpochRecord& e) {
    if (f.verbose) {
      log << "epoch " << e.epoch << " loss " << e.train.total << " val_micro_f1 " << e.val_micro_f1
          << " val_macro_f1 " << e.val_macro_f1 << " (" << e.seconds << " s)\n";
    }
  });
  log << "trained " << res.history.epochs.size() << " epochs in "
      << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";

  save_model(f.out, finish_model(res.model, data.splits.train, common.seed, common.threads));
  std::ostringstream hist;
  write_history_csv(hist, res.history);
  write_file(history_path(f), hist.str());

  out << "loss: " << to_string(cfg.loss) << "\n";
  out << "epochs: " << res.history.epochs.size() << "\n";
  out << "best_epoch: " << (res.history.best_epoch ? *res.history.best_epoch : 0) << "\n";
  if (res.history.best_epoch) {
    const auto& e = res.history.epochs[*res.history.best_epoch - 1];
    out << "val_micro_f1: " << format_double(e.val_micro_f1) << "\n";
    out << "val_macro_f1: " << format_double(e.val_macro_f1) << "\n";
  }
  out << "model: " << f.out << "\n";
  return kExitOk;
}

// -------------------------------------------------------------- gridsearch

std::vector<TrainConfig> read_grid_file(const std::string& path, const TrainConfig& base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open grid file '" + path + "'");
  std::vector<TrainConfig> grid;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
      continue;
    }
    TrainConfig c = base;
    std::istringstream ss(line);
    std::string kv;
    while (ss >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw DataError("grid file: expected key=value, got '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      const double v = parse_double(kv.substr(eq + 1));
      if (key == "eta") c.learning_rate = v;
      else if (key == "lambda") c.l2 = v;
      else if (key == "beta") c.beta = v;
      else throw DataError("grid file: unknown key '" + key + "'");
    }
    c.seed = base.seed + grid.size();
    c.validate();
    grid.push_back(c);
  }
  if (grid.empty()) throw DataError("grid file '" + path + "' has no points");
  return grid;
}

int cmd_gridsearch(const TrainFlags& f, const CommonFlags& common, std::ostream& out, std::ostream& log) {
  const TrainConfig base = train_config_from(f, common);
  parse_split(f.split.split, 0);
  const auto grid = f.grid_file.empty() ? default_grid(base) : read_grid_file(f.grid_file, base);
  const auto data = load_and_split(f.data, f.split.split, common.seed);
  warn_always_present(log, data);

  const auto t0 = std::chrono::steady_clock::now();
  const GridSearchResult res =
      grid_search(grid, data.ds.meta.model_dims(), data.splits.train, data.splits.validation, common.threads);
  log << "grid search over " << grid.size() << " points took "
      << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";

  save_model(f.out, finish_model(res.best_model, data.splits.train, common.seed, common.threads));
  std::ostringstream report;
  write_grid_report(report, res);
  write_file(f.report.empty() ? f.out + ".grid.txt" : f.report, report.str());
  std::ostringstream hist;
  write_history_csv(hist, res.best_history);
  write_file(history_path(f), hist.str());
  out << report.str();
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvalFlags {
  std::string model;
  std::string data;
  std::string classifier = "svm";
  bool localize = false;
  std::string out;
  SplitFlags split;
};

int cmd_evaluate(const EvalFlags& f, const CommonFlags& common, std::ostream& out) {
  check_subset_name(f.split.subset);
  std::vector<ClassifierKind> kinds;
  if (f.classifier == "all") {
    kinds = {ClassifierKind::svm, ClassifierKind::threshold_zero, ClassifierKind::nearest_mean};
  } else {
    try {
      kinds = {classifier_kind_from_string(f.classifier)};
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  parse_split(f.split.split, 0);
  const ModelFile mf = load_model(f.model);
  const auto data = load_and_split(f.data, f.split.split, common.seed);
  check_dims(mf.model.dims, data.ds.meta);
  const auto& samples = pick_subset(data.splits, data.ds.samples, f.split.subset);
  if (samples.empty()) throw DataError("evaluate: the selected subset is empty");

  const EmbeddedSet set = embed(mf.model, samples, common.threads);
  std::ostringstream text;
  json records;
  records["subset"] = f.split.subset;
  records["samples"] = samples.size();
  for (auto kind : kinds) {
    const auto* clf = mf.find(segment_role(kind));
    if (!clf) throw DataError(std::string("model file has no ") + segment_role(kind) + " classifier");
    const PrfReport r = evaluate_segment(*clf, set);
    write_report_text(text, r, std::string(segment_role(kind)) + ".");
    records["segment"][to_string(kind)] = report_json(r);
  }
  if (f.localize) {
    const auto* seg = mf.find(segment_role(kinds.front()));
    const auto* step = mf.find(kStepSvm);
    if (!step) throw DataError("model file has no step.svm classifier");
    const auto loc = evaluate_localization(*seg, *step, set);
    write_report_text(text, loc.localized, "localization.localized.");
    write_report_text(text, loc.broadcast, "localization.broadcast.");
    records["localization"]["localized"] = report_json(loc.localized);
    records["localization"]["broadcast"] = report_json(loc.broadcast);
  }
  out << text.str();
  if (!f.out.empty()) {
    write_file(f.out + ".txt", text.str());
    write_file(f.out + ".json", records.dump(2) + "\n");
  }
  return kExitOk;
}

// -------------------------------------------------------- predict/localize

int cmd_predict(const EvalFlags& f, const CommonFlags& common, std::ostream& out, bool localize_only) {
  check_subset_name(f.split.subset);
  parse_split(f.split.split, 0);
  const ModelFile mf = load_model(f.model);
  const auto data = load_and_split(f.data, f.split.split, common.seed);
  check_dims(mf.model.dims, data.ds.meta);
  const auto& samples = pick_subset(data.splits, data.ds.samples, f.split.subset);
  const EmbeddedSet set = embed(mf.model, samples, common.threads);

  ClassifierKind kind = ClassifierKind::svm;
  try {
    kind = classifier_kind_from_string(f.classifier);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto* seg = mf.find(segment_role(kind));
  const auto* step = mf.find(kStepSvm);
  std::ostringstream lines;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& p = set.predictions[i];
    json rec;
    rec["index"] = i;
    Vector decision;
    if (seg) decision = classify(*seg, p.g);
    if (!localize_only) {
      rec["g"] = p.g;
      rec["y"] = p.y;
      std::vector<std::vector<double>> o;
      for (std::size_t s = 0; s < p.o.rows(); ++s) o.emplace_back(p.o.row(s).begin(), p.o.row(s).end());
      rec["o"] = o;
      if (seg) rec["labels"] = decision;
    } else {
      if (!seg || !step) throw DataError("model file lacks the classifiers needed for localization");
      const Matrix loc = localize_gated(*step, p.o, decision);
      std::vector<std::vector<double>> rows;
      for (std::size_t s = 0; s < loc.rows(); ++s) rows.emplace_back(loc.row(s).begin(), loc.row(s).end());
      rec["labels"] = decision;
      rec["steps"] = rows;
    }
    lines << rec.dump() << "\n";
  }
  if (f.out.empty()) out << lines.str();
  else write_file(f.out, lines.str());
  return kExitOk;
}

// --------------------------------------------------------------- gradcheck

struct GradFlags {
  std::string loss = "all";
  double fd_step = 1e-5;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradFlags& f, const CommonFlags& common, std::ostream& out) {
  std::vector<LossConfig> configs;
  if (f.loss == "all") {
    configs = {LossConfig::base, LossConfig::localize, LossConfig::siamese};
  } else {
    try {
      configs = {loss_config_from_string(f.loss)};
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (!(f.fd_step > 0.0)) throw UsageError("--fd-step must be positive");

  const MpnDims dims{2, 2, 1, 3, 5};
  Rng rng(common.seed);
  MpnModel model = MpnModel::initialized(dims, rng);
  for (auto& v : model.b_g) v = rng.uniform(-0.5, 0.5);
  SynthConfig sc;
  sc.history = 3;
  sc.total = 5;
  sc.context = 1;
  sc.sensor_lags = {0.3, 0.5};
  sc.triggers = {{"a", TriggerKind::jump, 0, 0, 0.3, 1.0}, {"b", TriggerKind::lag_above, 0, 0, 0.2, 1.0}};
  sc.seed = common.seed;
  const Dataset ds = synth_generate(sc, 2);
  const ClassWeights cw = class_weights(Matrix{{1, 0}, {0, 0}, {1, 1}});

  bool ok = true;
  for (auto cfg : configs) {
    const auto r = grad_check(model, ds.samples, cfg, cw, 0.1, 0.3, f.fd_step);
    const bool pass = r.max_relative_error < f.tolerance;
    ok = ok && pass;
    out << to_string(cfg) << ": " << (pass ? "PASS" : "FAIL") << " max_relative_error "
        << format_double(r.max_relative_error) << " at parameter " << r.worst_index << " (analytic "
        << format_double(r.analytic) << ", numeric " << format_double(r.numeric) << ")\n";
  }
  return ok ? kExitOk : kExitCheckFailed;
}

// ----------------------------------------------------------------- compare

struct CompareFlags {
  std::string a, b, out;
};

void flatten_json(const json& j, const std::string& prefix, std::map<std::string, double>& acc) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) flatten_json(*it, key, acc);
    else if (it->is_number_float()) acc[key] = it->get<double>();
  }
}

int cmd_compare(const CompareFlags& f, std::ostream& out) {
  auto load = [](const std::string& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open report '" + p + "'");
    try {
      return json::parse(in);
    } catch (const json::exception& e) {
      throw DataError("report '" + p + "': " + e.what());
    }
  };
  std::map<std::string, double> a, b;
  flatten_json(load(f.a), "", a);
  flatten_json(load(f.b), "", b);
  std::ostringstream text;
  text << "# " << f.a << " minus " << f.b << "\n";
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end()) continue;
    text << k << ": " << format_double(v - it->second) << "\n";
  }
  out << text.str();
  if (!f.out.empty()) write_file(f.out, text.str());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
  CLI::App app{"Multi-label predictive network: training, evaluation and data tools", "mpn"};
  app.require_subcommand(1);
  CommonFlags common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Seed for every random draw");
    sub->add_option("--threads", common.threads, "Worker threads (1 = strict reproducibility)")
        ->check(CLI::PositiveNumber);
  };

  GenerateFlags gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  generate->add_option("--n", gen.n, "Number of samples");
  generate->add_option("--out", gen.out, "Output dataset file")->required();
  generate->add_option("--noise", gen.noise, "Sensor noise scale");
  generate->add_option("--rarity", gen.rarity, "Per-label threshold multipliers");
  add_common(generate);

  ConvertFlags conv;
  auto add_window = [&](CLI::App* sub) {
    sub->add_option("--out", conv.out, "Output dataset file")->required();
    sub->add_option("--n", conv.n, "Number of windows");
    sub->add_option("--tau", conv.tau, "History length");
    sub->add_option("--horizon", conv.horizon, "Forecast length");
    sub->add_option("--stride", conv.stride, "Keep every stride-th row");
    sub->add_flag("--no-overlap", conv.no_overlap, "Reject overlapping windows");
    add_common(sub);
  };
  auto* phm = app.add_subcommand("convert-phm", "Convert PHM 2015 plant files");
  phm->add_option("--a-file", conv.a_file, "Component readings CSV")->required();
  phm->add_option("--b-file", conv.b_file, "Zone readings CSV");
  phm->add_option("--c-file", conv.c_file, "Fault events CSV")->required();
  phm->add_option("--codes", conv.codes, "Fault codes mapped to labels, in order");
  add_window(phm);
  auto* har = app.add_subcommand("convert-har", "Convert Opportunity .dat files");
  har->add_option("--files", conv.files, "Input .dat files")->required();
  har->add_option("--obs-first", conv.obs_first, "First observation column (1-based)");
  har->add_option("--obs-last", conv.obs_last, "Last observation column (1-based)");
  har->add_option("--activity-column", conv.activity_column, "High-level activity column");
  har->add_option("--motion-column", conv.motion_column, "Right-arm motion column");
  har->add_option("--object-column", conv.object_column, "Right-arm object column");
  add_window(har);

  TrainFlags tf;
  auto add_train = [&](CLI::App* sub) {
    sub->add_option("--data", tf.data, "Dataset file")->required();
    sub->add_option("--out", tf.out, "Model file to write")->required();
    sub->add_option("--history", tf.history, "History CSV (default <out>.history.csv)");
    sub->add_option("--loss", tf.loss, "base | localize | siamese");
    sub->add_option("--eta", tf.eta, "Learning rate");
    sub->add_option("--lambda", tf.lambda, "L2 coefficient");
    sub->add_option("--beta", tf.beta, "Siamese mixing weight");
    sub->add_option("--batch-size", tf.batch_size, "Mini-batch size");
    sub->add_option("--max-epochs", tf.max_epochs, "Epoch budget");
    sub->add_option("--patience", tf.patience, "Early-stopping patience in epochs");
    sub->add_option("--clip-norm", tf.clip_norm, "Clip gradients to this global norm");
    sub->add_option("--optimizer", tf.optimizer, "adam | sgd");
    sub->add_option("--split", tf.split.split, "train,validation,test counts or 'auto'");
    sub->add_flag("--verbose", tf.verbose, "Log every epoch");
    add_common(sub);
  };
  auto* trn = app.add_subcommand("train", "Train a model");
  add_train(trn);
  auto* grid = app.add_subcommand("gridsearch", "Grid search over eta, lambda (and beta)");
  add_train(grid);
  grid->add_option("--grid-file", tf.grid_file, "Grid points, one 'eta=.. lambda=.. [beta=..]' per line");
  grid->add_option("--report", tf.report, "Report file (default <out>.grid.txt)");

  EvalFlags ef;
  auto add_eval = [&](CLI::App* sub) {
    sub->add_option("--model", ef.model, "Model file")->required();
    sub->add_option("--data", ef.data, "Dataset file")->required();
    sub->add_option("--split", ef.split.split, "train,validation,test counts or 'auto'");
    sub->add_option("--subset", ef.split.subset, "train | validation | test | all");
    add_common(sub);
  };
  auto* evaluate = app.add_subcommand("evaluate", "Score segment (and stepwise) decisions");
  add_eval(evaluate);
  evaluate->add_option("--classifier", ef.classifier, "svm | threshold | nearest | all");
  evaluate->add_flag("--localize", ef.localize, "Also score localized vs broadcast stepwise decisions");
  evaluate->add_option("--out", ef.out, "Report path prefix (.txt and .json)");
  auto* pred = app.add_subcommand("predict", "Write g, y, o and segment decisions per sample");
  add_eval(pred);
  pred->add_option("--classifier", ef.classifier, "svm | threshold | nearest");
  pred->add_option("--out", ef.out, "Output JSON Lines file (default stdout)");
  auto* loc = app.add_subcommand("localize", "Write stepwise label decisions per sample");
  add_eval(loc);
  loc->add_option("--classifier", ef.classifier, "Segment classifier gating the steps");
  loc->add_option("--out", ef.out, "Output JSON Lines file (default stdout)");

  GradFlags gf;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
  gc->add_option("--loss", gf.loss, "base | localize | siamese | all");
  gc->add_option("--fd-step", gf.fd_step, "Central difference step");
  gc->add_option("--tolerance", gf.tolerance, "Maximum relative error");
  add_common(gc);

  CompareFlags cf;
  auto* cmp = app.add_subcommand("compare", "Difference of two JSON reports (a - b)");
  cmp->add_option("a", cf.a, "Report JSON")->required();
  cmp->add_option("b", cf.b, "Baseline report JSON")->required();
  cmp->add_option("--out", cf.out, "Write the comparison here");

  std::vector<const char*> argv{"mpn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen, common, out);
    if (phm->parsed()) return cmd_convert_phm(conv, common, out);
    if (har->parsed()) return cmd_convert_har(conv, common, out);
    if (trn->parsed()) return cmd_train(tf, common, out, log);
    if (grid->parsed()) return cmd_gridsearch(tf, common, out, log);
    if (evaluate->parsed()) return cmd_evaluate(ef, common, out);
    if (pred->parsed()) return cmd_predict(ef, common, out, false);
    if (loc->parsed()) return cmd_predict(ef, common, out, true);
    if (gc->parsed()) return cmd_gradcheck(gf, common, out);
    if (cmp->parsed()) return cmd_compare(cf, out);
  } catch (const UsageError& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace mpn
