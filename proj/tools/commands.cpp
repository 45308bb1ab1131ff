#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "bitbit/coverage.hpp"
#include "bitbit/dataset.hpp"
#include "bitbit/dimred.hpp"
#include "bitbit/encoder.hpp"
#include "bitbit/error.hpp"
#include "bitbit/qsim.hpp"
#include "bitbit/stream.hpp"

namespace bitbit::cli {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ColumnRef label_ref(const std::filesystem::path& path, const std::string& text) {
  if (text.empty()) return read_csv_header(path).size() - 1;
  if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isdigit(ch); })) {
    return static_cast<std::size_t>(std::stoull(text));
  }
  return text;
}

std::size_t resolved_step(const RunConfig& cfg, bool streamed) {
  return cfg.step.value_or(streamed ? 10 : 1);
}

TestRule parse_test_rule(const std::string& name) {
  if (name == "majority") return TestRule::kBatchMajority;
  if (name == "per-sample") return TestRule::kPerSample;
  throw Error("unknown test rule '" + name + "' (expected majority or per-sample)");
}

void check_common(const RunConfig& cfg) {
  if (cfg.replicates < 1) throw Error("replicates must be at least 1");
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) throw Error("threshold must lie in (0, 1]");
  if (cfg.n_x_max < 1) throw Error("n-x-max must be at least 1");
  if (cfg.step && *cfg.step < 1) throw Error("step must be at least 1");
}

// Runs fn(0..n-1) on up to `jobs` threads; rethrows the lowest-index failure.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, const Fn& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  std::vector<std::exception_ptr> errors(n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json metrics_json(const CurvePoint& p) {
  const CoverageMetrics& m = p.metrics;
  return {{"n_x", p.n_x},
          {"train_collision_incidence", m.train_collision_incidence},
          {"test_overlap_incidence", m.test_overlap_incidence},
          {"train_accuracy", m.theoretical_train_accuracy},
          {"test_accuracy", m.theoretical_test_accuracy},
          {"overlap_fraction", m.test_train_overlap_fraction},
          {"test_total", m.test_total},
          {"test_overlapping", m.test_overlapping},
          {"test_overlap_errors", m.test_overlap_errors}};
}

json optional_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

json estimate_json(const QubitEstimate& e) {
  return {{"threshold", e.threshold},
          {"covered", e.covered()},
          {"q_train", optional_json(e.q_train)},
          {"q_test", optional_json(e.q_test)},
          {"q_y", e.q_y},
          {"q_dataset", optional_json(e.q_dataset)}};
}

struct ReplicateResult {
  std::uint64_t seed = 0;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::vector<double> importances;
  std::vector<std::string> warnings;
  std::vector<CurvePoint> curve;
};

json replicate_json(std::size_t r, const ReplicateResult& res, const std::vector<double>& thresholds,
                    int num_classes) {
  json curve = json::array();
  for (const auto& p : res.curve) curve.push_back(metrics_json(p));
  json estimates = json::array();
  for (double t : thresholds) estimates.push_back(estimate_json(derive_estimate(res.curve, t, num_classes)));
  return {{"replicate", r},
          {"seed", res.seed},
          {"train_samples", res.train_samples},
          {"test_samples", res.test_samples},
          {"importances", res.importances},
          {"warnings", res.warnings},
          {"curve", std::move(curve)},
          {"estimates", std::move(estimates)}};
}

json aggregate_json(const json& replicates, const std::vector<double>& thresholds) {
  json out = json::array();
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    std::vector<double> values;
    for (const auto& rep : replicates) {
      const auto& q = rep.at("estimates").at(k).at("q_dataset");
      if (!q.is_null()) values.push_back(q.get<double>());
    }
    json mean = nullptr;
    json std_dev = nullptr;
    if (!values.empty()) {
      double sum = 0.0;
      for (double v : values) sum += v;
      const double m = sum / static_cast<double>(values.size());
      mean = m;
      if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - m) * (v - m);
        std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
      }
    }
    out.push_back({{"threshold", thresholds[k]},
                   {"replicates", replicates.size()},
                   {"covered", values.size()},
                   {"q_dataset", values},
                   {"mean_q_dataset", mean},
                   {"std_q_dataset", std_dev}});
  }
  return out;
}

json assemble_report(const RunConfig& cfg, bool streamed, const json& dataset,
                     std::vector<std::string> warnings, const std::vector<ReplicateResult>& results,
                     int num_classes) {
  const auto thresholds = report_thresholds(cfg.threshold);
  json replicates = json::array();
  for (std::size_t r = 0; r < results.size(); ++r) {
    replicates.push_back(replicate_json(r, results[r], thresholds, num_classes));
  }
  RunConfig echo = cfg;
  echo.step = resolved_step(cfg, streamed);
  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["tool_version"] = kToolVersion;
  report[kTimestampField] = utc_timestamp();
  report["command"] = cfg.command;
  report["streamed"] = streamed;
  report["config"] = config_to_json(echo);
  report["dataset"] = dataset;
  report["warnings"] = std::move(warnings);
  report["thresholds"] = thresholds;
  report["aggregate"] = aggregate_json(replicates, thresholds);
  report["replicates"] = std::move(replicates);
  return report;
}

json dataset_json(std::size_t samples, std::size_t features, const std::vector<std::string>& names) {
  return {{"samples", samples},
          {"features", features},
          {"classes", names.size()},
          {"label_mapping", names}};
}

// Relabels `other` so that class ids agree with `reference`, extending the
// name list with classes only `other` has.
void align_labels(Dataset& reference, Dataset& other) {
  std::unordered_map<std::string, int> ids;
  for (std::size_t k = 0; k < reference.class_names.size(); ++k) {
    ids.emplace(reference.class_names[k], static_cast<int>(k));
  }
  std::vector<int> remap(other.class_names.size());
  for (std::size_t k = 0; k < other.class_names.size(); ++k) {
    auto [it, inserted] =
        ids.try_emplace(other.class_names[k], static_cast<int>(reference.class_names.size()));
    if (inserted) reference.class_names.push_back(other.class_names[k]);
    remap[k] = it->second;
  }
  for (int& y : other.labels) y = remap[static_cast<std::size_t>(y)];
  reference.num_classes = static_cast<int>(reference.class_names.size());
  other.class_names = reference.class_names;
  other.num_classes = reference.num_classes;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace

std::vector<double> report_thresholds(double configured) {
  std::vector<double> t{0.99, 1.0, configured};
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  j["input"] = cfg.input.string();
  j["train"] = cfg.train.string();
  j["test"] = cfg.test.string();
  j["label_column"] = cfg.label_column;
  j["scheme"] = cfg.scheme;
  j["n_components"] = cfg.n_components;
  j["threshold"] = cfg.threshold;
  j["replicates"] = cfg.replicates;
  j["train_fraction"] = cfg.train_fraction;
  j["seed"] = cfg.seed;
  j["stratified"] = cfg.stratified;
  j["n_x_max"] = cfg.n_x_max;
  j["step"] = cfg.step ? json(*cfg.step) : json(nullptr);
  j["mi_bins"] = cfg.mi_bins;
  j["batch_size"] = cfg.batch_size ? json(*cfg.batch_size) : json(nullptr);
  j["work_dir"] = cfg.work_dir.string();
  j["reservoir_size"] = cfg.reservoir_size;
  j["weighted_mi"] = cfg.weighted_mi;
  j["test_rule"] = cfg.test_rule;
  j["synthetic_rows"] = cfg.synthetic_rows;
  j["synthetic_features"] = cfg.synthetic_features;
  j["synthetic_classes"] = cfg.synthetic_classes;
  j["synthetic_separation"] = cfg.synthetic_separation;
  j["n_x"] = cfg.n_x;
  j["model"] = cfg.model.string();
  j["model_out"] = cfg.model_out.string();
  j["layers"] = cfg.layers;
  j["sweeps"] = cfg.sweeps;
  j["uniform_weights"] = cfg.uniform_weights;
  j["init"] = cfg.init;
  j["max_qubits"] = cfg.max_qubits;
  j["trace"] = cfg.trace.string();
  j["output"] = cfg.output.string();
  j["curve_csv"] = cfg.curve_csv.string();
  return j;
}

// ---------------------------------------------------------------------------
// estimate

json run_estimate(const RunConfig& cfg) {
  check_common(cfg);
  const ReducerSpec spec{parse_scheme(cfg.scheme), cfg.n_components};
  std::vector<std::string> warnings;

  Dataset full;
  Dataset fixed_train;
  Dataset fixed_test;
  const bool split_input = !cfg.input.empty();
  std::size_t replicates = cfg.replicates;
  if (split_input) {
    full = load_csv(cfg.input, label_ref(cfg.input, cfg.label_column));
    if (const auto dup = count_conflicting_duplicates(full); dup > 0) {
      warnings.push_back(std::to_string(dup) + " duplicate feature rows carry conflicting labels");
    }
  } else if (!cfg.train.empty() && !cfg.test.empty()) {
    fixed_train = load_csv(cfg.train, label_ref(cfg.train, cfg.label_column));
    fixed_test = load_csv(cfg.test, label_ref(cfg.test, cfg.label_column));
    if (fixed_train.num_features() != fixed_test.num_features()) {
      throw DataError("train and test feature counts differ");
    }
    align_labels(fixed_train, fixed_test);
    if (replicates > 1) {
      warnings.push_back("explicit train/test files give a single replicate");
      replicates = 1;
    }
  } else {
    throw Error("estimate needs --input or both --train and --test");
  }
  const Dataset& reference = split_input ? full : fixed_train;
  const int num_classes = reference.num_classes;

  SweepOptions sweep;
  const auto thresholds = report_thresholds(cfg.threshold);
  sweep.threshold = thresholds.back();
  sweep.n_x_max = cfg.n_x_max;
  sweep.step = resolved_step(cfg, false);
  sweep.encoder.mi_bins = cfg.mi_bins;

  std::vector<ReplicateResult> results(replicates);
  parallel_for(replicates, cfg.jobs, [&](std::size_t r) {
    ReplicateResult& res = results[r];
    res.seed = cfg.seed + r;
    TrainTestSplit split;
    if (split_input) {
      split = split_train_test(full, {cfg.train_fraction, res.seed, cfg.stratified});
    } else {
      split.train = fixed_train;
      split.test = fixed_test;
    }
    res.warnings = split.warnings;
    res.train_samples = split.train.num_samples();
    res.test_samples = split.test.num_samples();
    const EncoderBasis basis = fit_encoder_basis(split.train, spec, sweep.encoder);
    res.warnings.insert(res.warnings.end(), basis.reducer.warnings.begin(),
                        basis.reducer.warnings.end());
    res.importances = basis.importances;
    const Matrix train_u =
        copula_values(basis.reducer, basis.mins, basis.maxs, basis.copula, split.train.features);
    const Matrix test_u =
        copula_values(basis.reducer, basis.mins, basis.maxs, basis.copula, split.test.features);
    res.curve = sweep_curve(train_u, split.train.labels, test_u, split.test.labels,
                            basis.importances, num_classes, sweep);
  });

  return assemble_report(
      cfg, false,
      dataset_json(split_input ? full.num_samples() : fixed_train.num_samples() + fixed_test.num_samples(),
                   reference.num_features(), reference.class_names),
      std::move(warnings), results, num_classes);
}

// ---------------------------------------------------------------------------
// stream-estimate

namespace {

// Byte offsets of the non-blank data lines of a CSV.
std::vector<std::streamoff> data_line_offsets(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<std::streamoff> offsets;
  for (;;) {
    const std::streamoff pos = in.tellg();
    if (!std::getline(in, line)) break;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    offsets.push_back(pos);
  }
  return offsets;
}

void write_rows(const std::filesystem::path& source, const std::vector<std::streamoff>& offsets,
                const std::vector<std::size_t>& rows, const std::filesystem::path& target) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw DataError("cannot open '" + source.string() + "'");
  std::ofstream out(target, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + target.string() + "'");
  std::string line;
  std::getline(in, line);
  out << line << '\n';
  for (std::size_t r : rows) {
    in.clear();
    in.seekg(offsets[r]);
    std::getline(in, line);
    out << line << '\n';
  }
  if (!out) throw Error("write failed for '" + target.string() + "'");
}

std::vector<int> scan_labels(RecordSource& source) {
  std::vector<int> labels;
  source.rewind();
  while (auto batch = source.next_batch()) {
    labels.insert(labels.end(), batch->labels.begin(), batch->labels.end());
  }
  source.rewind();
  return labels;
}

}  // namespace

json run_stream_estimate(const RunConfig& cfg) {
  check_common(cfg);
  if (!cfg.batch_size) throw Error("stream-estimate requires --batch-size");
  const std::size_t batch = *cfg.batch_size;
  if (batch < 1) throw Error("batch size must be at least 1");
  const ReducerSpec spec{parse_scheme(cfg.scheme), cfg.n_components};
  const TestRule rule = parse_test_rule(cfg.test_rule);
  const std::filesystem::path work_dir = cfg.work_dir.empty() ? "bitbit-work" : cfg.work_dir;
  std::filesystem::create_directories(work_dir);

  StreamSweepOptions options;
  const auto thresholds = report_thresholds(cfg.threshold);
  options.sweep.threshold = thresholds.back();
  options.sweep.n_x_max = cfg.n_x_max;
  options.sweep.step = resolved_step(cfg, true);
  options.stream.reservoir_size = cfg.reservoir_size;
  options.stream.weighted_mi = cfg.weighted_mi;
  options.stream.mi_bins = cfg.mi_bins;
  options.rule = rule;

  std::vector<std::string> warnings;
  std::size_t replicates = cfg.replicates;
  std::vector<ReplicateResult> results;
  json dataset;
  int num_classes = 0;

  auto run_one = [&](ReplicateResult& res, RecordSource& train, RecordSource& test,
                     const std::filesystem::path& dir) {
    StreamSweepOptions local = options;
    local.stream.reservoir_seed = res.seed;
    StreamConfig config{train, dir};
    EncoderBasis basis;
    res.curve = stream_sweep_curve(config, test, spec, num_classes, local, &basis);
    res.importances = basis.importances;
    res.warnings.insert(res.warnings.end(), basis.reducer.warnings.begin(),
                        basis.reducer.warnings.end());
  };

  if (cfg.synthetic_rows > 0) {
    if (replicates > 1) {
      warnings.push_back("a synthetic source gives a single replicate");
      replicates = 1;
    }
    num_classes = cfg.synthetic_classes;
    const std::size_t test_rows = std::max<std::size_t>(cfg.synthetic_rows / 4, 1);
    SyntheticSource train(cfg.synthetic_rows, cfg.synthetic_features, num_classes,
                          cfg.synthetic_separation, cfg.seed, batch);
    SyntheticSource test(test_rows, cfg.synthetic_features, num_classes, cfg.synthetic_separation,
                         cfg.seed + 1, batch);
    results.resize(1);
    results[0].seed = cfg.seed;
    results[0].train_samples = cfg.synthetic_rows;
    results[0].test_samples = test_rows;
    run_one(results[0], train, test, work_dir);
    std::vector<std::string> names;
    for (int k = 0; k < num_classes; ++k) names.push_back(std::to_string(k));
    dataset = dataset_json(cfg.synthetic_rows + test_rows, cfg.synthetic_features, names);
  } else if (!cfg.input.empty()) {
    const ColumnRef label = label_ref(cfg.input, cfg.label_column);
    auto labels = std::make_shared<LabelMap>();
    CsvSource scan(cfg.input, label, batch, labels);
    const std::vector<int> all_labels = scan_labels(scan);
    if (labels->size() < 2) throw DataError("fewer than 2 classes");
    num_classes = labels->size();
    const auto offsets = data_line_offsets(cfg.input);
    if (offsets.size() != all_labels.size()) throw DataError("could not index the rows of the input");
    dataset = dataset_json(all_labels.size(), scan.feature_names().size(), labels->names());

    results.resize(replicates);
    parallel_for(replicates, cfg.jobs, [&](std::size_t r) {
      ReplicateResult& res = results[r];
      res.seed = cfg.seed + r;
      const SplitIndices split =
          split_indices(all_labels, {cfg.train_fraction, res.seed, cfg.stratified});
      res.train_samples = split.train.size();
      res.test_samples = split.test.size();
      for (int k = 0; k < num_classes; ++k) {
        const auto missing = [&](const std::vector<std::size_t>& rows) {
          return std::none_of(rows.begin(), rows.end(),
                              [&](std::size_t i) { return all_labels[i] == k; });
        };
        if (missing(split.train)) res.warnings.push_back("class " + labels->names()[k] + " absent from train split");
        if (missing(split.test)) res.warnings.push_back("class " + labels->names()[k] + " absent from test split");
      }
      const auto dir = work_dir / ("replicate-" + std::to_string(r));
      std::filesystem::create_directories(dir);
      write_rows(cfg.input, offsets, split.train, dir / "train.csv");
      write_rows(cfg.input, offsets, split.test, dir / "test.csv");
      auto shared = std::make_shared<LabelMap>(*labels);
      CsvSource train(dir / "train.csv", label, batch, shared);
      CsvSource test(dir / "test.csv", label, batch, shared);
      run_one(res, train, test, dir);
    });
  } else if (!cfg.train.empty() && !cfg.test.empty()) {
    if (replicates > 1) {
      warnings.push_back("explicit train/test files give a single replicate");
      replicates = 1;
    }
    auto labels = std::make_shared<LabelMap>();
    CsvSource train(cfg.train, label_ref(cfg.train, cfg.label_column), batch, labels);
    CsvSource test(cfg.test, label_ref(cfg.test, cfg.label_column), batch, labels);
    results.resize(1);
    results[0].seed = cfg.seed;
    results[0].train_samples = scan_labels(train).size();
    results[0].test_samples = scan_labels(test).size();
    num_classes = labels->size();
    if (num_classes < 2) throw DataError("fewer than 2 classes");
    dataset = dataset_json(results[0].train_samples + results[0].test_samples,
                           train.feature_names().size(), labels->names());
    run_one(results[0], train, test, work_dir);
  } else {
    throw Error("stream-estimate needs --input, --train and --test, or --synthetic-rows");
  }

  json report = assemble_report(cfg, true, dataset, std::move(warnings), results, num_classes);
  write_text(work_dir / "report.json", report.dump(2) + "\n");
  return report;
}

int report_exit_code(const json& report) {
  for (const auto& agg : report.at("aggregate")) {
    if (agg.at("covered").get<std::size_t>() != agg.at("replicates").get<std::size_t>()) {
      return kExitUncovered;
    }
  }
  return kExitOk;
}

json strip_timestamp(const json& report) {
  json copy = report;
  copy.erase(kTimestampField);
  return copy;
}

void write_curve_csv(const json& report, std::ostream& out) {
  out << "replicate,N_x,train_acc,test_acc,overlap_fraction\n";
  for (const auto& rep : report.at("replicates")) {
    for (const auto& p : rep.at("curve")) {
      out << rep.at("replicate").get<std::size_t>() << ',' << p.at("n_x").get<std::size_t>() << ','
          << format_double(p.at("train_accuracy").get<double>()) << ','
          << format_double(p.at("test_accuracy").get<double>()) << ','
          << format_double(p.at("overlap_fraction").get<double>()) << '\n';
    }
  }
}

void emit_report(const RunConfig& cfg, const json& report, std::ostream& stdout_sink) {
  const std::string text = report.dump(2) + "\n";
  if (cfg.output.empty()) {
    stdout_sink << text;
  } else {
    write_text(cfg.output, text);
  }
  if (!cfg.curve_csv.empty()) {
    std::ostringstream csv;
    write_curve_csv(report, csv);
    write_text(cfg.curve_csv, csv.str());
  }
}

// ---------------------------------------------------------------------------
// encode

EncodeSummary run_encode(const RunConfig& cfg, std::ostream& stdout_sink) {
  if (cfg.input.empty()) throw Error("encode needs --input");
  EncoderModel model;
  if (!cfg.model.empty()) {
    model = load_model(cfg.model);
  } else {
    const auto& fit_path = cfg.train.empty() ? cfg.input : cfg.train;
    const Dataset data = load_csv(fit_path, label_ref(fit_path, cfg.label_column));
    model = fit_encoder(data, {parse_scheme(cfg.scheme), cfg.n_components}, cfg.n_x,
                        {cfg.mi_bins});
  }
  if (!cfg.model_out.empty()) persist_model(model, cfg.model_out);

  CsvSource source(cfg.input, label_ref(cfg.input, cfg.label_column), cfg.batch_size.value_or(10000));
  EncodeSummary summary;
  summary.width = model.width();
  if (cfg.output.empty()) {
    summary.records = stream_encode(model, source, stdout_sink);
  } else {
    if (cfg.output.has_parent_path()) std::filesystem::create_directories(cfg.output.parent_path());
    std::ofstream out(cfg.output, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + cfg.output.string() + "'");
    summary.records = stream_encode(model, source, out);
  }
  return summary;
}

// ---------------------------------------------------------------------------
// train

TrainSummary run_train(const RunConfig& cfg, std::ostream& stdout_sink) {
  if (cfg.input.empty()) throw Error("train needs --input");
  if (cfg.sweeps < 1) throw Error("sweeps must be at least 1");
  const Dataset data = load_csv(cfg.input, label_ref(cfg.input, cfg.label_column));
  const TrainTestSplit split = split_train_test(data, {cfg.train_fraction, cfg.seed, cfg.stratified});
  const EncoderModel encoder = fit_encoder(split.train, {parse_scheme(cfg.scheme), cfg.n_components},
                                           cfg.n_x, {cfg.mi_bins});
  const auto train_codes = encode_samples(encoder, split.train.features);
  const auto test_codes = encode_samples(encoder, split.test.features);
  const int c = data.num_classes;
  const BitstringTable table = build_table(train_codes, split.train.labels, c);
  const CoverageMetrics ceiling = make_metrics(train_collision_incidence(table),
                                               test_overlap_incidence(table, test_codes, split.test.labels));

  TrainSummary summary;
  summary.n_x = cfg.n_x;
  summary.n_y = static_cast<std::size_t>(compute_q_y(c));
  summary.theoretical_train_accuracy = ceiling.theoretical_train_accuracy;
  summary.theoretical_test_accuracy = ceiling.theoretical_test_accuracy;

  QuantumModel qm = QuantumModel::hardware_efficient(summary.n_x, summary.n_y, cfg.layers, cfg.max_qubits);
  if (cfg.init == "random") {
    randomize_parameters(qm, cfg.seed);
  } else if (cfg.init != "zero") {
    throw Error("unknown init '" + cfg.init + "' (expected random or zero)");
  }
  const TrainingBatch batch = make_training_batch(table, cfg.uniform_weights);

  auto accuracies = [&](double loss, std::size_t sweep) {
    std::unordered_map<Bitstring, int> predictions;
    auto predicted = [&](const Bitstring& z) {
      auto it = predictions.find(z);
      if (it == predictions.end()) it = predictions.emplace(z, predict(qm, z)).first;
      return it->second;
    };
    std::uint64_t train_hits = 0;
    for (const auto& [z, counts] : table.entries()) {
      const int k = predicted(z);
      if (k < c) train_hits += counts[static_cast<std::size_t>(k)];
    }
    std::size_t test_hits = 0;
    for (std::size_t i = 0; i < test_codes.size(); ++i) {
      if (predicted(test_codes[i]) == split.test.labels[i]) ++test_hits;
    }
    summary.trace.push_back({sweep, loss,
                             static_cast<double>(train_hits) / static_cast<double>(table.total()),
                             static_cast<double>(test_hits) / static_cast<double>(test_codes.size())});
  };

  accuracies(evaluate_loss(qm, batch), 0);
  train_sweeps(qm, batch, cfg.sweeps, [&](std::size_t sweep, double loss) { accuracies(loss, sweep); });

  if (cfg.trace.empty()) {
    write_trace_csv(summary, stdout_sink);
  } else {
    std::ostringstream csv;
    write_trace_csv(summary, csv);
    write_text(cfg.trace, csv.str());
  }
  if (!cfg.model_out.empty()) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["label_mapping"] = data.class_names;
    j["encoder"] = to_json(encoder);
    j["circuit"] = to_json(qm);
    write_text(cfg.model_out, j.dump() + "\n");
  }
  return summary;
}

void write_trace_csv(const TrainSummary& summary, std::ostream& out) {
  out << "# theoretical_train_accuracy=" << format_double(summary.theoretical_train_accuracy)
      << " theoretical_test_accuracy=" << format_double(summary.theoretical_test_accuracy)
      << " n_x=" << summary.n_x << " n_y=" << summary.n_y << '\n';
  out << "sweep,loss,train_acc,test_acc\n";
  for (const auto& row : summary.trace) {
    out << row.sweep << ',' << format_double(row.loss) << ',' << format_double(row.train_accuracy)
        << ',' << format_double(row.test_accuracy) << '\n';
  }
}

// ---------------------------------------------------------------------------
// report

void run_report(const std::filesystem::path& path, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  json report;
  try {
    report = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  const auto version = report.value("schema_version", std::string());
  if (version != kReportSchemaVersion) {
    throw VersionError("report schema version '" + version + "' is not supported (expected " +
                       kReportSchemaVersion + ")");
  }
  const auto& ds = report.at("dataset");
  out << "command   " << report.at("command").get<std::string>()
      << (report.at("streamed").get<bool>() ? " (streamed)" : "") << '\n';
  out << "dataset   " << ds.at("samples") << " samples, " << ds.at("features") << " features, "
      << ds.at("classes") << " classes\n";
  out << "generated " << report.value(kTimestampField, std::string("-")) << "\n\n";

  const auto show = [](const json& v) {
    return v.is_null() ? std::string("-") : format_double(v.get<double>());
  };
  out << std::left << std::setw(11) << "threshold" << std::setw(9) << "covered" << std::setw(16)
      << "mean Q_dataset" << "std\n";
  for (const auto& agg : report.at("aggregate")) {
    const std::string covered = agg.at("covered").dump() + "/" + agg.at("replicates").dump();
    out << std::setw(11) << show(agg.at("threshold")) << std::setw(9) << covered << std::setw(16)
        << show(agg.at("mean_q_dataset")) << show(agg.at("std_q_dataset")) << '\n';
  }
  out << "\nreplicate";
  for (const auto& t : report.at("thresholds")) out << "  Q(" << format_double(t.get<double>()) << ')';
  out << '\n';
  for (const auto& rep : report.at("replicates")) {
    out << rep.at("replicate");
    for (const auto& est : rep.at("estimates")) {
      const auto& q = est.at("q_dataset");
      out << "  " << (q.is_null() ? std::string("uncovered") : std::to_string(q.get<std::size_t>()));
    }
    out << '\n';
  }
  for (const auto& w : report.at("warnings")) out << "warning: " << w.get<std::string>() << '\n';
}

}  // namespace bitbit::cli
