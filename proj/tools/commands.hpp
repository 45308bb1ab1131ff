#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bitbit::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchemaVersion = "1";
inline constexpr const char* kTimestampField = "generated_at";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUncovered = 2;

struct RunConfig {
  std::string command;

  // Inputs: either one CSV that is split per replicate, or explicit halves.
  std::filesystem::path input;
  std::filesystem::path train;
  std::filesystem::path test;
  // Header name or zero-based index; empty selects the last column.
  std::string label_column;

  std::string scheme = "pca";
  std::size_t n_components = 0;
  double threshold = 1.0;
  std::size_t replicates = 10;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = false;
  std::size_t n_x_max = 128;
  // Defaults to 1 in memory and 10 when streaming.
  std::optional<std::size_t> step;
  std::size_t mi_bins = 0;
  // 0 means std::thread::hardware_concurrency().
  std::size_t jobs = 0;

  // Streaming.
  std::optional<std::size_t> batch_size;
  std::filesystem::path work_dir;
  std::size_t reservoir_size = 100000;
  bool weighted_mi = false;
  std::string test_rule = "majority";
  // Synthetic Gaussian-blob source instead of CSV input (streaming only).
  std::size_t synthetic_rows = 0;
  std::size_t synthetic_features = 8;
  int synthetic_classes = 2;
  double synthetic_separation = 1.0;

  // Encoding and training.
  std::size_t n_x = 8;
  std::filesystem::path model;      // existing encoder model to reuse
  std::filesystem::path model_out;  // where to write the fitted model
  std::size_t layers = 2;
  std::size_t sweeps = 10;
  bool uniform_weights = false;
  // "random" (seeded) or "zero".
  std::string init = "random";
  std::size_t max_qubits = 20;
  std::filesystem::path trace;

  std::filesystem::path output;
  std::filesystem::path curve_csv;
};

nlohmann::json config_to_json(const RunConfig& cfg);

// Thresholds reported for a config: 0.99, 1.0 and the configured one, sorted.
std::vector<double> report_thresholds(double configured);

// In-memory sweep over `replicates` seeded splits.
nlohmann::json run_estimate(const RunConfig& cfg);

// Three-pass streaming sweep; artifacts go to cfg.work_dir.
nlohmann::json run_stream_estimate(const RunConfig& cfg);

// 0 when every replicate reached every reported threshold, 2 otherwise.
int report_exit_code(const nlohmann::json& report);

// Copy of the report without the timestamp field.
nlohmann::json strip_timestamp(const nlohmann::json& report);

// Long-format curve table: replicate,N_x,train_acc,test_acc,overlap_fraction
void write_curve_csv(const nlohmann::json& report, std::ostream& out);

// Writes the report (and curve CSV when configured). Stdout when no output.
void emit_report(const RunConfig& cfg, const nlohmann::json& report, std::ostream& stdout_sink);

struct EncodeSummary {
  std::size_t records = 0;
  std::size_t width = 0;
};

// Fits (or loads) an encoder model and writes the encoded records.
EncodeSummary run_encode(const RunConfig& cfg, std::ostream& stdout_sink);

struct TraceRow {
  std::size_t sweep = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainSummary {
  double theoretical_train_accuracy = 0.0;
  double theoretical_test_accuracy = 0.0;
  std::size_t n_x = 0;
  std::size_t n_y = 0;
  std::vector<TraceRow> trace;
};

// Encodes at cfg.n_x, resolves collisions, trains the ansatz and writes the
// trace CSV and model JSON.
TrainSummary run_train(const RunConfig& cfg, std::ostream& stdout_sink);
void write_trace_csv(const TrainSummary& summary, std::ostream& out);

// Human-readable summary of a report file.
void run_report(const std::filesystem::path& path, std::ostream& out);

}  // namespace bitbit::cli
