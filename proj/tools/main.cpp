#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bitbit/error.hpp"
#include "commands.hpp"

namespace {

using bitbit::cli::RunConfig;

void add_input_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--input", cfg.input, "CSV with a header row");
  cmd->add_option("--label-column", cfg.label_column,
                  "Label column name or zero-based index (default: last column)");
  cmd->add_option("--scheme", cfg.scheme, "Reduction scheme: none, pca or lsa")
      ->capture_default_str();
  cmd->add_option("--n-components", cfg.n_components, "Reduced dimension (0 keeps every feature)")
      ->capture_default_str();
  cmd->add_option("--mi-bins", cfg.mi_bins, "Histogram bins for MI (0 picks from the sample count)")
      ->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Seed for splits and sampling")->capture_default_str();
  cmd->add_option("--train-fraction", cfg.train_fraction, "Training share of each split")
      ->capture_default_str();
  cmd->add_flag("--stratified", cfg.stratified, "Split each class separately");
}

void add_sweep_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--train", cfg.train, "Fixed training CSV (with --test)");
  cmd->add_option("--test", cfg.test, "Fixed test CSV (with --train)");
  cmd->add_option("--threshold", cfg.threshold, "Target theoretical accuracy")->capture_default_str();
  cmd->add_option("--replicates", cfg.replicates, "Number of seeded splits")->capture_default_str();
  cmd->add_option("--n-x-max", cfg.n_x_max, "Largest data register to try")->capture_default_str();
  cmd->add_option("--step", cfg.step, "Sweep increment (default 1, or 10 when streaming)");
  cmd->add_option("--jobs", cfg.jobs, "Replicates run in parallel (0 = all cores)")
      ->capture_default_str();
  cmd->add_option("--output", cfg.output, "Report path (default: stdout)");
  cmd->add_option("--curve-csv", cfg.curve_csv, "Write the accuracy curves as CSV");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Qubit resource estimation for bit-bit encoded datasets"};
  app.set_version_flag("--version", bitbit::cli::kToolVersion);
  app.require_subcommand(1);

  RunConfig cfg;
  std::string report_path;
  bool report_json = false;

  auto* estimate = app.add_subcommand("estimate", "Sweep N_x in memory and report Q_dataset");
  add_input_options(estimate, cfg);
  add_sweep_options(estimate, cfg);

  auto* stream = app.add_subcommand("stream-estimate", "Batched three-pass sweep");
  add_input_options(stream, cfg);
  add_sweep_options(stream, cfg);
  stream->add_option("--batch-size", cfg.batch_size, "Rows per batch")->required();
  stream->add_option("--work-dir", cfg.work_dir, "Directory for models and encoded files");
  stream->add_option("--reservoir-size", cfg.reservoir_size, "Rows sampled to fit the copula")
      ->capture_default_str();
  stream->add_flag("--weighted-mi", cfg.weighted_mi, "Weight batch MI scores by batch rows");
  stream->add_option("--test-rule", cfg.test_rule, "Test incidence rule: majority or per-sample")
      ->capture_default_str();
  stream->add_option("--synthetic-rows", cfg.synthetic_rows, "Use a generated source of this many rows");
  stream->add_option("--synthetic-features", cfg.synthetic_features)->capture_default_str();
  stream->add_option("--synthetic-classes", cfg.synthetic_classes)->capture_default_str();
  stream->add_option("--synthetic-separation", cfg.synthetic_separation)->capture_default_str();

  auto* encode = app.add_subcommand("encode", "Encode a CSV into bitstring records");
  add_input_options(encode, cfg);
  encode->add_option("--train", cfg.train, "CSV to fit the encoder on (default: --input)");
  encode->add_option("--n-x", cfg.n_x, "Data register width")->capture_default_str();
  encode->add_option("--model", cfg.model, "Reuse a saved encoder model");
  encode->add_option("--model-out", cfg.model_out, "Save the encoder model");
  encode->add_option("--batch-size", cfg.batch_size, "Rows read per batch");
  encode->add_option("--output", cfg.output, "Encoded file (default: stdout)");

  auto* train = app.add_subcommand("train", "Train a statevector classifier on the encoding");
  add_input_options(train, cfg);
  train->add_option("--n-x", cfg.n_x, "Data register width")->capture_default_str();
  train->add_option("--layers", cfg.layers, "Ansatz layers")->capture_default_str();
  train->add_option("--sweeps", cfg.sweeps, "Coordinate sweeps")->capture_default_str();
  train->add_flag("--uniform-weights", cfg.uniform_weights, "Weight unique bitstrings equally");
  train->add_option("--init", cfg.init, "Initial parameters: random or zero")->capture_default_str();
  train->add_option("--max-qubits", cfg.max_qubits, "Simulator register cap")->capture_default_str();
  train->add_option("--trace", cfg.trace, "Training trace CSV (default: stdout)");
  train->add_option("--model-out", cfg.model_out, "Save encoder and circuit parameters");

  auto* report = app.add_subcommand("report", "Summarise a JSON report");
  report->add_option("path", report_path, "Report file")->required();
  report->add_flag("--json", report_json, "Print the indented JSON instead of a summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return bitbit::cli::kExitError;
  }

  try {
    if (estimate->parsed() || stream->parsed()) {
      cfg.command = estimate->parsed() ? "estimate" : "stream-estimate";
      const auto result = estimate->parsed() ? bitbit::cli::run_estimate(cfg)
                                             : bitbit::cli::run_stream_estimate(cfg);
      bitbit::cli::emit_report(cfg, result, std::cout);
      const int code = bitbit::cli::report_exit_code(result);
      if (code == bitbit::cli::kExitUncovered) {
        std::cerr << "warning: some replicates were not covered by N_x = " << cfg.n_x_max << '\n';
      }
      return code;
    }
    if (encode->parsed()) {
      cfg.command = "encode";
      const auto summary = bitbit::cli::run_encode(cfg, std::cout);
      std::cerr << "encoded " << summary.records << " records at width " << summary.width << '\n';
      return bitbit::cli::kExitOk;
    }
    if (train->parsed()) {
      cfg.command = "train";
      bitbit::cli::run_train(cfg, std::cout);
      return bitbit::cli::kExitOk;
    }
    if (report->parsed()) {
      if (report_json) {
        std::ifstream in(report_path);
        if (!in) throw bitbit::Error("cannot open '" + report_path + "'");
        std::cout << nlohmann::json::parse(in).dump(2) << '\n';
      } else {
        bitbit::cli::run_report(report_path, std::cout);
      }
      return bitbit::cli::kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bitbit::cli::kExitError;
  }
  return bitbit::cli::kExitError;
}
