// Copyright 2026 The e3p Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "e3p/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "e3p/error.hpp"
#include "e3p/measurement.hpp"
#include "e3p/metrics.hpp"
#include "e3p/registry.hpp"
#include "e3p/report.hpp"
#include "e3p/screening.hpp"
#include "e3p/session_config.hpp"
#include "e3p/text.hpp"

namespace e3p::cli {

namespace {

/// Raised for problems the user fixes by changing the invocation.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::malformed_record:
    case ErrorKind::duplicate_name:
    case ErrorKind::domain:
    case ErrorKind::no_candidates:
    case ErrorKind::configuration:
    case ErrorKind::unsupported_format:
      return kUsage;
    default:
      return kRuntimeFailure;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& bytes, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << bytes;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path));
  }
  file << bytes;
}

struct ScreenArgs {
  std::string registry;
  ThresholdPolicy policy;
  bool pareto = false;
  std::string format = "markdown";
  std::string output;
};

struct MeasureArgs {
  std::string config;
  std::string source;
  std::string telemetry_command;
  std::string log;
  std::string log_format;
  std::optional<int> interval_ms;
  std::string rails;
  std::optional<int> trials;
  std::string window;
  std::optional<int> cooldown_ms;
  std::optional<int> idle_ms;
  std::optional<int> timeout_ms;
  std::string model, device, dataset;
  std::string registry;
  std::string output;
  std::string format = "json";
};

struct ReplayArgs {
  std::string telemetry;
  std::string log_format;
  int interval_ms = 1000;
  std::string windows;
  std::string rails;
  std::string model, device, dataset;
  std::string registry;
  std::string output;
  std::string format = "json";
};

struct RankArgs {
  std::vector<std::string> inputs;
  std::vector<std::string> presets;
  std::string sort;
  std::string title;
  std::string registry;
  std::string gap;
  std::size_t top_k = 3;
  std::string format = "markdown";
  std::string output;
};

std::optional<double> registry_accuracy(const std::string& registry_path, const std::string& model) {
  if (registry_path.empty()) {
    return std::nullopt;
  }
  const auto registry = load_registry(std::filesystem::path(registry_path));
  const auto card = lookup(registry, model);
  if (!card) {
    spdlog::warn("model '{}' not found in registry '{}'", model, registry_path);
    return std::nullopt;
  }
  return card->top1_acc_pct;
}

RailSelection default_rails(LogFormat format) {
  switch (format) {
    case LogFormat::tegrastats: return RailSelection::tx2_compute();
    case LogFormat::nvidia_smi: return RailSelection::gpu();
    case LogFormat::normalized_csv: break;
  }
  throw UsageError("normalized telemetry needs an explicit --rails selection");
}

std::string report_summary_markdown(const MeasurementReport& report) {
  ScoreInput input = to_score_input(report);
  std::vector<SamParams> presets = {SamParams::sam5(), SamParams::sam1()};
  const std::vector<ScoreInput> inputs = {input};
  auto rows = score_rows(std::span<const ScoreInput>(inputs), presets);
  RankedTable table{report.model_name, SortKey::energy(), {"SAM5", "SAM1"}, std::move(rows),
                    {{"device", report.device_label},
                     {"dataset", report.dataset_label},
                     {"rails", report.rail_selection},
                     {"window", report.window_mode},
                     {"trials", fmt::format("{} ({} failed)", report.trials.size(), report.failed_trials.size())}}};
  return emit(table, OutputFormat::markdown);
}

int cmd_screen(const ScreenArgs& args, std::ostream& out) {
  const auto format = args.format;
  if (format != "markdown" && format != "json" && format != "csv" && format != "plotdata") {
    throw Error(ErrorKind::unsupported_format, fmt::format("unsupported output format '{}'", format));
  }
  args.policy.validate();
  const auto registry = load_registry(std::filesystem::path(args.registry));
  const auto set = screen(registry, args.policy, args.pareto);
  std::string bytes;
  if (format == "json") {
    bytes = to_json(set);
  } else if (format == "csv") {
    bytes = to_csv(set);
  } else if (format == "plotdata") {
    bytes = to_plotdata(set);
  } else {
    bytes = to_markdown(set);
  }
  write_output(args.output, bytes, out);
  return kSuccess;
}

int cmd_measure(const MeasureArgs& args, const std::vector<std::string>& workload_argv, bool saw_separator,
                std::ostream& out, std::ostream& err) {
  SessionConfig config;
  if (!args.config.empty()) {
    config = load_session_config(args.config);
  }
  if (args.trials) config.trials = *args.trials;
  if (config.trials && *config.trials < 1) {
    throw UsageError(fmt::format("--trials must be at least 1, got {}", *config.trials));
  }
  if (saw_separator) {
    if (workload_argv.empty()) throw UsageError("no workload command after '--'");
    config.command = workload_argv;
  }
  if (!config.command) {
    throw UsageError("missing workload: pass it after '--' (e3p measure [options] -- <command> ...)");
  }
  if (args.format != "json" && args.format != "markdown") {
    throw Error(ErrorKind::unsupported_format, fmt::format("measure supports json or markdown, not '{}'", args.format));
  }

  if (!args.source.empty()) {
    const auto kind = parse_source_kind(args.source);
    if (!kind) throw UsageError(fmt::format("unknown telemetry source '{}'", args.source));
    config.telemetry = kind;
  }
  if (!args.telemetry_command.empty()) config.telemetry_command = text::split_whitespace(args.telemetry_command);
  if (!args.log.empty()) config.log = args.log;
  if (!args.log_format.empty()) {
    const auto f = parse_log_format(args.log_format);
    if (!f) throw UsageError(fmt::format("unknown log format '{}'", args.log_format));
    config.log_format = f;
  }
  if (args.interval_ms) config.interval_ms = *args.interval_ms;
  if (!args.rails.empty()) config.rails = RailSelection::parse(args.rails);
  if (!args.window.empty()) {
    const auto w = parse_window_mode(args.window);
    if (!w) throw UsageError(fmt::format("--window must be handshake or process, got '{}'", args.window));
    config.window = w;
  }
  if (args.cooldown_ms) config.cooldown_ms = *args.cooldown_ms;
  if (args.idle_ms) config.idle_ms = *args.idle_ms;
  if (args.timeout_ms) config.timeout_ms = *args.timeout_ms;
  if (!args.model.empty()) config.model = args.model;
  if (!args.device.empty()) config.device = args.device;
  if (!args.dataset.empty()) config.dataset = args.dataset;
  if (!args.registry.empty()) config.registry = args.registry;
  if (!args.output.empty()) config.output = args.output;

  TelemetrySource source;
  source.kind = config.telemetry.value_or(TelemetrySource::Kind::tegrastats);
  source.sample_interval_ms = config.interval_ms.value_or(source.kind == TelemetrySource::Kind::recorded_log ? 1000 : 100);
  if (config.telemetry_command) source.command = *config.telemetry_command;
  if (config.log) source.path = *config.log;
  source.format = config.log_format;
  source.validate();
  const auto selection = config.rails ? *config.rails : default_rails(source.line_format());

  WorkloadSpec workload;
  workload.command = *config.command;
  workload.window = config.window.value_or(WindowMode::handshake);
  if (config.timeout_ms) workload.timeout = std::chrono::milliseconds(*config.timeout_ms);

  SessionOptions options;
  options.trials = config.trials.value_or(3);
  options.cooldown = std::chrono::milliseconds(config.cooldown_ms.value_or(0));
  options.labels = {config.model.value_or(workload.command.front()), config.device.value_or(""),
                    config.dataset.value_or("")};
  if (config.registry) {
    options.registry_acc_pct = registry_accuracy(config.registry->string(), options.labels.model);
  }

  std::optional<double> idle;
  if (config.idle_ms && *config.idle_ms > 0) {
    idle = calibrate_idle(source, selection, *config.idle_ms);
  }

  const auto stamp = [](MeasurementReport& report) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    report.metadata["generated_at"] = buf;
  };
  const std::string output = config.output ? config.output->string() : std::string();

  MeasurementReport report;
  try {
    report = run_session(workload, source, selection, options);
  } catch (const SessionError& e) {
    auto partial = e.partial();
    partial.idle_power_mw = idle;
    stamp(partial);
    if (!output.empty()) {
      write_output(output, to_json(partial), out);
      err << "partial report written to " << output << '\n';
    }
    throw;
  }
  report.idle_power_mw = idle;
  stamp(report);
  if (report.degraded) {
    err << fmt::format("warning: {} of {} trials failed; means cover the rest\n", report.failed_trials.size(),
                       report.trials.size());
  }

  if (args.format == "markdown") {
    if (!output.empty()) write_output(output, to_json(report), out);
    out << report_summary_markdown(report);
  } else {
    write_output(output, to_json(report), out);
  }
  return kSuccess;
}

int cmd_replay(const ReplayArgs& args, std::ostream& out) {
  if (args.format != "json" && args.format != "markdown") {
    throw Error(ErrorKind::unsupported_format, fmt::format("replay supports json or markdown, not '{}'", args.format));
  }
  const auto plan = load_replay_plan(args.windows);
  std::optional<LogFormat> format;
  if (!args.log_format.empty()) {
    format = parse_log_format(args.log_format);
    if (!format) throw UsageError(fmt::format("unknown log format '{}'", args.log_format));
  }

  std::optional<RailSelection> selection;
  if (!args.rails.empty()) {
    selection = RailSelection::parse(args.rails);
  } else if (plan.selection) {
    selection = plan.selection;
  } else {
    TelemetrySource probe;
    probe.kind = TelemetrySource::Kind::recorded_log;
    probe.path = args.telemetry.empty() ? plan.trials.front().telemetry : std::filesystem::path(args.telemetry);
    probe.format = format;
    selection = default_rails(probe.line_format());
  }

  SessionOptions options;
  options.labels = {args.model, args.device, args.dataset};
  const auto model = args.model.empty() ? plan.labels.model : args.model;
  options.registry_acc_pct = registry_accuracy(args.registry, model);
  options.trials = static_cast<int>(plan.trials.size());

  const auto report = replay_session(plan, args.telemetry, format, args.interval_ms, *selection, options);
  if (args.format == "markdown") {
    if (!args.output.empty()) write_output(args.output, to_json(report), out);
    out << report_summary_markdown(report);
  } else {
    write_output(args.output, to_json(report), out);
  }
  return kSuccess;
}

std::vector<ScoreInput> load_inputs(const std::vector<std::string>& paths) {
  std::vector<ScoreInput> inputs;
  for (const auto& path : paths) {
    if (std::filesystem::path(path).extension() == ".csv") {
      std::ifstream in(path);
      if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
      auto rows = load_score_inputs_csv(in, path);
      inputs.insert(inputs.end(), rows.begin(), rows.end());
    } else {
      for (const auto& report : reports_from_json(read_file(path), path)) {
        inputs.push_back(to_score_input(report));
      }
    }
  }
  return inputs;
}

int cmd_rank(const RankArgs& args, bool with_gap, std::ostream& out, std::ostream& err) {
  if (args.inputs.empty()) {
    throw UsageError("no input files (pass --input <report.json|summary.csv>)");
  }
  if (with_gap && args.gap.empty()) {
    throw UsageError("report needs --gap <registry> to compare against");
  }
  const auto format = parse_output_format(args.format);

  std::vector<SamParams> presets;
  for (const auto& p : args.presets.empty() ? std::vector<std::string>{"sam5", "sam1"} : args.presets) {
    presets.push_back(SamParams::parse(p));
  }
  const auto key = args.sort.empty() ? SortKey::sam_preset(presets.front().name) : SortKey::parse(args.sort);

  auto inputs = load_inputs(args.inputs);
  const std::string registry_path = !args.registry.empty() ? args.registry : args.gap;
  std::optional<Registry> registry;
  if (!registry_path.empty()) {
    registry = load_registry(std::filesystem::path(registry_path));
    for (auto& in : inputs) {
      if (const auto card = lookup(*registry, in.model_name)) {
        in.net_score = net_score(card->top1_acc_pct, card->params_m, card->macs_g);
      }
    }
  }

  auto rows = score_rows(std::span<const ScoreInput>(inputs), presets);
  std::vector<ScoreRow> valid;
  for (auto& r : rows) {
    if (r.valid()) {
      valid.push_back(std::move(r));
    } else {
      err << fmt::format("warning: skipping '{}': {}\n", r.model_name, *r.error);
    }
  }
  std::vector<std::string> columns;
  for (const auto& p : presets) columns.push_back(p.name);
  std::map<std::string, std::string> metadata{{"sort", key.label()}};
  const auto table = rank(std::move(valid), key, columns, args.title, metadata);

  if (!with_gap) {
    write_output(args.output, emit(table, format), out);
    return kSuccess;
  }

  const auto agnostic = screen(*registry, ThresholdPolicy{}, false);
  const auto gap = gap_report(agnostic, table, args.top_k);
  std::string bytes;
  if (format == OutputFormat::json) {
    auto doc = nlohmann::ordered_json::object();
    doc["table"] = nlohmann::ordered_json::parse(emit(table, format));
    doc["gap"] = nlohmann::ordered_json::parse(emit(gap, format));
    bytes = doc.dump(2) + "\n";
  } else if (format == OutputFormat::markdown) {
    bytes = emit(table, format) + "\n" + emit(gap, format);
  } else {
    bytes = emit(gap, format);
  }
  write_output(args.output, bytes, out);
  return kSuccess;
}

}  // namespace

void configure_logging_from_env() {
  auto logger = spdlog::stderr_color_mt("e3p");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("E3P_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> own_args;
  std::vector<std::string> workload_argv;
  bool saw_separator = false;
  for (const auto& a : args) {
    if (!saw_separator && a == "--") {
      saw_separator = true;
    } else if (saw_separator) {
      workload_argv.push_back(a);
    } else {
      own_args.push_back(a);
    }
  }

  CLI::App app{"Two-stage energy-efficiency benchmarking: screen, measure, replay, rank, report", "e3p"};
  app.require_subcommand(1);

  ScreenArgs screen_args;
  auto* screen_cmd = app.add_subcommand("screen", "Threshold/Pareto filter a registry and rank it by NetScore");
  screen_cmd->add_option("--registry", screen_args.registry, "Model registry (.csv or .json)")->required();
  screen_cmd->add_option("--min-acc", screen_args.policy.min_acc_pct, "Minimum top-1 accuracy in percent (inclusive)");
  screen_cmd->add_option("--max-params", screen_args.policy.max_params_m, "Parameter bound in millions (exclusive)");
  screen_cmd->add_option("--max-macs", screen_args.policy.max_macs_g, "MACs bound in billions (exclusive)");
  screen_cmd->add_flag("--pareto", screen_args.pareto, "Drop Pareto-dominated candidates");
  screen_cmd->add_option("--format", screen_args.format, "markdown | json | csv | plotdata");
  screen_cmd->add_option("-o,--output", screen_args.output, "Write to a file instead of stdout");

  MeasureArgs measure_args;
  auto* measure_cmd = app.add_subcommand("measure", "Run a workload under live telemetry: e3p measure [options] -- cmd ...");
  measure_cmd->add_option("--config", measure_args.config, "Session config file (key = value)");
  measure_cmd->add_option("--source", measure_args.source, "tegrastats | nvidia-smi | recorded");
  measure_cmd->add_option("--telemetry-command", measure_args.telemetry_command, "Override the telemetry tool invocation");
  measure_cmd->add_option("--log", measure_args.log, "Recorded telemetry log (source = recorded)");
  measure_cmd->add_option("--log-format", measure_args.log_format, "tegrastats | nvidia-smi | normalized");
  measure_cmd->add_option("--interval", measure_args.interval_ms, "Sample interval in ms (>= 50)");
  measure_cmd->add_option("--rails", measure_args.rails, "single:NAME | total:NAME | sum:A,B,...");
  measure_cmd->add_option("--trials", measure_args.trials, "Number of trials (default 3)");
  measure_cmd->add_option("--window", measure_args.window, "handshake | process");
  measure_cmd->add_option("--cooldown-ms", measure_args.cooldown_ms, "Pause between trials");
  measure_cmd->add_option("--idle-ms", measure_args.idle_ms, "Idle power calibration before the session");
  measure_cmd->add_option("--timeout-ms", measure_args.timeout_ms, "Per-trial workload timeout");
  measure_cmd->add_option("--model", measure_args.model, "Model label");
  measure_cmd->add_option("--device", measure_args.device, "Device label");
  measure_cmd->add_option("--dataset", measure_args.dataset, "Dataset label");
  measure_cmd->add_option("--registry", measure_args.registry, "Registry for the accuracy fallback");
  measure_cmd->add_option("-o,--output", measure_args.output, "Report JSON path (stdout if omitted)");
  measure_cmd->add_option("--format", measure_args.format, "json | markdown");

  ReplayArgs replay_args;
  auto* replay_cmd = app.add_subcommand("replay", "Rebuild a measurement report from recorded telemetry");
  replay_cmd->add_option("--telemetry", replay_args.telemetry, "Default telemetry log for all trials");
  replay_cmd->add_option("--log-format", replay_args.log_format, "tegrastats | nvidia-smi | normalized");
  replay_cmd->add_option("--interval", replay_args.interval_ms, "Sample interval for raw logs in ms");
  replay_cmd->add_option("--windows", replay_args.windows, "Trial window JSON")->required();
  replay_cmd->add_option("--rails", replay_args.rails, "single:NAME | total:NAME | sum:A,B,...");
  replay_cmd->add_option("--model", replay_args.model, "Model label");
  replay_cmd->add_option("--device", replay_args.device, "Device label");
  replay_cmd->add_option("--dataset", replay_args.dataset, "Dataset label");
  replay_cmd->add_option("--registry", replay_args.registry, "Registry for the accuracy fallback");
  replay_cmd->add_option("-o,--output", replay_args.output, "Report JSON path (stdout if omitted)");
  replay_cmd->add_option("--format", replay_args.format, "json | markdown");

  RankArgs rank_args;
  const auto add_rank_options = [&](CLI::App* cmd) {
    cmd->add_option("-i,--input", rank_args.inputs, "Report JSON or summary CSV (repeatable)");
    cmd->add_option("--preset", rank_args.presets, "SAM preset, samK means a = b = K (repeatable)");
    cmd->add_option("--sort", rank_args.sort, "samK | net_score | energy | time (default: first preset)");
    cmd->add_option("--title", rank_args.title, "Table title");
    cmd->add_option("--registry", rank_args.registry, "Registry used to attach NetScore");
    cmd->add_option("--format", rank_args.format, "markdown | csv | json | plotdata");
    cmd->add_option("-o,--output", rank_args.output, "Write to a file instead of stdout");
  };
  auto* rank_cmd = app.add_subcommand("rank", "Score measurement reports with SAM and rank them");
  add_rank_options(rank_cmd);
  auto* report_cmd = app.add_subcommand("report", "Ranked table plus the device-agnostic vs measured gap");
  add_rank_options(report_cmd);
  report_cmd->add_option("--gap", rank_args.gap, "Registry whose NetScore order is compared")->required();
  report_cmd->add_option("--top-k", rank_args.top_k, "Leader-flip threshold");

  try {
    std::reverse(own_args.begin(), own_args.end());
    app.parse(own_args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (saw_separator && !measure_cmd->parsed()) {
      throw UsageError("'--' is only meaningful for measure");
    }
    if (screen_cmd->parsed()) return cmd_screen(screen_args, out);
    if (measure_cmd->parsed()) return cmd_measure(measure_args, workload_argv, saw_separator, out, err);
    if (replay_cmd->parsed()) return cmd_replay(replay_args, out);
    if (rank_cmd->parsed()) return cmd_rank(rank_args, false, out, err);
    if (report_cmd->parsed()) return cmd_rank(rank_args, true, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsage;
}

}  // namespace e3p::cli
