// Copyright 2026 The rubriclearn Authors.
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

// rubriclearn command-line entry point.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rubriclearn/commands.hpp"

namespace {

using namespace rubriclearn;

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string log_level;
};

RunConfig resolve(const Globals& g, std::vector<std::string> extra = {}) {
  auto overrides = g.overrides;
  overrides.insert(overrides.end(), extra.begin(), extra.end());
  if (!g.log_level.empty()) overrides.push_back("log.level=\"" + g.log_level + "\"");
  auto config = load_run_config(g.config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(g.config_path),
                                overrides);
  spdlog::set_level(spdlog::level::from_str(config.log_level));
  return config;
}

std::string json_string(const std::string& s) { return json(s).dump(); }

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("rubriclearn"));

  CLI::App app{"Learn evaluation rubrics from preference pairs"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_path, "JSON config file");
  app.add_option("--set", g.overrides, "Override a config key, e.g. --set pipeline.batch_size=4")->take_all();
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off");

  auto* extract = app.add_subcommand("extract", "Run batch-iterative rubric extraction");
  std::string dataset, output;
  bool resume = false;
  extract->add_option("--dataset", dataset, "Preference pairs (JSONL)");
  extract->add_option("-o,--output", output, "Output directory");
  extract->add_flag("--resume", resume, "Continue from the checkpoint in the output directory");

  auto* select = app.add_subcommand("select", "Select a core set from a saved pool");
  std::string pool_path, select_out;
  select->add_option("--pool", pool_path, "pool.jsonl")->required();
  select->add_option("-o,--out", select_out, "Output core.json (default <output_dir>/core.json)");

  auto* diagnose = app.add_subcommand("diagnose", "Coverage, precision and contribution per rubric");
  std::string diag_rubrics, testset;
  diagnose->add_option("--rubrics", diag_rubrics, "rubrics.json or pool.jsonl")->required();
  diagnose->add_option("--testset", testset, "Labeled pairs (JSONL); default paths.testset");

  auto* judge_cmd = app.add_subcommand("judge", "Judge one pair with a rubric set");
  std::string judge_rubrics, query, response_a, response_b;
  judge_cmd->add_option("--rubrics", judge_rubrics, "rubrics.json or pool.jsonl")->required();
  judge_cmd->add_option("--query", query)->required();
  judge_cmd->add_option("--response-a", response_a)->required();
  judge_cmd->add_option("--response-b", response_b)->required();

  auto* export_trace = app.add_subcommand("export-trace", "Write selection and batch-gain traces as CSV");
  std::string core_path, trace_dir = ".";
  export_trace->add_option("--core", core_path, "core.json")->required();
  export_trace->add_option("-o,--out-dir", trace_dir, "Directory for trace.csv and batch_gains.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (extract->parsed()) {
      std::vector<std::string> extra;
      if (!dataset.empty()) extra.push_back("paths.dataset=" + json_string(dataset));
      if (!output.empty()) extra.push_back("paths.output_dir=" + json_string(output));
      const auto config = resolve(g, extra);
      auto backends = Backends::from(config);
      ExtractOptions options;
      options.resume = resume;
      const auto result = cmd_extract(config, *backends.routed, *backends.embed, options);
      std::cout << "stop_reason: " << to_string(result.stop_reason) << "\n"
                << "batch_iterations: " << result.batches.size() << "\n"
                << "pairs_processed: " << result.pairs_processed << "\n"
                << "pool_size: " << result.pool_size << "\n"
                << "core_size: " << result.core.rubric_ids.size() << "\n"
                << "themes: " << result.structured.themes.size() << "\n"
                << "artifacts: " << config.paths.output_dir.string() << "\n";
    } else if (select->parsed()) {
      const auto config = resolve(g);
      auto backends = Backends::from(config);
      const auto out = select_out.empty() ? config.paths.output_dir / kCoreFile : std::filesystem::path(select_out);
      const auto core = cmd_select(pool_path, config, *backends.embed, out);
      std::cout << "selected " << core.rubric_ids.size() << " rubrics (" << to_string(core.trace.stop_reason)
                << ") -> " << out.string() << "\n";
    } else if (diagnose->parsed()) {
      std::vector<std::string> extra;
      if (!testset.empty()) extra.push_back("paths.testset=" + json_string(testset));
      const auto config = resolve(g, extra);
      if (config.paths.testset.empty()) throw Error(ErrorKind::config, "no test set: pass --testset or set paths.testset");
      auto backends = Backends::from(config);
      const auto report = cmd_diagnose(diag_rubrics, config.paths.testset, config, *backends.judge);
      std::cout << render_table(report) << fmt::format("set accuracy: {:.2f}%\n", report.full_accuracy * 100.0);
    } else if (judge_cmd->parsed()) {
      const auto config = resolve(g);
      auto backends = Backends::from(config);
      std::cout << to_string(cmd_judge(judge_rubrics, query, response_a, response_b, *backends.judge)) << "\n";
    } else if (export_trace->parsed()) {
      cmd_export_trace(core_path, trace_dir);
      std::cout << "wrote " << (std::filesystem::path(trace_dir) / "trace.csv").string() << " and "
                << (std::filesystem::path(trace_dir) / "batch_gains.csv").string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "rubriclearn: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "rubriclearn: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
