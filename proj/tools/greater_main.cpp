#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "greater/error.hpp"
#include "greater/fidelity.hpp"
#include "greater/pipeline.hpp"

namespace fs = std::filesystem;
using namespace greater;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kSchema = 4,
  kParse = 5,
  kValidation = 6,
  kBackend = 7,
  kState = 8,
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return kIo;
    case ErrorKind::schema: return kSchema;
    case ErrorKind::parse: return kParse;
    case ErrorKind::validation: return kValidation;
    case ErrorKind::backend: return kBackend;
    case ErrorKind::state: return kState;
  }
  return kInternal;
}

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool keep_mapping = false;
  std::string method;
  std::string threshold;
  std::string backend;
  std::string group_by;
  std::string separator;
  std::optional<double> m;
  std::string baseline;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", o.out, "Output directory (overrides output_dir)");
  cmd->add_option("--seed", o.seed, "Run seed");
  cmd->add_option("--separator", o.separator, "CSV field separator");
  cmd->add_option("-m,--contextual-threshold", o.m, "Contextual consistency threshold m");
  cmd->add_flag("--keep-mapping", o.keep_mapping, "Retain the mapping after inversion");
  cmd->add_option("--method", o.method, "Connect method: threshold | hierarchical | flatten");
  cmd->add_option("--threshold", o.threshold, "Independence threshold: mean | median | <number>");
  cmd->add_option("--backend", o.backend, "Synthesizer backend: baseline | identity | external");
}

pipeline::PipelineConfig resolve(const Overrides& o) {
  auto cfg = pipeline::load_config(o.config);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.separator.empty()) {
    if (o.separator.size() != 1) fail(ErrorKind::parse, "--separator must be a single character");
    cfg.dialect.separator = o.separator[0];
  }
  if (o.m) cfg.contextual_threshold = *o.m;
  if (o.keep_mapping) cfg.semantic.keep_mapping = true;
  if (!o.method.empty()) {
    if (o.method == "threshold") cfg.connect.method = pipeline::ConnectConfig::Method::threshold;
    else if (o.method == "hierarchical") cfg.connect.method = pipeline::ConnectConfig::Method::hierarchical;
    else if (o.method == "flatten") cfg.connect.method = pipeline::ConnectConfig::Method::flatten;
    else fail(ErrorKind::parse, "unknown --method '" + o.method + "'");
  }
  if (!o.threshold.empty()) {
    if (o.threshold == "mean") {
      cfg.connect.threshold = Threshold::mean();
    } else if (o.threshold == "median") {
      cfg.connect.threshold = Threshold::median();
    } else {
      try {
        std::size_t used = 0;
        const double v = std::stod(o.threshold, &used);
        if (used != o.threshold.size()) throw std::invalid_argument("trailing characters");
        cfg.connect.threshold = Threshold::fixed(v);
      } catch (const std::logic_error&) {
        fail(ErrorKind::parse, "--threshold must be mean, median or a number");
      }
    }
  }
  if (!o.backend.empty()) cfg.synthesizer.backend = parse_backend(o.backend);
  if (!o.group_by.empty()) cfg.group_by = o.group_by;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-table synthetic data pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Overrides o;
  std::vector<std::pair<CLI::App*, std::optional<pipeline::Stage>>> commands;
  for (auto stage : pipeline::kStages) {
    auto* cmd = app.add_subcommand(std::string(pipeline::to_string(stage)), "Run the " +
                                                                              std::string(pipeline::to_string(stage)) +
                                                                              " stage");
    add_common(cmd, o);
    if (stage == pipeline::Stage::evaluate)
      cmd->add_option("--baseline", o.baseline, "Run directory whose synthetic output is compared against")
          ->check(CLI::ExistingDirectory);
    commands.emplace_back(cmd, stage);
  }
  auto* run_cmd = app.add_subcommand("run", "Run every stage end to end");
  add_common(run_cmd, o);
  run_cmd->add_option("--group-by", o.group_by, "Run once per distinct value of this column");
  commands.emplace_back(run_cmd, std::nullopt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const auto cfg = resolve(o);
    for (const auto& [cmd, stage] : commands) {
      if (!cmd->parsed()) continue;
      if (!stage) {
        pipeline::run(cfg);
        std::cout << "run complete: " << cfg.output_dir.string() << "\n";
        return kOk;
      }
      if (!cfg.group_by.empty()) fail(ErrorKind::validation, "group_by applies to the run command only");
      pipeline::RunLock lock(cfg.output_dir);
      pipeline::run_stage(cfg, *stage);
      if (*stage == pipeline::Stage::evaluate && !o.baseline.empty()) {
        const auto cmp = pipeline::compare_with_baseline(cfg, o.baseline);
        std::cout << to_csv(cmp);
      }
      std::cout << pipeline::to_string(*stage) << " complete: " << cfg.output_dir.string() << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
