#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "greater/connect.hpp"
#include "greater/csv.hpp"
#include "greater/fidelity.hpp"
#include "greater/semantic.hpp"
#include "greater/synth.hpp"
#include "greater/table.hpp"

namespace greater {

inline constexpr std::string_view kToolVersion = "0.1.0";

namespace pipeline {

enum class SemanticMode { none, differentiability, understandability };
std::string_view to_string(SemanticMode mode) noexcept;

struct TableInput {
  std::filesystem::path path;
  Schema schema;  // includes the subject column
};

struct SemanticConfig {
  SemanticMode mode = SemanticMode::none;
  std::vector<std::string> columns;  // empty: every categorical payload column
  std::filesystem::path mapping_file;  // understandability
  std::filesystem::path name_pool_file;  // differentiability; empty: built-in pool
  std::vector<RewriteRule> rewrites;
  bool keep_mapping = false;
};

struct ConnectConfig {
  enum class Method { threshold, hierarchical, flatten };
  Method method = Method::threshold;
  Threshold threshold = Threshold::mean();
  Cut cut = Cut::at_median_height();
  std::vector<std::string> exclude;
  bool bias_corrected = false;
};

std::string_view to_string(ConnectConfig::Method method) noexcept;

struct SynthSection {
  BackendKind backend = BackendKind::baseline;
  std::vector<std::string> command;
  int epochs = kDefaultEpochs;
  int batches = kDefaultBatches;
  std::size_t sample_count = 0;  // 0: as many subjects as the training parent
  std::optional<std::uint64_t> seed;  // defaults to a stream of the run seed
  bool permuted_order = false;
  std::int64_t handshake_timeout_ms = 30000;
  std::int64_t timeout_ms = 3600000;
};

struct EvaluationConfig {
  std::vector<std::string> columns;  // empty: every payload column
  std::size_t min_condition_rows = 0;
  bool compare_flatten = false;
};

struct PipelineConfig {
  std::string subject_column = "subject_id";
  TableInput table_a;
  TableInput table_b;
  CsvDialect dialect;
  double contextual_threshold = 0.98;
  SemanticConfig semantic;
  ConnectConfig connect;
  SynthSection synthesizer;
  EvaluationConfig evaluation;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::string group_by;

  // Row filter applied at ingest; set by grouped runs.
  std::optional<std::pair<std::string, std::string>> row_filter;

  void validate() const;
  std::uint64_t mapping_seed() const;
  std::uint64_t bootstrap_seed() const;
  std::uint64_t sample_seed() const;
  std::uint64_t order_seed() const;
};

// JSON config document; relative paths resolve against base_dir.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

enum class Stage { ingest, extract_parent, enhance, connect, encode, fit, sample, invert, evaluate };
std::string_view to_string(Stage stage) noexcept;
Stage parse_stage(std::string_view text);
inline constexpr Stage kStages[] = {Stage::ingest, Stage::extract_parent, Stage::enhance,
                                    Stage::connect, Stage::encode,         Stage::fit,
                                    Stage::sample, Stage::invert,          Stage::evaluate};

/// Exclusive claim on an output directory, released on destruction.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Live state shared between stages of one process, so an external backend
/// trained by `fit` is sampled through the same connection.
struct Session {
  std::optional<Synthesizer> synthesizer;
};

// Runs one stage; reads its inputs from and writes its artifacts to the output
// directory. Errors are rethrown with the stage name prefixed.
void run_stage(const PipelineConfig& config, Stage stage, Session* session = nullptr);

/// Every stage in order. With group_by set, one run per distinct value of the
/// column under output_dir/group_NN plus groups.json; with compare_flatten, a
/// second run on the directly flattened child under flatten_baseline/ and a
/// comparison against it.
void run(const PipelineConfig& config);

// Scores the synthetic output in baseline_dir against this run's reference and
// writes comparison.json and comparison.csv.
ReportComparison compare_with_baseline(const PipelineConfig& config, const std::filesystem::path& baseline_dir);

// Table artifacts: <name>.csv plus <name>.schema.json.
void save_table(const std::filesystem::path& dir, const std::string& name, const Table& table, CsvDialect dialect);
Table load_table(const std::filesystem::path& dir, const std::string& name, CsvDialect dialect);

}  // namespace pipeline
}  // namespace greater
