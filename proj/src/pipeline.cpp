#include "greater/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <nlohmann/json.hpp>
#include <set>
#include <unordered_set>

#include "greater/contextual.hpp"
#include "greater/error.hpp"
#include "greater/labels.hpp"
#include "greater/protocol.hpp"
#include "greater/random.hpp"
#include "greater/textual.hpp"

namespace greater::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(SemanticMode mode) noexcept {
  switch (mode) {
    case SemanticMode::none: return "none";
    case SemanticMode::differentiability: return "differentiability";
    case SemanticMode::understandability: return "understandability";
  }
  return "none";
}

std::string_view to_string(ConnectConfig::Method method) noexcept {
  switch (method) {
    case ConnectConfig::Method::threshold: return "threshold";
    case ConnectConfig::Method::hierarchical: return "hierarchical";
    case ConnectConfig::Method::flatten: return "flatten";
  }
  return "threshold";
}

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::extract_parent: return "extract-parent";
    case Stage::enhance: return "enhance";
    case Stage::connect: return "connect";
    case Stage::encode: return "encode";
    case Stage::fit: return "fit";
    case Stage::sample: return "sample";
    case Stage::invert: return "invert";
    case Stage::evaluate: return "evaluate";
  }
  return "ingest";
}

Stage parse_stage(std::string_view text) {
  for (auto s : kStages)
    if (to_string(s) == text) return s;
  fail(ErrorKind::parse, "unknown stage '" + std::string(text) + "'");
}

std::uint64_t PipelineConfig::mapping_seed() const { return derive_seed(seed, 1); }
std::uint64_t PipelineConfig::bootstrap_seed() const { return derive_seed(seed, 2); }
std::uint64_t PipelineConfig::sample_seed() const { return synthesizer.seed.value_or(derive_seed(seed, 3)); }
std::uint64_t PipelineConfig::order_seed() const { return derive_seed(seed, 4); }

void PipelineConfig::validate() const {
  if (subject_column.empty()) fail(ErrorKind::validation, "subject_column must be set");
  if (output_dir.empty()) fail(ErrorKind::validation, "output_dir must be set");
  if (dialect.separator == '"' || dialect.separator == '\n' || dialect.separator == '\r')
    fail(ErrorKind::validation, "separator may not be a quote or line break");
  if (!(contextual_threshold > 0.0 && contextual_threshold <= 1.0))
    fail(ErrorKind::validation, "contextual threshold must lie in (0, 1]");

  std::set<std::string> payload;
  for (const auto* t : {&table_a, &table_b}) {
    if (t->path.empty()) fail(ErrorKind::validation, "both input tables need a path");
    if (!fs::is_regular_file(t->path)) fail(ErrorKind::io, "input table '" + t->path.string() + "' does not exist");
    validate_schema(t->schema);
    for (const auto& c : t->schema)
      if (c.role == Role::payload && !payload.insert(c.name).second)
        fail(ErrorKind::schema, "column '" + c.name + "' is declared in both child tables");
  }
  if (semantic.mode == SemanticMode::understandability) {
    if (semantic.mapping_file.empty()) fail(ErrorKind::validation, "understandability mode needs mapping_file");
    if (!fs::is_regular_file(semantic.mapping_file))
      fail(ErrorKind::io, "mapping file '" + semantic.mapping_file.string() + "' does not exist");
  }
  if (!semantic.name_pool_file.empty() && !fs::is_regular_file(semantic.name_pool_file))
    fail(ErrorKind::io, "name pool file '" + semantic.name_pool_file.string() + "' does not exist");
  for (const auto& c : semantic.columns)
    if (!payload.contains(c)) fail(ErrorKind::schema, "semantic column '" + c + "' is not a declared column");
  for (const auto& c : connect.exclude)
    if (!payload.contains(c)) fail(ErrorKind::schema, "excluded column '" + c + "' is not a declared column");
  for (const auto& c : evaluation.columns)
    if (!payload.contains(c)) fail(ErrorKind::schema, "evaluation column '" + c + "' is not a declared column");
  if (connect.threshold.kind == Threshold::Kind::fixed &&
      !(connect.threshold.value >= 0.0 && connect.threshold.value <= 1.0))
    fail(ErrorKind::validation, "fixed threshold must lie in [0, 1]");
  if (synthesizer.epochs < 1 || synthesizer.batches < 1)
    fail(ErrorKind::validation, "epochs and batches must be >= 1");
  if (synthesizer.backend == BackendKind::external && synthesizer.command.empty())
    fail(ErrorKind::validation, "external backend needs synthesizer.command");
  if (synthesizer.handshake_timeout_ms < 1 || synthesizer.timeout_ms < 1)
    fail(ErrorKind::validation, "backend timeouts must be positive");
  if (!group_by.empty() && !payload.contains(group_by))
    fail(ErrorKind::schema, "group_by column '" + group_by + "' is not a declared column");
}

// ---------------------------------------------------------------------------
// config documents

namespace {

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(ErrorKind::parse, "config: '" + std::string(where) + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) fail(ErrorKind::parse, "config: unknown key '" + key + "' in '" + std::string(where) + "'");
  }
}

template <typename T>
T get(const json& obj, const char* key, T fallback, std::string_view where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::parse, "config: '" + std::string(where) + "." + key + "' has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

RewriteRule parse_rule(const json& j) {
  check_keys(j, "semantic.rewrites[]", {"columns", "pattern", "replacement"});
  return {get<std::vector<std::string>>(j, "columns", {}, "rewrite"), get<std::string>(j, "pattern", "", "rewrite"),
          get<std::string>(j, "replacement", "", "rewrite")};
}

json rule_json(const RewriteRule& r) {
  return {{"columns", r.columns}, {"pattern", r.pattern}, {"replacement", r.replacement}};
}

json schema_json(const Schema& schema, bool with_role) {
  json out = json::array();
  for (const auto& c : schema) {
    json col{{"name", c.name}, {"modality", std::string(to_string(c.modality))}};
    if (with_role) col["role"] = c.role == Role::subject_id ? "subject_id" : "payload";
    out.push_back(std::move(col));
  }
  return out;
}

TableInput parse_table_input(const json& j, std::string_view where, const std::string& subject,
                             const fs::path& base) {
  check_keys(j, where, {"path", "columns"});
  TableInput in;
  in.path = resolve(base, get<std::string>(j, "path", "", where));
  in.schema.push_back({subject, Modality::categorical, Role::subject_id});
  if (!j.contains("columns") || !j["columns"].is_array() || j["columns"].empty())
    fail(ErrorKind::parse, "config: '" + std::string(where) + ".columns' must be a non-empty array");
  for (const auto& c : j["columns"]) {
    std::string name;
    Modality modality = Modality::categorical;
    if (c.is_string()) {
      name = c.get<std::string>();
    } else {
      check_keys(c, std::string(where) + ".columns[]", {"name", "modality"});
      name = get<std::string>(c, "name", "", where);
      modality = parse_modality(get<std::string>(c, "modality", "categorical", where));
    }
    if (name == subject) continue;
    in.schema.push_back({name, modality, Role::payload});
  }
  return in;
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, "config",
             {"subject_column", "tables", "separator", "contextual", "semantic", "connect", "synthesizer",
              "evaluation", "seed", "output_dir", "group_by"});
  PipelineConfig cfg;
  cfg.subject_column = get<std::string>(doc, "subject_column", cfg.subject_column, "config");
  const auto sep = get<std::string>(doc, "separator", ",", "config");
  if (sep.size() != 1) fail(ErrorKind::parse, "config: separator must be a single character");
  cfg.dialect.separator = sep[0];
  cfg.seed = get<std::uint64_t>(doc, "seed", 0, "config");
  cfg.output_dir = resolve(base_dir, get<std::string>(doc, "output_dir", "out", "config"));
  cfg.group_by = get<std::string>(doc, "group_by", "", "config");

  if (!doc.contains("tables")) fail(ErrorKind::parse, "config: 'tables' is required");
  const auto& tables = doc["tables"];
  check_keys(tables, "tables", {"a", "b"});
  if (!tables.contains("a") || !tables.contains("b")) fail(ErrorKind::parse, "config: tables 'a' and 'b' are required");
  cfg.table_a = parse_table_input(tables["a"], "tables.a", cfg.subject_column, base_dir);
  cfg.table_b = parse_table_input(tables["b"], "tables.b", cfg.subject_column, base_dir);

  if (doc.contains("contextual")) {
    const auto& c = doc["contextual"];
    check_keys(c, "contextual", {"threshold"});
    cfg.contextual_threshold = get<double>(c, "threshold", cfg.contextual_threshold, "contextual");
  }

  if (doc.contains("semantic")) {
    const auto& s = doc["semantic"];
    check_keys(s, "semantic",
               {"mode", "columns", "mapping_file", "name_pool_file", "rewrites", "rewrites_file", "keep_mapping"});
    const auto mode = get<std::string>(s, "mode", "none", "semantic");
    if (mode == "none") cfg.semantic.mode = SemanticMode::none;
    else if (mode == "differentiability") cfg.semantic.mode = SemanticMode::differentiability;
    else if (mode == "understandability") cfg.semantic.mode = SemanticMode::understandability;
    else fail(ErrorKind::parse, "config: unknown semantic mode '" + mode + "'");
    cfg.semantic.columns = get<std::vector<std::string>>(s, "columns", {}, "semantic");
    cfg.semantic.mapping_file = resolve(base_dir, get<std::string>(s, "mapping_file", "", "semantic"));
    cfg.semantic.name_pool_file = resolve(base_dir, get<std::string>(s, "name_pool_file", "", "semantic"));
    cfg.semantic.keep_mapping = get<bool>(s, "keep_mapping", false, "semantic");
    if (s.contains("rewrites")) {
      if (!s["rewrites"].is_array()) fail(ErrorKind::parse, "config: semantic.rewrites must be an array");
      for (const auto& r : s["rewrites"]) cfg.semantic.rewrites.push_back(parse_rule(r));
    }
    if (const auto file = get<std::string>(s, "rewrites_file", "", "semantic"); !file.empty()) {
      json rules;
      try {
        rules = json::parse(read_file(resolve(base_dir, file)));
      } catch (const json::parse_error& e) {
        fail(ErrorKind::parse, "rewrites file '" + file + "' is not valid JSON: " + e.what());
      }
      if (!rules.is_array()) fail(ErrorKind::parse, "rewrites file '" + file + "' must hold an array");
      for (const auto& r : rules) cfg.semantic.rewrites.push_back(parse_rule(r));
    }
  }

  if (doc.contains("connect")) {
    const auto& c = doc["connect"];
    check_keys(c, "connect", {"method", "threshold", "cut", "exclude", "bias_corrected"});
    const auto method = get<std::string>(c, "method", "threshold", "connect");
    if (method == "threshold") cfg.connect.method = ConnectConfig::Method::threshold;
    else if (method == "hierarchical") cfg.connect.method = ConnectConfig::Method::hierarchical;
    else if (method == "flatten") cfg.connect.method = ConnectConfig::Method::flatten;
    else fail(ErrorKind::parse, "config: unknown connect method '" + method + "'");
    if (c.contains("threshold")) {
      const auto& t = c["threshold"];
      if (t.is_number()) cfg.connect.threshold = Threshold::fixed(t.get<double>());
      else if (t == "mean") cfg.connect.threshold = Threshold::mean();
      else if (t == "median") cfg.connect.threshold = Threshold::median();
      else fail(ErrorKind::parse, "config: connect.threshold must be 'mean', 'median' or a number");
    }
    if (c.contains("cut")) {
      const auto& cut = c["cut"];
      if (cut == "median") {
        cfg.connect.cut = Cut::at_median_height();
      } else if (cut.is_object() && cut.size() == 1 && cut.contains("distance") && cut["distance"].is_number()) {
        cfg.connect.cut = Cut::at_distance(cut["distance"].get<double>());
      } else if (cut.is_object() && cut.size() == 1 && cut.contains("clusters") &&
                 cut["clusters"].is_number_unsigned()) {
        cfg.connect.cut = Cut::into_clusters(cut["clusters"].get<std::size_t>());
      } else {
        fail(ErrorKind::parse, "config: connect.cut must be 'median', {\"distance\": d} or {\"clusters\": k}");
      }
    }
    cfg.connect.exclude = get<std::vector<std::string>>(c, "exclude", {}, "connect");
    cfg.connect.bias_corrected = get<bool>(c, "bias_corrected", false, "connect");
  }

  if (doc.contains("synthesizer")) {
    const auto& s = doc["synthesizer"];
    check_keys(s, "synthesizer",
               {"backend", "command", "epochs", "batches", "sample_count", "seed", "order", "handshake_timeout_ms",
                "timeout_ms"});
    auto& out = cfg.synthesizer;
    out.backend = parse_backend(get<std::string>(s, "backend", "baseline", "synthesizer"));
    out.command = get<std::vector<std::string>>(s, "command", {}, "synthesizer");
    out.epochs = get<int>(s, "epochs", out.epochs, "synthesizer");
    out.batches = get<int>(s, "batches", out.batches, "synthesizer");
    out.sample_count = get<std::size_t>(s, "sample_count", 0, "synthesizer");
    if (s.contains("seed")) out.seed = get<std::uint64_t>(s, "seed", 0, "synthesizer");
    const auto order = get<std::string>(s, "order", "natural", "synthesizer");
    if (order != "natural" && order != "permuted")
      fail(ErrorKind::parse, "config: synthesizer.order must be 'natural' or 'permuted'");
    out.permuted_order = order == "permuted";
    out.handshake_timeout_ms = get<std::int64_t>(s, "handshake_timeout_ms", out.handshake_timeout_ms, "synthesizer");
    out.timeout_ms = get<std::int64_t>(s, "timeout_ms", out.timeout_ms, "synthesizer");
  }

  if (doc.contains("evaluation")) {
    const auto& e = doc["evaluation"];
    check_keys(e, "evaluation", {"columns", "min_condition_rows", "compare_flatten"});
    cfg.evaluation.columns = get<std::vector<std::string>>(e, "columns", {}, "evaluation");
    cfg.evaluation.min_condition_rows = get<std::size_t>(e, "min_condition_rows", 0, "evaluation");
    cfg.evaluation.compare_flatten = get<bool>(e, "compare_flatten", false, "evaluation");
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  return parse_config(read_file(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

namespace {

json config_json(const PipelineConfig& cfg, bool with_output) {
  json j;
  j["subject_column"] = cfg.subject_column;
  j["separator"] = std::string(1, cfg.dialect.separator);
  j["seed"] = cfg.seed;
  if (with_output) j["output_dir"] = cfg.output_dir.string();
  if (!cfg.group_by.empty()) j["group_by"] = cfg.group_by;
  for (const auto& [key, t] : {std::pair{"a", &cfg.table_a}, std::pair{"b", &cfg.table_b}}) {
    Schema payload;
    for (const auto& c : t->schema)
      if (c.role == Role::payload) payload.push_back(c);
    j["tables"][key] = {{"path", t->path.string()}, {"columns", schema_json(payload, false)}};
  }
  j["contextual"] = {{"threshold", cfg.contextual_threshold}};
  json rules = json::array();
  for (const auto& r : cfg.semantic.rewrites) rules.push_back(rule_json(r));
  j["semantic"] = {{"mode", std::string(to_string(cfg.semantic.mode))},
                   {"columns", cfg.semantic.columns},
                   {"mapping_file", cfg.semantic.mapping_file.string()},
                   {"name_pool_file", cfg.semantic.name_pool_file.string()},
                   {"rewrites", rules},
                   {"keep_mapping", cfg.semantic.keep_mapping}};
  json threshold;
  switch (cfg.connect.threshold.kind) {
    case Threshold::Kind::mean: threshold = "mean"; break;
    case Threshold::Kind::median: threshold = "median"; break;
    case Threshold::Kind::fixed: threshold = cfg.connect.threshold.value; break;
  }
  json cut;
  switch (cfg.connect.cut.kind) {
    case Cut::Kind::median_height: cut = "median"; break;
    case Cut::Kind::distance: cut = {{"distance", cfg.connect.cut.distance}}; break;
    case Cut::Kind::clusters: cut = {{"clusters", cfg.connect.cut.clusters}}; break;
  }
  j["connect"] = {{"method", std::string(to_string(cfg.connect.method))},
                  {"threshold", threshold},
                  {"cut", cut},
                  {"exclude", cfg.connect.exclude},
                  {"bias_corrected", cfg.connect.bias_corrected}};
  const auto& s = cfg.synthesizer;
  j["synthesizer"] = {{"backend", std::string(to_string(s.backend))},
                      {"command", s.command},
                      {"epochs", s.epochs},
                      {"batches", s.batches},
                      {"sample_count", s.sample_count},
                      {"seed", cfg.sample_seed()},
                      {"order", s.permuted_order ? "permuted" : "natural"},
                      {"handshake_timeout_ms", s.handshake_timeout_ms},
                      {"timeout_ms", s.timeout_ms}};
  j["evaluation"] = {{"columns", cfg.evaluation.columns},
                     {"min_condition_rows", cfg.evaluation.min_condition_rows},
                     {"compare_flatten", cfg.evaluation.compare_flatten}};
  return j;
}

}  // namespace

std::string config_to_json(const PipelineConfig& config) { return config_json(config, true).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// artifacts

RunLock::RunLock(const fs::path& dir) : path_(dir / "run.lock") {
  fs::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      fail(ErrorKind::state, "output directory '" + dir.string() + "' is locked by another run (" +
                                 path_.string() + ")");
    fail(ErrorKind::io, "cannot create lock file '" + path_.string() + "'");
  }
  const auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

void save_table(const fs::path& dir, const std::string& name, const Table& table, CsvDialect dialect) {
  write_csv(table, dir / (name + ".csv"), dialect);
  write_file(dir / (name + ".schema.json"), schema_json(table.schema(), true).dump(2) + "\n");
}

Table load_table(const fs::path& dir, const std::string& name, CsvDialect dialect) {
  const auto schema_path = dir / (name + ".schema.json");
  if (!fs::is_regular_file(schema_path))
    fail(ErrorKind::io, "missing artifact '" + schema_path.string() + "'; run the producing stage first");
  Schema schema;
  try {
    for (const auto& c : json::parse(read_file(schema_path)))
      schema.push_back({c.at("name").get<std::string>(), parse_modality(c.at("modality").get<std::string>()),
                        c.at("role") == "subject_id" ? Role::subject_id : Role::payload});
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, "malformed schema artifact '" + schema_path.string() + "': " + e.what());
  }
  return load_csv(dir / (name + ".csv"), schema, dialect);
}

namespace {

json read_json(const fs::path& path) {
  if (!fs::is_regular_file(path))
    fail(ErrorKind::io, "missing artifact '" + path.string() + "'; run the producing stage first");
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, "malformed artifact '" + path.string() + "': " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

json rejections_json(const RejectionReport& r) {
  json counts = json::object();
  for (const auto& [k, v] : r.counts) counts[k] = v;
  return {{"total", r.total()}, {"counts", counts}};
}

// Rules restricted to the columns a table has; rules naming none are dropped.
std::vector<RewriteRule> rules_for(const Table& table, std::span<const RewriteRule> rules) {
  std::vector<RewriteRule> out;
  for (const auto& rule : rules) {
    if (rule.columns.empty()) {
      out.push_back(rule);
      continue;
    }
    RewriteRule scoped{{}, rule.pattern, rule.replacement};
    for (const auto& c : rule.columns)
      if (table.find_column(c)) scoped.columns.push_back(c);
    if (!scoped.columns.empty()) out.push_back(std::move(scoped));
  }
  return out;
}

Table rewrite(const Table& t, std::span<const RewriteRule> rules) { return apply_rewrites(t, rules_for(t, rules)); }
Table unrewrite(const Table& t, std::span<const RewriteRule> rules) {
  return reverse_rewrites(t, rules_for(t, rules));
}

std::vector<std::string> categorical_payload(const Table& t) {
  std::vector<std::string> out;
  for (const auto& c : t.schema())
    if (c.role == Role::payload && c.modality == Modality::categorical) out.push_back(c.name);
  return out;
}

SynthesizerConfig synth_config(const PipelineConfig& cfg, std::size_t parents) {
  SynthesizerConfig sc;
  sc.backend = cfg.synthesizer.backend;
  sc.endpoint.command = cfg.synthesizer.command;
  sc.endpoint.handshake_timeout = std::chrono::milliseconds(cfg.synthesizer.handshake_timeout_ms);
  sc.endpoint.timeout = std::chrono::milliseconds(cfg.synthesizer.timeout_ms);
  sc.epochs = cfg.synthesizer.epochs;
  sc.batches = cfg.synthesizer.batches;
  sc.sample_count = cfg.synthesizer.sample_count ? cfg.synthesizer.sample_count : std::max<std::size_t>(parents, 1);
  sc.seed = cfg.sample_seed();
  sc.order = cfg.synthesizer.permuted_order ? OrderPolicy::permuted(cfg.order_seed()) : OrderPolicy::natural();
  return sc;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// stages

void stage_ingest(const PipelineConfig& cfg) {
  const auto& dir = cfg.output_dir;
  fs::create_directories(dir);
  Table a = load_csv(cfg.table_a.path, cfg.table_a.schema, cfg.dialect);
  Table b = load_csv(cfg.table_b.path, cfg.table_b.schema, cfg.dialect);
  if (cfg.row_filter) {
    const auto& [column, value] = *cfg.row_filter;
    auto keep = [&](const Table& t) {
      const auto c = t.column_index(column);
      std::vector<std::size_t> rows;
      for (std::size_t r = 0; r < t.num_rows(); ++r)
        if (t.cell(r, c) == value) rows.push_back(r);
      return take_rows(t, rows);
    };
    auto restrict_to = [](const Table& t, const Table& other) {
      const auto index = build_subject_index(other);
      const auto s = t.require_subject_column();
      std::vector<std::size_t> rows;
      for (std::size_t r = 0; r < t.num_rows(); ++r)
        if (index.contains(t.cell(r, s))) rows.push_back(r);
      return take_rows(t, rows);
    };
    const bool in_a = a.find_column(column).has_value(), in_b = b.find_column(column).has_value();
    if (in_a) a = keep(a);
    if (in_b) b = keep(b);
    if (in_a && !in_b) b = restrict_to(b, a);
    if (in_b && !in_a) a = restrict_to(a, b);
  }
  if (a.empty()) fail(ErrorKind::validation, "child table a has no rows");
  if (b.empty()) fail(ErrorKind::validation, "child table b has no rows");
  save_table(dir, "child_a", a, cfg.dialect);
  save_table(dir, "child_b", b, cfg.dialect);
}

void stage_extract_parent(const PipelineConfig& cfg) {
  const auto& dir = cfg.output_dir;
  const auto a = load_table(dir, "child_a", cfg.dialect);
  const auto b = load_table(dir, "child_b", cfg.dialect);
  const auto ra = detect_contextual(a, cfg.contextual_threshold);
  const auto rb = detect_contextual(b, cfg.contextual_threshold);
  const auto ea = extract_parent(a, ra.contextual_columns());
  const auto eb = extract_parent(b, rb.contextual_columns());
  save_table(dir, "parent", merge_parents(ea.parent, eb.parent), cfg.dialect);
  save_table(dir, "residual_a", ea.residual_child, cfg.dialect);
  save_table(dir, "residual_b", eb.residual_child, cfg.dialect);
  write_json(dir / "contextual_report.json",
             {{"threshold", cfg.contextual_threshold},
              {"child_a", json::parse(to_json(ra))},
              {"child_b", json::parse(to_json(rb))}});
}

void stage_enhance(const PipelineConfig& cfg) {
  const auto& dir = cfg.output_dir;
  const auto& rules = cfg.semantic.rewrites;
  std::vector<Table> tables{rewrite(load_table(dir, "parent", cfg.dialect), rules),
                            rewrite(load_table(dir, "residual_a", cfg.dialect), rules),
                            rewrite(load_table(dir, "residual_b", cfg.dialect), rules)};
  json rules_doc = json::array();
  for (const auto& r : rules) rules_doc.push_back(rule_json(r));
  write_json(dir / "rewrites.json", rules_doc);

  MappingStore store(dir / "mapping.txt");
  if (cfg.semantic.mode != SemanticMode::none) {
    std::vector<std::string> selected = cfg.semantic.columns;
    if (selected.empty()) {
      for (const auto& t : tables)
        for (auto& c : categorical_payload(t))
          if (std::find(selected.begin(), selected.end(), c) == selected.end()) selected.push_back(std::move(c));
    }
    std::optional<MappingSystem> mapping;
    if (cfg.semantic.mode == SemanticMode::differentiability) {
      auto pool = cfg.semantic.name_pool_file.empty() ? default_name_pool() : load_name_pool(cfg.semantic.name_pool_file);
      pool = filter_pool(pool, tables);
      mapping.emplace(build_differentiability_mapping(tables, selected, pool, cfg.mapping_seed()));
    } else {
      mapping.emplace(build_understandability_mapping(parse_mapping_document(read_file(cfg.semantic.mapping_file)),
                                                      tables));
    }
    store.save(*mapping);
    for (auto& t : tables) t = apply_mapping(t, *mapping);
  } else if (store.exists()) {
    store.destroy();
  }
  save_table(dir, "enhanced_parent", tables[0], cfg.dialect);
  save_table(dir, "enhanced_a", tables[1], cfg.dialect);
  save_table(dir, "enhanced_b", tables[2], cfg.dialect);
}

void stage_connect(const PipelineConfig& cfg) {
  const auto& dir = cfg.output_dir;
  const auto a = load_table(dir, "enhanced_a", cfg.dialect);
  const auto b = load_table(dir, "enhanced_b", cfg.dialect);
  const Table flat = flatten_join(a, b);
  if (flat.empty()) fail(ErrorKind::validation, "the child tables share no subject");

  json report;
  report["method"] = std::string(to_string(cfg.connect.method));
  Table connected;
  if (cfg.connect.method == ConnectConfig::Method::flatten) {
    connected = flat;
  } else {
    const Table analysis = cfg.connect.exclude.empty() ? flat : exclude_noisy_columns(flat, cfg.connect.exclude);
    const auto cols = categorical_payload(analysis);
    IndependencePartition part;
    if (cols.size() >= 2) {
      const auto matrix = association_matrix(analysis, cols, {cfg.connect.bias_corrected});
      write_file(dir / "association_matrix.csv", matrix.to_csv());
      write_file(dir / "association_long.csv", matrix.to_long_csv());
      part = cfg.connect.method == ConnectConfig::Method::threshold
                 ? threshold_independent(matrix, cfg.connect.threshold)
                 : hierarchical_independent(matrix, cfg.connect.cut);
    } else {
      part.core_cols = cols;
      part.method = "none";
    }
    for (const auto& c : cfg.connect.exclude)
      if (std::find(part.independent_cols.begin(), part.independent_cols.end(), c) == part.independent_cols.end())
        part.independent_cols.push_back(c);
    const std::vector<Table> sources{a, b};
    const auto reduced = reduce_core(flat, part, sources);
    connected = select_columns(bootstrap_append(reduced.core, reduced.pools, cfg.bootstrap_seed()), flat.column_names());
    report["partition"] = json::parse(to_json(part));
    report["excluded"] = cfg.connect.exclude;
    report["core_rows"] = reduced.core.num_rows();
    write_file(dir / "pools.json", reduced.pools.to_json());
  }
  report["flattened_rows"] = flat.num_rows();
  report["connected_rows"] = connected.num_rows();
  write_json(dir / "partition.json", report);
  save_table(dir, "connected_child_enhanced", connected, cfg.dialect);
}

void stage_encode(const PipelineConfig& cfg) {
  const auto& dir = cfg.output_dir;
  const auto order = cfg.synthesizer.permuted_order ? OrderPolicy::permuted(cfg.order_seed()) : OrderPolicy::natural();
  const std::vector<std::string> subject{cfg.subject_column};
  write_corpus(encode_table(drop_columns(load_table(dir, "enhanced_parent", cfg.dialect), subject), order),
               dir / "parent_corpus.txt");
  write_corpus(encode_table(drop_columns(load_table(dir, "connected_child_enhanced", cfg.dialect), subject), order),
               dir / "child_corpus.txt");
}

void stage_fit(const PipelineConfig& cfg, Session* session) {
  const auto& dir = cfg.output_dir;
  const auto parent = load_table(dir, "enhanced_parent", cfg.dialect);
  const auto child = load_table(dir, "connected_child_enhanced", cfg.dialect);
  Synthesizer synth(synth_config(cfg, parent.num_rows()));
  synth.fit(parent, child);
  const auto& m = synth.model();
  write_json(dir / "model.json", {{"backend", std::string(to_string(m.backend))},
                                  {"fingerprint", m.fingerprint},
                                  {"model_id", m.model_id},
                                  {"epochs", synth.config().epochs},
                                  {"batches", synth.config().batches},
                                  {"order", to_string(synth.config().order)},
                                  {"training_rows", {{"parent", parent.num_rows()}, {"child", child.num_rows()}}}});
  if (session) session->synthesizer.emplace(std::move(synth));
}

void stage_sample(const PipelineConfig& cfg, Session* session) {
  const auto& dir = cfg.output_dir;
  const auto model = read_json(dir / "model.json");
  const auto parent = load_table(dir, "enhanced_parent", cfg.dialect);
  const auto child = load_table(dir, "connected_child_enhanced", cfg.dialect);
  if (model.value("backend", "") != to_string(cfg.synthesizer.backend))
    fail(ErrorKind::state, "model.json was fitted with backend '" + model.value("backend", "") +
                               "', config asks for '" + std::string(to_string(cfg.synthesizer.backend)) + "'");

  std::optional<Synthesizer> local;
  Synthesizer* synth = nullptr;
  if (session && session->synthesizer && session->synthesizer->fitted()) {
    synth = &*session->synthesizer;
  } else {
    local.emplace(synth_config(cfg, parent.num_rows()));
    if (cfg.synthesizer.backend == BackendKind::external)
      local->attach_external(model.value("model_id", ""), parent.schema(), child.schema());
    else
      local->fit(parent, child);
    synth = &*local;
  }
  if (synth->model().fingerprint != model.value("fingerprint", ""))
    fail(ErrorKind::state, "training artifacts changed since fit; rerun fit");

  const auto n = synth->config().sample_count;
  const auto out = synth->sample(n, cfg.sample_seed());
  save_table(dir, "synthetic_parent_enhanced", out.parent, cfg.dialect);
  save_table(dir, "synthetic_child_enhanced", out.child, cfg.dialect);
  write_json(dir / "sample_report.json", {{"n_subjects", n},
                                          {"seed", cfg.sample_seed()},
                                          {"rows", {{"parent", out.parent.num_rows()}, {"child", out.child.num_rows()}}},
                                          {"parent_rejections", rejections_json(out.parent_rejections)},
                                          {"child_rejections", rejections_json(out.child_rejections)}});
}

void stage_invert(const PipelineConfig& cfg) {
  const auto& dir = cfg.output_dir;
  Table sp = load_table(dir, "synthetic_parent_enhanced", cfg.dialect);
  Table sc = load_table(dir, "synthetic_child_enhanced", cfg.dialect);
  Table cc = load_table(dir, "connected_child_enhanced", cfg.dialect);
  std::vector<RewriteRule> rules;
  for (const auto& r : read_json(dir / "rewrites.json")) rules.push_back(parse_rule(r));

  json report;
  json warnings = json::array();
  std::size_t parent_dropped = 0, child_dropped = 0, cascade = 0;
  MappingStore store(dir / "mapping.txt");
  json mapping_record;
  if (cfg.semantic.mode != SemanticMode::none) {
    if (!store.exists())
      fail(ErrorKind::state, "mapping '" + store.path().string() + "' is missing or was already destroyed");
    const auto mapping = store.load();
    auto ip = invert_mapping_lenient(sp, mapping);
    auto ic = invert_mapping_lenient(sc, mapping);
    parent_dropped = ip.rejected.size();
    child_dropped = ic.rejected.size();
    sp = std::move(ip.table);
    sc = std::move(ic.table);
    cc = invert_mapping(cc, mapping);
    json rejected = json::array();
    for (const auto* list : {&ip.rejected, &ic.rejected})
      for (const auto& r : *list)
        rejected.push_back({{"table", list == &ip.rejected ? "parent" : "child"},
                            {"row", r.row},
                            {"column", r.column},
                            {"value", r.value}});
    report["rejected"] = rejected;
  }

  const auto parents = build_subject_index(sp);
  const auto s = sc.require_subject_column();
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < sc.num_rows(); ++r)
    if (parents.contains(sc.cell(r, s))) keep.push_back(r);
  cascade = sc.num_rows() - keep.size();
  sc = take_rows(sc, keep);

  save_table(dir, "synthetic_parent", unrewrite(sp, rules), cfg.dialect);
  save_table(dir, "synthetic_child", unrewrite(sc, rules), cfg.dialect);
  save_table(dir, "connected_child", unrewrite(cc, rules), cfg.dialect);

  if (cfg.semantic.mode == SemanticMode::none) {
    mapping_record = {{"status", "none"}};
  } else if (cfg.semantic.keep_mapping) {
    mapping_record = {{"status", "kept"}, {"path", "mapping.txt"}};
    warnings.push_back("mapping retained at mapping.txt (keep_mapping); it reverses the semantic enhancement");
  } else {
    const auto outcome = store.destroy();
    mapping_record = {{"status", outcome == MappingStore::DestroyOutcome::destroyed ? "destroyed" : "already_destroyed"},
                      {"path", "mapping.txt"}};
  }
  report["dropped"] = {{"parent_inverse", parent_dropped}, {"child_inverse", child_dropped}, {"child_orphaned", cascade}};
  report["mapping"] = mapping_record;
  report["warnings"] = warnings;
  write_json(dir / "invert_report.json", report);
}

FidelityReport score_against(const PipelineConfig& cfg, const fs::path& ref_dir, const fs::path& syn_dir) {
  const auto reference = attach_parent(load_table(ref_dir, "connected_child", cfg.dialect),
                                       load_table(ref_dir, "parent", cfg.dialect));
  const auto synthetic = attach_parent(load_table(syn_dir, "synthetic_child", cfg.dialect),
                                       load_table(syn_dir, "synthetic_parent", cfg.dialect));
  const auto pairs = all_ordered_pairs(reference, cfg.evaluation.columns);
  return fidelity_report(reference, synthetic, pairs, {cfg.evaluation.min_condition_rows});
}

void stage_evaluate(const PipelineConfig& cfg) {
  const auto& dir = cfg.output_dir;
  const auto report = score_against(cfg, dir, dir);
  write_file(dir / "fidelity_report.json", to_json(report) + "\n");
  write_file(dir / "fidelity_long.csv", to_long_csv(report));
  write_file(dir / "fidelity_histogram.csv", to_histogram_csv(report));

  const auto parent = load_table(dir, "parent", cfg.dialect);
  const auto synthetic_parent = load_table(dir, "synthetic_parent", cfg.dialect);
  if (parent.payload_names().size() >= 2) {
    const auto parent_report = fidelity_report(parent, synthetic_parent, {}, {cfg.evaluation.min_condition_rows});
    write_file(dir / "parent_fidelity_report.json", to_json(parent_report) + "\n");
  }

  const auto sample = read_json(dir / "sample_report.json");
  const auto invert = read_json(dir / "invert_report.json");
  json m;
  m["tool"] = "greater";
  m["version"] = std::string(kToolVersion);
  m["protocol_version"] = protocol::kVersion;
  m["created_at"] = utc_timestamp();
  m["seeds"] = {{"run", cfg.seed},
                {"mapping", cfg.mapping_seed()},
                {"bootstrap", cfg.bootstrap_seed()},
                {"sample", cfg.sample_seed()},
                {"order", cfg.order_seed()}};
  m["config"] = config_json(cfg, false);
  json rows;
  for (const auto* name : {"child_a", "child_b", "parent", "connected_child", "synthetic_parent", "synthetic_child"})
    rows[name] = load_table(dir, name, cfg.dialect).num_rows();
  m["rows"] = rows;
  m["dropped"] = {{"decode_parent", sample["parent_rejections"]},
                  {"decode_child", sample["child_rejections"]},
                  {"inverse", invert["dropped"]}};
  m["mapping"] = invert["mapping"];
  m["warnings"] = invert["warnings"];
  m["fidelity"] = {{"pairs", report.pairs.size()}, {"ks_p_mean", report.ks.mean}, {"w_dist_mean", report.w.mean}};
  write_json(dir / "manifest.json", m);
}

}  // namespace

void run_stage(const PipelineConfig& config, Stage stage, Session* session) {
  try {
    switch (stage) {
      case Stage::ingest: stage_ingest(config); break;
      case Stage::extract_parent: stage_extract_parent(config); break;
      case Stage::enhance: stage_enhance(config); break;
      case Stage::connect: stage_connect(config); break;
      case Stage::encode: stage_encode(config); break;
      case Stage::fit: stage_fit(config, session); break;
      case Stage::sample: stage_sample(config, session); break;
      case Stage::invert: stage_invert(config); break;
      case Stage::evaluate: stage_evaluate(config); break;
    }
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(to_string(stage)) + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorKind::io, std::string(to_string(stage)) + ": " + e.what());
  }
}

ReportComparison compare_with_baseline(const PipelineConfig& config, const fs::path& baseline_dir) {
  const auto& dir = config.output_dir;
  const auto candidate = score_against(config, dir, dir);
  const auto baseline = score_against(config, dir, baseline_dir);
  auto comparison = compare_reports(candidate, baseline);
  write_file(dir / "comparison.json", to_json(comparison) + "\n");
  write_file(dir / "comparison.csv", to_csv(comparison));
  return comparison;
}

namespace {

struct SingleResult {
  double ks_mean = 0.0, w_mean = 0.0;
  std::optional<ReportComparison> comparison;
};

SingleResult run_single(const PipelineConfig& cfg) {
  Session session;
  for (auto stage : kStages) run_stage(cfg, stage, &session);
  const auto fidelity = read_json(cfg.output_dir / "manifest.json")["fidelity"];
  SingleResult result{fidelity["ks_p_mean"].get<double>(), fidelity["w_dist_mean"].get<double>(), std::nullopt};
  if (cfg.evaluation.compare_flatten) {
    PipelineConfig base = cfg;
    base.output_dir = cfg.output_dir / "flatten_baseline";
    base.connect.method = ConnectConfig::Method::flatten;
    base.evaluation.compare_flatten = false;
    Session base_session;
    for (auto stage : kStages) run_stage(base, stage, &base_session);
    result.comparison = compare_with_baseline(cfg, base.output_dir);
  }
  return result;
}

std::string group_dir_name(std::size_t index, std::size_t total) {
  const auto width = std::to_string(total).size();
  auto digits = std::to_string(index + 1);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "group_" + digits;
}

}  // namespace

void run(const PipelineConfig& config) {
  config.validate();
  RunLock lock(config.output_dir);
  if (config.group_by.empty()) {
    run_single(config);
    return;
  }

  std::vector<std::string> values;
  for (const auto* in : {&config.table_a, &config.table_b}) {
    const auto t = load_csv(in->path, in->schema, config.dialect);
    if (auto c = t.find_column(config.group_by)) {
      auto v = t.column_values(*c);
      values.insert(values.end(), v.begin(), v.end());
    }
  }
  values = ordered_support(std::move(values));

  json groups = json::array();
  std::vector<ReportComparison> comparisons;
  for (std::size_t i = 0; i < values.size(); ++i) {
    PipelineConfig sub = config;
    sub.group_by.clear();
    sub.output_dir = config.output_dir / group_dir_name(i, values.size());
    sub.row_filter = std::pair{config.group_by, values[i]};
    const auto result = [&] {
      try {
        return run_single(sub);
      } catch (const Error& e) {
        throw Error(e.kind(), "group '" + values[i] + "': " + e.what());
      }
    }();
    json g{{"value", values[i]},
           {"dir", sub.output_dir.filename().string()},
           {"ks_p_mean", result.ks_mean},
           {"w_dist_mean", result.w_mean}};
    if (result.comparison) {
      g["comparison"] = json::parse(to_json(*result.comparison));
      comparisons.push_back(*result.comparison);
    }
    groups.push_back(std::move(g));
  }
  write_json(config.output_dir / "groups.json", {{"group_by", config.group_by}, {"groups", groups}});
  if (!comparisons.empty()) write_file(config.output_dir / "ablation.csv", ablation_table(comparisons));
}

}  // namespace greater::pipeline
