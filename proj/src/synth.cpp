#include "greater/synth.hpp"

#include <unordered_map>
#include <unordered_set>

#include "greater/error.hpp"
#include "greater/protocol.hpp"
#include "greater/random.hpp"

namespace greater {

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::baseline: return "baseline";
    case BackendKind::identity: return "identity";
    case BackendKind::external: return "external";
  }
  return "baseline";
}

BackendKind parse_backend(std::string_view text) {
  if (text == "baseline") return BackendKind::baseline;
  if (text == "identity") return BackendKind::identity;
  if (text == "external") return BackendKind::external;
  fail(ErrorKind::parse, "unknown backend '" + std::string(text) + "' (expected baseline, identity or external)");
}

void SynthesizerConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::validation, "epochs must be >= 1");
  if (batches < 1) fail(ErrorKind::validation, "batches must be >= 1");
  if (sample_count < 1) fail(ErrorKind::validation, "sample_count must be >= 1");
  if (backend == BackendKind::external && endpoint.command.empty())
    fail(ErrorKind::validation, "external backend needs a command");
}

std::string synthetic_subject_id(std::size_t index, std::size_t total) {
  const auto width = std::to_string(std::max<std::size_t>(total, 1)).size();
  auto digits = std::to_string(index + 1);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "syn_" + digits;
}

struct Synthesizer::External {
  External(const ExternalEndpoint& e) : channel(e.command, e.timeout) {}
  protocol::Channel channel;
  Schema parent_payload;
  Schema child_payload;
};

Synthesizer::Synthesizer(SynthesizerConfig config) : config_(std::move(config)) { config_.validate(); }
Synthesizer::~Synthesizer() = default;
Synthesizer::Synthesizer(Synthesizer&&) noexcept = default;
Synthesizer& Synthesizer::operator=(Synthesizer&&) noexcept = default;

const TrainedModel& Synthesizer::model() const {
  if (!model_) fail(ErrorKind::state, "synthesizer has not been fitted");
  return *model_;
}

namespace {

std::string model_fingerprint(const Schema& parent, const Schema& child) {
  return schema_fingerprint(parent) + "|" + schema_fingerprint(child);
}

Schema payload_schema(const Schema& schema) {
  Schema out;
  for (const auto& c : schema)
    if (c.role == Role::payload) out.push_back(c);
  return out;
}

Row payload_cells(const Table& t, std::size_t r) {
  Row out;
  const auto& row = t.row(r);
  for (std::size_t c = 0; c < t.num_columns(); ++c)
    if (t.schema()[c].role == Role::payload) out.push_back(row[c]);
  return out;
}

nlohmann::json schema_json(const Schema& schema) {
  auto arr = nlohmann::json::array();
  for (const auto& c : schema) arr.push_back({{"name", c.name}, {"modality", std::string(to_string(c.modality))}});
  return arr;
}

// Reassembles a full row from payload cells and a subject value.
Row with_subject(const Schema& schema, const Row& payload, const std::string& subject) {
  Row row;
  row.reserve(schema.size());
  std::size_t p = 0;
  for (const auto& c : schema) row.push_back(c.role == Role::subject_id ? subject : payload[p++]);
  return row;
}

}  // namespace

Synthesizer::External& Synthesizer::connect() {
  if (external_) return *external_;
  external_ = std::make_unique<External>(config_.endpoint);
  auto& ch = external_->channel;
  try {
    ch.send(protocol::hello());
    auto reply = ch.receive(config_.endpoint.handshake_timeout);
    protocol::check_record(reply, "hello");
    if (reply.value("protocol_version", -1) != protocol::kVersion)
      fail(ErrorKind::backend, "protocol version mismatch: backend speaks " +
                                   reply.value("protocol_version", nlohmann::json(nullptr)).dump() + ", client " +
                                   std::to_string(protocol::kVersion));
  } catch (const Error& e) {
    const std::string endpoint = ch.endpoint();
    external_.reset();
    fail(ErrorKind::backend, "handshake with backend '" + endpoint + "' failed: " + e.what());
  }
  return *external_;
}

void Synthesizer::fit(const Table& parent, const Table& child) {
  const auto sp = parent.require_subject_column();
  const auto sc = child.require_subject_column();
  if (parent.schema()[sp].name != child.schema()[sc].name)
    fail(ErrorKind::schema, "parent and child use different subject columns");
  std::unordered_map<std::string, std::size_t> parent_row;
  for (std::size_t r = 0; r < parent.num_rows(); ++r)
    if (!parent_row.emplace(parent.cell(r, sp), r).second)
      fail(ErrorKind::validation, "parent table lists subject '" + parent.cell(r, sp) + "' more than once");
  for (std::size_t r = 0; r < child.num_rows(); ++r)
    if (!parent_row.contains(child.cell(r, sc)))
      fail(ErrorKind::validation, "child subject '" + child.cell(r, sc) + "' is missing from the parent table");
  if (parent.empty()) fail(ErrorKind::validation, "cannot fit on an empty parent table");

  TrainedModel model{config_.backend, model_fingerprint(parent.schema(), child.schema()), parent, child, {}};
  if (config_.backend == BackendKind::external) {
    auto& ext = connect();
    ext.parent_payload = payload_schema(parent.schema());
    ext.child_payload = payload_schema(child.schema());
    std::vector<std::string> parent_corpus;
    std::vector<std::string> parent_sentence(parent.num_rows());
    for (std::size_t r = 0; r < parent.num_rows(); ++r) {
      parent_sentence[r] = encode_row(payload_cells(parent, r), ext.parent_payload, config_.order, r);
      parent_corpus.push_back(parent_sentence[r]);
    }
    std::vector<std::pair<std::string, std::string>> child_corpus;
    for (std::size_t r = 0; r < child.num_rows(); ++r) {
      child_corpus.emplace_back(parent_sentence[parent_row.at(child.cell(r, sc))],
                                encode_row(payload_cells(child, r), ext.child_payload, config_.order, r));
    }
    const nlohmann::json schema{{"parent", schema_json(ext.parent_payload)}, {"child", schema_json(ext.child_payload)}};
    ext.channel.send(protocol::train(schema, parent_corpus, child_corpus, config_.epochs, config_.batches,
                                     config_.seed, to_string(config_.order)));
    auto ack = ext.channel.receive();
    protocol::check_record(ack, "ack");
    if (!ack.contains("model_id") || !ack["model_id"].is_string())
      fail(ErrorKind::backend, "protocol violation: ack without string model_id");
    model.model_id = ack["model_id"].get<std::string>();
  }
  model_ = std::move(model);
}

void Synthesizer::attach_external(std::string model_id, const Schema& parent_schema, const Schema& child_schema) {
  if (config_.backend != BackendKind::external)
    fail(ErrorKind::state, "attach_external requires the external backend");
  auto& ext = connect();
  ext.parent_payload = payload_schema(parent_schema);
  ext.child_payload = payload_schema(child_schema);
  model_ = TrainedModel{BackendKind::external, model_fingerprint(parent_schema, child_schema),
                        Table(parent_schema, {}), Table(child_schema, {}), std::move(model_id)};
}

SampleOutput Synthesizer::sample(std::size_t n_subjects, std::uint64_t seed) {
  const auto& m = model();
  if (n_subjects < 1) fail(ErrorKind::validation, "n_subjects must be >= 1");
  SampleOutput out;
  switch (m.backend) {
    case BackendKind::baseline: out = sample_baseline(n_subjects, seed); break;
    case BackendKind::identity: out = sample_identity(n_subjects); break;
    case BackendKind::external: out = sample_external(n_subjects, seed); break;
  }
  if (model_fingerprint(out.parent.schema(), out.child.schema()) != m.fingerprint)
    fail(ErrorKind::state, "synthetic output schema differs from the fitted schema");
  return out;
}

SampleOutput Synthesizer::sample_baseline(std::size_t n, std::uint64_t seed) const {
  const auto& m = *model_;
  const auto sp = m.parent.require_subject_column();
  const auto sc = m.child.require_subject_column();
  const auto index = build_subject_index(m.child);

  Rng rng(seed);
  std::vector<Row> parent_rows, child_rows;
  for (std::size_t k = 0; k < n; ++k) {
    const auto src = static_cast<std::size_t>(rng.index(m.parent.num_rows()));
    const auto id = synthetic_subject_id(k, n);
    Row row = m.parent.row(src);
    row[sp] = id;
    parent_rows.push_back(std::move(row));

    const auto rows = index.rows_of(m.parent.cell(src, sp));
    Rng child_rng(derive_seed(seed, k));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Row crow = m.child.row(rows[child_rng.index(rows.size())]);
      crow[sc] = id;
      child_rows.push_back(std::move(crow));
    }
  }
  return {Table(m.parent.schema(), std::move(parent_rows)), Table(m.child.schema(), std::move(child_rows)), {}, {}};
}

SampleOutput Synthesizer::sample_identity(std::size_t n) const {
  const auto& m = *model_;
  const auto sp = m.parent.require_subject_column();
  const auto sc = m.child.require_subject_column();
  const auto p = m.parent.num_rows();

  std::vector<Row> parent_rows, child_rows;
  for (std::size_t pass = 0; pass * p < n; ++pass) {
    std::unordered_map<std::string, std::string> relabel;
    for (std::size_t src = 0; src < p && pass * p + src < n; ++src) {
      const auto id = synthetic_subject_id(pass * p + src, n);
      relabel.emplace(m.parent.cell(src, sp), id);
      Row row = m.parent.row(src);
      row[sp] = id;
      parent_rows.push_back(std::move(row));
    }
    for (const auto& src : m.child.rows()) {
      auto it = relabel.find(src[sc]);
      if (it == relabel.end()) continue;
      Row row = src;
      row[sc] = it->second;
      child_rows.push_back(std::move(row));
    }
  }
  return {Table(m.parent.schema(), std::move(parent_rows)), Table(m.child.schema(), std::move(child_rows)), {}, {}};
}

SampleOutput Synthesizer::sample_external(std::size_t n, std::uint64_t seed) {
  const auto& m = *model_;
  auto& ext = connect();
  ext.channel.send(protocol::sample(m.model_id, n, seed));

  std::vector<std::pair<std::size_t, std::string>> parents, children;
  while (true) {
    auto rec = ext.channel.receive();
    if (rec.is_object() && rec.value("type", "") == "done") {
      const auto counts = rec.value("counts", nlohmann::json::object());
      if (counts.value("parent", std::size_t{0}) != parents.size() ||
          counts.value("child", std::size_t{0}) != children.size())
        fail(ErrorKind::backend, "protocol violation: done counts do not match streamed rows");
      break;
    }
    protocol::check_record(rec, "row");
    const auto table = rec.value("table", "");
    if ((table != "parent" && table != "child") || !rec.contains("subject") || !rec["subject"].is_number_unsigned() ||
        !rec.contains("text") || !rec["text"].is_string())
      fail(ErrorKind::backend, "protocol violation: malformed row record");
    const auto subject = rec["subject"].get<std::size_t>();
    if (subject >= n) fail(ErrorKind::backend, "protocol violation: subject index out of range");
    (table == "parent" ? parents : children).emplace_back(subject, rec["text"].get<std::string>());
  }

  SampleOutput out;
  std::vector<Row> parent_rows, child_rows;
  std::unordered_set<std::size_t> have_parent;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    const auto& [k, text] = parents[i];
    auto result = decode_sentence(text, ext.parent_payload);
    if (auto* row = std::get_if<Row>(&result); row && have_parent.insert(k).second) {
      parent_rows.push_back(with_subject(m.parent.schema(), *row, synthetic_subject_id(k, n)));
    } else {
      Rejection rej = row ? Rejection{RejectReason::duplicate_column, "second parent row for one subject"}
                          : std::get<Rejection>(result);
      ++out.parent_rejections.counts[std::string(to_string(rej.reason))];
      out.parent_rejections.details.emplace_back(i, std::move(rej));
    }
  }
  for (std::size_t i = 0; i < children.size(); ++i) {
    const auto& [k, text] = children[i];
    auto result = decode_sentence(text, ext.child_payload);
    if (auto* row = std::get_if<Row>(&result); row && have_parent.contains(k)) {
      child_rows.push_back(with_subject(m.child.schema(), *row, synthetic_subject_id(k, n)));
    } else {
      Rejection rej = row ? Rejection{RejectReason::missing_column, "child row without a valid parent"}
                          : std::get<Rejection>(result);
      ++out.child_rejections.counts[row ? "orphan" : std::string(to_string(rej.reason))];
      out.child_rejections.details.emplace_back(i, std::move(rej));
    }
  }
  out.parent = Table(m.parent.schema(), std::move(parent_rows));
  out.child = Table(m.child.schema(), std::move(child_rows));
  return out;
}

}  // namespace greater
