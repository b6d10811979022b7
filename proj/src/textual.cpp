#include "greater/textual.hpp"

#include <numeric>
#include <optional>

#include "greater/csv.hpp"
#include "greater/error.hpp"
#include "greater/random.hpp"

namespace greater {

std::string to_string(const OrderPolicy& policy) {
  if (policy.kind == OrderPolicy::Kind::natural) return "natural";
  return "permuted(" + std::to_string(policy.seed) + ")";
}

std::string_view to_string(RejectReason reason) noexcept {
  switch (reason) {
    case RejectReason::missing_column: return "missing_column";
    case RejectReason::duplicate_column: return "duplicate_column";
    case RejectReason::malformed: return "malformed";
    case RejectReason::invalid_value: return "invalid_value";
  }
  return "malformed";
}

std::string encode_row(std::span<const std::string> row, const Schema& schema, OrderPolicy order,
                       std::size_t row_index) {
  if (row.size() != schema.size()) {
    fail(ErrorKind::validation, "row has " + std::to_string(row.size()) + " cells but schema has " +
                                    std::to_string(schema.size()) + " columns");
  }
  std::vector<std::size_t> idx(schema.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (order.kind == OrderPolicy::Kind::permuted) {
    Rng rng(derive_seed(order.seed, row_index));
    rng.shuffle(idx);
  }
  std::string out;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) out += ", ";
    out += schema[idx[k]].name;
    out += ": ";
    out += row[idx[k]];
  }
  return out;
}

namespace {

// Longest declared column whose "<name>: " starts at pos.
std::optional<std::size_t> clause_start(std::string_view s, std::size_t pos, const Schema& schema) {
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& name = schema[c].name;
    if (s.size() - pos < name.size() + 2) continue;
    if (s.compare(pos, name.size(), name) != 0 || s.compare(pos + name.size(), 2, ": ") != 0) continue;
    if (!best || name.size() > schema[*best].name.size()) best = c;
  }
  return best;
}

}  // namespace

DecodeResult decode_sentence(std::string_view s, const Schema& schema) {
  std::vector<std::optional<std::string>> cells(schema.size());
  auto col = clause_start(s, 0, schema);
  if (!col) return Rejection{RejectReason::malformed, "sentence does not start with a declared column"};
  std::size_t pos = 0;
  while (col) {
    const std::size_t value_start = pos + schema[*col].name.size() + 2;
    std::optional<std::size_t> next;
    std::size_t value_end = s.size();
    for (auto h = s.find(", ", value_start); h != std::string_view::npos; h = s.find(", ", h + 1)) {
      if ((next = clause_start(s, h + 2, schema))) {
        value_end = h;
        break;
      }
    }
    if (cells[*col]) return Rejection{RejectReason::duplicate_column, schema[*col].name};
    std::string value(s.substr(value_start, value_end - value_start));
    const auto& spec = schema[*col];
    if (spec.modality == Modality::numerical && !value.empty() && !is_decimal_number(value))
      return Rejection{RejectReason::invalid_value, spec.name + ": '" + value + "' is not a number"};
    if (spec.role == Role::subject_id && value.empty())
      return Rejection{RejectReason::invalid_value, spec.name + ": empty subject ID"};
    cells[*col] = std::move(value);
    pos = value_end + 2;
    col = next;
  }
  Row row;
  row.reserve(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (!cells[c]) return Rejection{RejectReason::missing_column, schema[c].name};
    row.push_back(std::move(*cells[c]));
  }
  return row;
}

EncodedCorpus encode_table(const Table& table, OrderPolicy order) {
  EncodedCorpus corpus{{}, table.schema(), order};
  corpus.sentences.reserve(table.num_rows());
  for (std::size_t r = 0; r < table.num_rows(); ++r)
    corpus.sentences.push_back(encode_row(table.row(r), table.schema(), order, r));
  return corpus;
}

std::size_t RejectionReport::total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : counts) n += c;
  return n;
}

DecodedCorpus decode_corpus(std::span<const std::string> sentences, const Schema& schema) {
  std::vector<Row> rows;
  RejectionReport report;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto result = decode_sentence(sentences[i], schema);
    if (auto* row = std::get_if<Row>(&result)) {
      rows.push_back(std::move(*row));
    } else {
      auto& rej = std::get<Rejection>(result);
      ++report.counts[std::string(to_string(rej.reason))];
      report.details.emplace_back(i, std::move(rej));
    }
  }
  return {Table(schema, std::move(rows)), std::move(report)};
}

DecodedCorpus decode_corpus(const EncodedCorpus& corpus) { return decode_corpus(corpus.sentences, corpus.schema); }

void write_corpus(const EncodedCorpus& corpus, const std::filesystem::path& path) {
  std::string text;
  for (const auto& s : corpus.sentences) {
    if (s.find_first_of("\r\n") != std::string::npos)
      fail(ErrorKind::validation, "sentence contains a line break and cannot be written to a corpus file");
    text += s;
    text += '\n';
  }
  write_file(path, text);
}

std::vector<std::string> read_corpus(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
    pos = end + 1;
  }
  return out;
}

}  // namespace greater
