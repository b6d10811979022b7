#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "greater/table.hpp"

namespace greater {

struct OrderPolicy {
  enum class Kind { natural, permuted };
  Kind kind = Kind::natural;
  std::uint64_t seed = 0;

  static OrderPolicy natural() { return {}; }
  static OrderPolicy permuted(std::uint64_t seed) { return {Kind::permuted, seed}; }
};

std::string to_string(const OrderPolicy& policy);

/// "<Column>: <value>" clauses joined by ", ". A permuted policy shuffles the
/// clause order with a stream derived from (seed, row_index).
std::string encode_row(std::span<const std::string> row, const Schema& schema, OrderPolicy order = {},
                       std::size_t row_index = 0);

enum class RejectReason { missing_column, duplicate_column, malformed, invalid_value };

std::string_view to_string(RejectReason reason) noexcept;

struct Rejection {
  RejectReason reason;
  std::string detail;
};

using DecodeResult = std::variant<Row, Rejection>;

/// Schema-anchored parser: a clause value runs until the next ", " that is
/// immediately followed by a declared column name and ": " (longest name wins).
/// Rows come back in schema order.
DecodeResult decode_sentence(std::string_view sentence, const Schema& schema);

struct EncodedCorpus {
  std::vector<std::string> sentences;
  Schema schema;
  OrderPolicy order;
};

EncodedCorpus encode_table(const Table& table, OrderPolicy order = {});

struct RejectionReport {
  std::map<std::string, std::size_t> counts;  // reason -> count
  std::vector<std::pair<std::size_t, Rejection>> details;  // sentence index, rejection

  std::size_t total() const;
};

struct DecodedCorpus {
  Table table;
  RejectionReport report;
};

DecodedCorpus decode_corpus(std::span<const std::string> sentences, const Schema& schema);
DecodedCorpus decode_corpus(const EncodedCorpus& corpus);

// One sentence per line, UTF-8. Sentences containing line breaks are rejected.
void write_corpus(const EncodedCorpus& corpus, const std::filesystem::path& path);
std::vector<std::string> read_corpus(const std::filesystem::path& path);

}  // namespace greater
