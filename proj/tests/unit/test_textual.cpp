#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "../support/planted.hpp"
#include "greater/error.hpp"
#include "greater/random.hpp"
#include "greater/textual.hpp"

using namespace greater;

namespace {

Schema lunch_schema() {
  Schema s{{"Name", Modality::categorical, Role::subject_id}};
  for (auto c : {"Lunch", "Dinner", "Access Device", "Genre"}) s.push_back({c, Modality::categorical, Role::payload});
  return s;
}

const Row grace{"Grace", "1", "2", "1", "1"};

RejectReason reason_of(const DecodeResult& r) {
  REQUIRE(std::holds_alternative<Rejection>(r));
  return std::get<Rejection>(r).reason;
}

}  // namespace

TEST_CASE("natural-order encoding") {
  CHECK(encode_row(grace, lunch_schema()) == "Name: Grace, Lunch: 1, Dinner: 2, Access Device: 1, Genre: 1");
  Schema one{{"Col", Modality::categorical, Role::payload}};
  const Row v{"v"};
  CHECK(encode_row(v, one) == "Col: v");
  const Row short_row{"Grace"};
  CHECK_THROWS_AS(encode_row(short_row, lunch_schema()), Error);
}

TEST_CASE("permuted encoding is deterministic and keeps every clause") {
  const auto a = encode_row(grace, lunch_schema(), OrderPolicy::permuted(4), 7);
  CHECK(a == encode_row(grace, lunch_schema(), OrderPolicy::permuted(4), 7));
  bool differs = false;
  for (std::size_t r = 0; r < 20; ++r)
    differs |= encode_row(grace, lunch_schema(), OrderPolicy::permuted(4), r) != encode_row(grace, lunch_schema());
  CHECK(differs);
  for (std::size_t r = 0; r < 50; ++r) {
    auto decoded = decode_sentence(encode_row(grace, lunch_schema(), OrderPolicy::permuted(9), r), lunch_schema());
    REQUIRE(std::holds_alternative<Row>(decoded));
    CHECK(std::get<Row>(decoded) == grace);
  }
  CHECK(to_string(OrderPolicy::natural()) == "natural");
}

TEST_CASE("decode_sentence round-trips and anchors on declared names") {
  auto r = decode_sentence("Name: Grace, Lunch: 1, Dinner: 2, Access Device: 1, Genre: 1", lunch_schema());
  CHECK(std::get<Row>(r) == grace);

  // a comma inside a value survives when no column name follows it
  auto comma = decode_sentence("Name: Grace, Lunch: rice, beans, Dinner: 2, Access Device: 1, Genre: 1", lunch_schema());
  CHECK(std::get<Row>(comma)[1] == "rice, beans");

  Schema nested{{"id", Modality::categorical, Role::subject_id},
                {"Access", Modality::categorical, Role::payload},
                {"Access Device", Modality::categorical, Role::payload}};
  auto longest = decode_sentence("id: x, Access Device: 3, Access: 4", nested);
  CHECK(std::get<Row>(longest) == Row{"x", "4", "3"});
  CHECK(std::get<Row>(decode_sentence("id: x, Access: , Access Device: ", nested)) == Row{"x", "", ""});
}

TEST_CASE("decode_sentence rejections") {
  CHECK(reason_of(decode_sentence("Name: Grace, Lunch: 1, Dinner: 2, Access Device: 1", lunch_schema())) ==
        RejectReason::missing_column);
  CHECK(reason_of(decode_sentence("Name: Grace, Lunch: 1, Lunch: 2, Dinner: 2, Access Device: 1, Genre: 1",
                                  lunch_schema())) == RejectReason::duplicate_column);
  CHECK(reason_of(decode_sentence("", lunch_schema())) == RejectReason::malformed);
  CHECK(reason_of(decode_sentence("garbage text", lunch_schema())) == RejectReason::malformed);
  CHECK(reason_of(decode_sentence("Name: , Lunch: 1, Dinner: 2, Access Device: 1, Genre: 1", lunch_schema())) ==
        RejectReason::invalid_value);

  Schema num{{"id", Modality::categorical, Role::subject_id}, {"age", Modality::numerical, Role::payload}};
  CHECK(reason_of(decode_sentence("id: a, age: old", num)) == RejectReason::invalid_value);
  CHECK(std::get<Row>(decode_sentence("id: a, age: 41.5", num)) == Row{"a", "41.5"});
  CHECK(to_string(RejectReason::duplicate_column) == "duplicate_column");
}

TEST_CASE("corpus: cardinality, 97 of 100 and empty input") {
  std::vector<Row> rows;
  for (int i = 0; i < 100; ++i) rows.push_back({"s" + std::to_string(i), std::to_string(i % 7)});
  auto t = planted::make({"x"}, rows);
  auto corpus = encode_table(t);
  CHECK(corpus.sentences.size() == 100);
  CHECK(decode_corpus(corpus).table == t);

  for (auto i : {5, 50, 95}) corpus.sentences[static_cast<std::size_t>(i)] = "not a row";
  auto decoded = decode_corpus(corpus);
  CHECK(decoded.table.num_rows() == 97);
  CHECK(decoded.report.counts == std::map<std::string, std::size_t>{{"malformed", 3}});
  CHECK(decoded.report.total() == 3);
  CHECK(decoded.report.details[1].first == 50);

  auto empty = decode_corpus(std::vector<std::string>{}, t.schema());
  CHECK(empty.table.num_rows() == 0);
  CHECK(empty.report.counts.empty());
}

TEST_CASE("corpus files") {
  const auto dir = std::filesystem::temp_directory_path() / "greater_textual_test";
  std::filesystem::create_directories(dir);
  auto t = planted::make({"x"}, {{"a", "1"}, {"b", "2"}});
  auto corpus = encode_table(t);
  write_corpus(corpus, dir / "c.txt");
  CHECK(read_corpus(dir / "c.txt") == corpus.sentences);
  auto bad = encode_table(planted::make({"x"}, {{"a", "two\nlines"}}));
  CHECK_THROWS_AS(write_corpus(bad, dir / "bad.txt"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("property: round-trip over random safe cells and orders") {
  Rng rng(99);
  const std::string alphabet = "abc ,:;-.1";
  for (int trial = 0; trial < 300; ++trial) {
    const auto ncols = 1 + rng.index(5);
    Schema schema{{"id", Modality::categorical, Role::subject_id}};
    for (std::size_t c = 0; c < ncols; ++c) schema.push_back({"col" + std::to_string(c), Modality::categorical, Role::payload});
    Row row{"s" + std::to_string(rng.index(10))};
    for (std::size_t c = 0; c < ncols; ++c) {
      std::string cell;
      for (std::size_t k = 0, n = rng.index(8); k < n; ++k) cell += alphabet[rng.index(alphabet.size())];
      // trim so the cell has no leading or trailing whitespace
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      while (!cell.empty() && cell.back() == ' ') cell.pop_back();
      row.push_back(cell);
    }
    const auto order = rng.index(2) ? OrderPolicy::permuted(rng.next()) : OrderPolicy::natural();
    const auto sentence = encode_row(row, schema, order, static_cast<std::size_t>(trial));
    auto decoded = decode_sentence(sentence, schema);
    REQUIRE(std::holds_alternative<Row>(decoded));
    REQUIRE(std::get<Row>(decoded) == row);
  }
}
