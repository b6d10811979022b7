#include <doctest.h>

#include "../support/planted.hpp"
#include "greater/contextual.hpp"
#include "greater/error.hpp"

using namespace greater;

TEST_CASE("gender constant across visits is contextual") {
  auto child = planted::make({"gender", "birth", "visit"}, {{"Grace", "F", "1990", "a"},
                                                            {"Grace", "F", "1990", "b"},
                                                            {"Yin", "M", "1985", "a"},
                                                            {"Yin", "M", "1985", "c"},
                                                            {"Yin", "M", "1985", "b"}});
  auto report = detect_contextual(child);
  REQUIRE(report.columns.size() == 3);
  CHECK(report.columns[0].fraction == 1.0);
  CHECK(report.columns[0].is_contextual);
  CHECK(report.columns[1].is_contextual);
  CHECK(report.columns[2].fraction == 0.0);
  CHECK(report.contextual_columns() == std::vector<std::string>{"gender", "birth"});
  CHECK(report.subjects == 2);

  auto extraction = extract_parent(child, report.contextual_columns());
  CHECK(extraction.parent.num_rows() == 2);
  CHECK(extraction.parent.row(0) == Row{"Grace", "F", "1990"});
  CHECK(extraction.residual_child.column_names() == std::vector<std::string>{"subject_id", "visit"});
  CHECK(extraction.residual_child.num_rows() == 5);
}

TEST_CASE("one varying subject out of ten at m = 0.95") {
  std::vector<Row> rows;
  for (int s = 0; s < 10; ++s) {
    rows.push_back({"s" + std::to_string(s), "x"});
    rows.push_back({"s" + std::to_string(s), s == 3 ? "y" : "x"});
  }
  auto report = detect_contextual(planted::make({"c"}, rows), 0.95);
  CHECK(report.columns[0].fraction == doctest::Approx(0.9).epsilon(1e-15));
  CHECK_FALSE(report.columns[0].is_contextual);
  CHECK(detect_contextual(planted::make({"c"}, rows), 0.9).columns[0].is_contextual);
}

TEST_CASE("single-row subjects are vacuously constant") {
  auto child = planted::make({"a", "b"}, {{"s1", "1", "2"}, {"s2", "3", "4"}});
  for (double m : {0.01, 0.5, 1.0}) CHECK(detect_contextual(child, m).contextual_columns().size() == 2);
}

TEST_CASE("empty contextual set gives the distinct subject column") {
  auto child = planted::make({"a"}, {{"s1", "1"}, {"s2", "3"}, {"s1", "4"}});
  auto e = extract_parent(child, {});
  CHECK(e.parent.column_names() == std::vector<std::string>{"subject_id"});
  CHECK(e.parent.num_rows() == 2);
  CHECK(e.residual_child == child);
}

TEST_CASE("parent keeps the per-subject mode, ties to the smallest label") {
  auto child = planted::make({"c"}, {{"s1", "A"}, {"s1", "A"}, {"s1", "B"}, {"s2", "Z"}, {"s2", "B"}});
  const std::vector<std::string> cols{"c"};
  auto e = extract_parent(child, cols);
  CHECK(e.parent.row(0) == Row{"s1", "A"});
  CHECK(e.parent.row(1) == Row{"s2", "B"});
}

TEST_CASE("detect_contextual preconditions") {
  auto child = planted::make({"c"}, {{"s1", "A"}});
  CHECK_THROWS_AS(detect_contextual(child, 0.0), Error);
  CHECK_THROWS_AS(detect_contextual(child, 1.5), Error);
  CHECK_THROWS_AS(detect_contextual(planted::make({"c"}, {})), Error);
  CHECK_THROWS_AS(detect_contextual(planted::make({}, {{"s1"}})), Error);
  const std::vector<std::string> bad{"subject_id"};
  CHECK_THROWS_AS(extract_parent(child, bad), Error);
  const std::vector<std::string> unknown{"nope"};
  CHECK_THROWS_AS(extract_parent(child, unknown), Error);
}

TEST_CASE("merge_parents is an outer join with coalescing") {
  auto p1 = planted::make({"g", "shared"}, {{"s1", "F", ""}, {"s2", "M", "x"}});
  auto p2 = planted::make({"city", "shared"}, {{"s1", "NY", "y"}, {"s3", "LA", "z"}});
  auto m = merge_parents(p1, p2);
  CHECK(m.column_names() == std::vector<std::string>{"subject_id", "g", "shared", "city"});
  REQUIRE(m.num_rows() == 3);
  CHECK(m.row(0) == Row{"s1", "F", "y", "NY"});
  CHECK(m.row(1) == Row{"s2", "M", "x", ""});
  CHECK(m.row(2) == Row{"s3", "", "z", "LA"});
}

TEST_CASE("property: planted contextual partitions are recovered") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto c = planted::contextual_case(seed);
    auto report = detect_contextual(c.child);
    REQUIRE(report.contextual_columns() == c.contextual);
    for (const auto& col : report.columns)
      if (!col.is_contextual) CHECK(col.fraction <= 0.7);
  }
}

TEST_CASE("report json lists every column") {
  auto c = planted::contextual_case(1, 5, 1, 1);
  auto json = to_json(detect_contextual(c.child));
  CHECK(json.find("\"ctx0\"") != std::string::npos);
  CHECK(json.find("\"var0\"") != std::string::npos);
}
