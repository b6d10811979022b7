#pragma once

// On-disk planted inputs plus a config document for pipeline-level tests.

#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>

#include "greater/csv.hpp"
#include "planted.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("greater_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline nlohmann::json base_config() {
  return {{"subject_column", "subject_id"},
          {"tables",
           {{"a", {{"path", "a.csv"}, {"columns", {"gender", "ad", "click"}}}},
            {"b", {{"path", "b.csv"}, {"columns", {"city", "item", "noise"}}}}}},
          {"seed", 7},
          {"output_dir", "out"}};
}

inline void write_tables(const fs::path& dir, const planted::TwoChild& data) {
  greater::write_csv(data.a, dir / "a.csv");
  greater::write_csv(data.b, dir / "b.csv");
}

inline fs::path write_config(const fs::path& dir, const nlohmann::json& config, const std::string& name = "config.json") {
  std::ofstream(dir / name) << config.dump(2) << '\n';
  return dir / name;
}

// Every regular file under root, keyed by relative path.
inline std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), root).string()] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

}  // namespace fixture
