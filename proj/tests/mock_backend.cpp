// Scripted backend for protocol tests. Usage: mock_backend <mode>
//   ok         replays the training corpus
//   flaky      like ok, but the first child sentence of subject 0 is garbage
//   version    answers hello with protocol_version 99
//   error      answers train with an error record
//   silent     never answers
//   garbage    answers hello with a non-JSON line
//   badcounts  done reports one row too many

#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <thread>
#include <vector>

using nlohmann::json;

namespace {

void emit(const json& j) { std::cout << j.dump() << '\n' << std::flush; }

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "ok";
  std::vector<std::string> parents;
  std::map<std::string, std::vector<std::string>> children;  // prefix -> texts
  std::string line;
  while (std::getline(std::cin, line)) {
    if (mode == "silent") {
      std::this_thread::sleep_for(std::chrono::seconds(5));
      return 0;
    }
    const auto msg = json::parse(line);
    const auto type = msg.at("type").get<std::string>();
    if (type == "hello") {
      if (mode == "garbage") {
        std::cout << "this is not json\n" << std::flush;
        continue;
      }
      emit({{"type", "hello"}, {"protocol_version", mode == "version" ? 99 : 1}});
    } else if (type == "train") {
      if (mode == "error") {
        emit({{"type", "error"}, {"message", "out of memory"}});
        continue;
      }
      parents = msg.at("parent_corpus").get<std::vector<std::string>>();
      children.clear();
      for (const auto& c : msg.at("child_corpus")) children[c.at("prefix")].push_back(c.at("text"));
      emit({{"type", "ack"}, {"model_id", "mock-" + std::to_string(parents.size())}});
    } else if (type == "sample") {
      const auto n = msg.at("n_subjects").get<std::size_t>();
      std::size_t np = 0, nc = 0;
      for (std::size_t k = 0; k < n && !parents.empty(); ++k) {
        const auto& p = parents[k % parents.size()];
        emit({{"type", "row"}, {"table", "parent"}, {"subject", k}, {"text", p}});
        ++np;
        bool first = true;
        for (const auto& text : children[p]) {
          const bool broken = mode == "flaky" && k == 0 && first;
          emit({{"type", "row"}, {"table", "child"}, {"subject", k}, {"text", broken ? "@@garbage@@" : text}});
          first = false;
          ++nc;
        }
      }
      if (mode == "badcounts") ++nc;
      emit({{"type", "done"}, {"counts", {{"parent", np}, {"child", nc}}}});
    }
  }
  return 0;
}
