#pragma once

#include <chrono>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace greater::protocol {

inline constexpr int kVersion = 1;

// Message builders for the line-delimited JSON protocol spoken with external
// synthesizer backends. Every record is a single-line JSON object with a
// "type" field.
nlohmann::json hello();
nlohmann::json train(const nlohmann::json& schema, const std::vector<std::string>& parent_corpus,
                     const std::vector<std::pair<std::string, std::string>>& child_corpus, int epochs, int batches,
                     std::uint64_t seed, const std::string& order);
nlohmann::json sample(const std::string& model_id, std::size_t n_subjects, std::uint64_t seed);

// Throws a backend error when the record is malformed or an error record.
void check_record(const nlohmann::json& record, std::string_view expected_type);

/// Bidirectional line channel to a spawned backend process. The child's stdin
/// and stdout are connected to one end of a socket pair; stderr is inherited.
class Channel {
 public:
  Channel(std::vector<std::string> command, std::chrono::milliseconds timeout);
  ~Channel();
  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  void send(const nlohmann::json& record);
  // Next record; throws on timeout, EOF or malformed JSON.
  nlohmann::json receive(std::chrono::milliseconds timeout);
  nlohmann::json receive() { return receive(timeout_); }

  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string read_line(std::chrono::milliseconds timeout);

  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
  int pid_ = -1;
  std::string buffer_;
};

}  // namespace greater::protocol
