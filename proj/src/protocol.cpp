#include "greater/protocol.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "greater/error.hpp"

namespace greater::protocol {

using nlohmann::json;

json hello() { return {{"type", "hello"}, {"protocol_version", kVersion}}; }

json train(const json& schema, const std::vector<std::string>& parent_corpus,
           const std::vector<std::pair<std::string, std::string>>& child_corpus, int epochs, int batches,
           std::uint64_t seed, const std::string& order) {
  json children = json::array();
  for (const auto& [prefix, text] : child_corpus) children.push_back({{"prefix", prefix}, {"text", text}});
  return {{"type", "train"}, {"schema", schema},   {"parent_corpus", parent_corpus},
          {"child_corpus", children}, {"epochs", epochs}, {"batches", batches},
          {"seed", seed},     {"order", order}};
}

json sample(const std::string& model_id, std::size_t n_subjects, std::uint64_t seed) {
  return {{"type", "sample"}, {"model_id", model_id}, {"n_subjects", n_subjects}, {"seed", seed}};
}

void check_record(const json& record, std::string_view expected_type) {
  if (!record.is_object() || !record.contains("type") || !record["type"].is_string())
    fail(ErrorKind::backend, "protocol violation: record without a string 'type' field");
  const auto type = record["type"].get<std::string>();
  if (type == "error") {
    fail(ErrorKind::backend, "backend error: " + record.value("message", std::string("(no message)")));
  }
  if (type != expected_type)
    fail(ErrorKind::backend, "protocol violation: expected '" + std::string(expected_type) + "', got '" + type + "'");
}

Channel::Channel(std::vector<std::string> command, std::chrono::milliseconds timeout) : timeout_(timeout) {
  if (command.empty()) fail(ErrorKind::validation, "external backend command is empty");
  for (const auto& part : command) endpoint_ += (endpoint_.empty() ? "" : " ") + part;

  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0)
    fail(ErrorKind::backend, "socketpair failed: " + std::string(std::strerror(errno)));
  std::vector<char*> argv;
  for (auto& part : command) argv.push_back(part.data());
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    fail(ErrorKind::backend, "fork failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    ::close(fds[0]);
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[1]);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }
  ::close(fds[1]);
  fd_ = fds[0];
  pid_ = pid;
}

Channel::~Channel() {
  if (fd_ >= 0) ::close(fd_);
  if (pid_ > 0) {
    int status = 0;
    // Give the backend a moment to exit on EOF before forcing it.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }
}

void Channel::send(const json& record) {
  const std::string line = record.dump() + "\n";
  std::size_t off = 0;
  while (off < line.size()) {
    const auto n = ::send(fd_, line.data() + off, line.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorKind::backend, "backend '" + endpoint_ + "' is not accepting input: " + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string Channel::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) fail(ErrorKind::backend, "timed out waiting for backend '" + endpoint_ + "'");
    pollfd p{fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      fail(ErrorKind::backend, "poll failed: " + std::string(std::strerror(errno)));
    }
    if (ready == 0) continue;
    char chunk[65536];
    const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorKind::backend, "read from backend '" + endpoint_ + "' failed: " + std::strerror(errno));
    }
    if (n == 0) fail(ErrorKind::backend, "backend '" + endpoint_ + "' closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

json Channel::receive(std::chrono::milliseconds timeout) {
  const auto line = read_line(timeout);
  try {
    return json::parse(line);
  } catch (const json::parse_error&) {
    fail(ErrorKind::backend, "protocol violation: backend '" + endpoint_ + "' sent a non-JSON line");
  }
}

}  // namespace greater::protocol
