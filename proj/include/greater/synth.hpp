#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "greater/table.hpp"
#include "greater/textual.hpp"

namespace greater {

enum class BackendKind { baseline, identity, external };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind parse_backend(std::string_view text);

struct ExternalEndpoint {
  std::vector<std::string> command;  // argv of the backend process
  std::chrono::milliseconds handshake_timeout{30000};
  std::chrono::milliseconds timeout{3600000};
};

inline constexpr int kDefaultEpochs = 10;
inline constexpr int kDefaultBatches = 5;

struct SynthesizerConfig {
  BackendKind backend = BackendKind::baseline;
  ExternalEndpoint endpoint;
  int epochs = kDefaultEpochs;
  int batches = kDefaultBatches;
  std::size_t sample_count = 1;  // synthetic subjects per sample call
  std::uint64_t seed = 0;
  OrderPolicy order;

  void validate() const;
};

/// State captured by fit: training schemas and, for the in-process backends,
/// the parent rows and per-subject child rows.
struct TrainedModel {
  BackendKind backend = BackendKind::baseline;
  std::string fingerprint;  // parent and child schema fingerprints
  Table parent;
  Table child;
  std::string model_id;     // external backends only
};

struct SampleOutput {
  Table parent;
  Table child;
  RejectionReport parent_rejections;
  RejectionReport child_rejections;
};

/// Synthesizer over (parent, child) table pairs.
///
/// baseline: picks source parents uniformly with replacement and bootstraps each
///   source subject's child rows (same count, with replacement).
/// identity: replays training rows in order under fresh subject IDs.
/// external: speaks the line protocol with a spawned backend process; parent
///   and child rows travel as encoded sentences without the subject column, and
///   each child sentence carries its parent sentence as a conditioning prefix.
class Synthesizer {
 public:
  explicit Synthesizer(SynthesizerConfig config);
  ~Synthesizer();
  Synthesizer(Synthesizer&&) noexcept;
  Synthesizer& operator=(Synthesizer&&) noexcept;

  const SynthesizerConfig& config() const noexcept { return config_; }
  bool fitted() const noexcept { return model_.has_value(); }
  const TrainedModel& model() const;

  void fit(const Table& parent, const Table& child);
  // Reconnects to a model trained earlier by an external backend.
  void attach_external(std::string model_id, const Schema& parent_schema, const Schema& child_schema);

  SampleOutput sample(std::size_t n_subjects, std::uint64_t seed);
  SampleOutput sample() { return sample(config_.sample_count, config_.seed); }

 private:
  struct External;

  SampleOutput sample_baseline(std::size_t n, std::uint64_t seed) const;
  SampleOutput sample_identity(std::size_t n) const;
  SampleOutput sample_external(std::size_t n, std::uint64_t seed);
  External& connect();

  SynthesizerConfig config_;
  std::optional<TrainedModel> model_;
  std::unique_ptr<External> external_;
};

// Fresh synthetic subject IDs: "syn_" + zero-padded 1-based index.
std::string synthetic_subject_id(std::size_t index, std::size_t total);

}  // namespace greater
