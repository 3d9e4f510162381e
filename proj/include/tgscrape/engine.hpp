#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgscrape/clock.hpp"
#include "tgscrape/config.hpp"
#include "tgscrape/governor.hpp"
#include "tgscrape/records.hpp"
#include "tgscrape/sink.hpp"
#include "tgscrape/source.hpp"

namespace tgscrape::engine {

// "<emoticon> <count> " per reaction, trailing space included.
std::string render_reactions(std::span<const source::Reaction> reactions);

// "https://t.me/{channel}/{id}" with every "@" removed.
std::string build_message_url(std::string_view channel, std::int64_t message_id);
std::string build_comment_url(std::string_view channel, std::int64_t parent_id,
                              std::int64_t comment_id);

CommentRecord build_comment_record(const source::RawMessage& raw, std::string_view channel,
                                   std::int64_t parent_id);

// Throws MessageError when the raw message carries a decode fault.
MessageRecord build_message_record(const source::RawMessage& raw, std::string_view channel,
                                   std::span<const CommentRecord> comments);

enum class ChannelStatus { ok, error, skipped_budget };
std::string_view to_string(ChannelStatus status);

struct ChannelOutcome {
  std::string handle;
  std::int64_t c_index = 0;
  ChannelStatus status = ChannelStatus::ok;
};

enum class FileKind { backup, partial, final };

struct WrittenFile {
  FileKind kind;
  std::filesystem::path path;
  std::int64_t rows = 0;
};

struct JobSummary {
  std::int64_t t_index = 0;
  std::vector<ChannelOutcome> per_channel;
  std::vector<WrittenFile> files_written;
  double wall_seconds = 0;
  bool interrupted = false;

  std::filesystem::path final_file() const;
};

struct RunOptions {
  governor::PacingPolicy pacing;
  governor::CheckpointPolicy checkpoint;
  // Upper bound on records held in memory; defaults to max_t_index.
  std::optional<std::int64_t> record_ceiling;
  // Polled between posts and channels; when set the run stops and writes the
  // final file.
  const std::atomic<bool>* interrupt = nullptr;
  // Called after every successful admission so the budget can be persisted.
  std::function<void(const governor::BudgetState&)> on_admission;
};

struct Collaborators {
  source::MessageSource& source;
  sink::Sink& sink;
  governor::BudgetState& budget;
  Clock& clock;
  std::ostream& console;
};

// Runs the scrape loop over every channel of the job. Channel, thread and
// message failures are logged and contained; only a failure to write the
// final file escapes (as SinkError).
JobSummary run_job(const config::ValidatedJob& job, Collaborators io,
                   const RunOptions& options = {});

}  // namespace tgscrape::engine
