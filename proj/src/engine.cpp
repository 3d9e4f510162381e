#include "tgscrape/engine.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <ostream>

#include "tgscrape/error.hpp"
#include "tgscrape/progress.hpp"
#include "tgscrape/textsan.hpp"

namespace tgscrape::engine {
namespace {

std::string strip_at(std::string s) {
  std::erase(s, '@');
  return s;
}

bool interrupted(const RunOptions& options) {
  return options.interrupt && options.interrupt->load(std::memory_order_relaxed);
}

}  // namespace

std::string render_reactions(std::span<const source::Reaction> reactions) {
  std::string out;
  for (const auto& r : reactions) {
    out += r.emoticon;
    out += ' ';
    out += std::to_string(r.count);
    out += ' ';
  }
  return out;
}

std::string build_message_url(std::string_view channel, std::int64_t message_id) {
  return strip_at(fmt::format("https://t.me/{}/{}", channel, message_id));
}

std::string build_comment_url(std::string_view channel, std::int64_t parent_id,
                              std::int64_t comment_id) {
  return strip_at(fmt::format("https://t.me/{}/{}?comment={}", channel, parent_id, comment_id));
}

CommentRecord build_comment_record(const source::RawMessage& raw, std::string_view channel,
                                   std::int64_t parent_id) {
  if (raw.decode_fault) throw ThreadError(*raw.decode_fault);
  CommentRecord c;
  c.group = std::string(channel);
  c.author_id = raw.author_id;
  c.content = raw.text.value_or("");
  c.date = format_archive_date(raw.date);
  c.message_id = raw.id;
  c.author = raw.post_author;
  c.views = raw.views;
  c.reactions = render_reactions(raw.reactions);
  c.shares = raw.forwards;
  c.media = raw.has_media;
  c.url = build_comment_url(channel, parent_id, raw.id);
  return c;
}

MessageRecord build_message_record(const source::RawMessage& raw, std::string_view channel,
                                   std::span<const CommentRecord> comments) {
  if (raw.decode_fault) throw MessageError(*raw.decode_fault);
  MessageRecord m;
  m.group = std::string(channel);
  m.author_id = raw.author_id;
  m.content = textsan::sanitize_xml(raw.text);
  m.date = format_archive_date(raw.date);
  m.message_id = raw.id;
  m.author = raw.post_author;
  m.views = raw.views;
  m.reactions = render_reactions(raw.reactions);
  m.shares = raw.forwards;
  m.media = raw.has_media;
  m.url = build_message_url(channel, raw.id);
  m.comments_list = textsan::encode_comments_json(comments);
  return m;
}

std::string_view to_string(ChannelStatus status) {
  switch (status) {
    case ChannelStatus::ok: return "ok";
    case ChannelStatus::error: return "error";
    case ChannelStatus::skipped_budget: return "skipped_budget";
  }
  return "unknown";
}

std::filesystem::path JobSummary::final_file() const {
  for (const auto& f : files_written)
    if (f.kind == FileKind::final) return f.path;
  return {};
}

JobSummary run_job(const config::ValidatedJob& job, Collaborators io, const RunOptions& options) {
  const auto& spec = job.spec();
  auto& out = io.console;
  const auto archive_fmt = io.sink.format();
  const auto cap = std::min(spec.max_t_index, options.record_ceiling.value_or(spec.max_t_index));

  JobSummary summary;
  std::vector<MessageRecord> data;
  std::int64_t t_index = 0;
  const Instant start = io.clock.now();

  auto over_deadline = [&] {
    return governor::deadline_exceeded(start, io.clock.now(), spec.time_limit);
  };
  auto snapshot = [&](FileKind kind, const std::string& filename) {
    auto path = io.sink.write(data, filename);
    summary.files_written.push_back({kind, path, static_cast<std::int64_t>(data.size())});
  };

  for (const auto& channel_ref : spec.channels) {
    if (t_index >= cap) break;
    if (over_deadline()) break;
    if (interrupted(options)) {
      summary.interrupted = true;
      break;
    }
    const auto& channel = channel_ref.handle();

    auto decision = io.budget.admit_channel(channel, io.clock.now());
    if (auto* deny = std::get_if<governor::Deny>(&decision)) {
      fmt::print(out, "{} skipped: community budget exhausted, retry after {:.0f} s\n", channel,
                 deny->retry_after_seconds);
      summary.per_channel.push_back({channel, 0, ChannelStatus::skipped_budget});
      continue;
    }
    if (options.on_admission) options.on_admission(io.budget);

    const Instant loop_start = io.clock.now();
    ChannelOutcome outcome{channel, 0, ChannelStatus::ok};
    try {
      auto stream = io.source.iter_messages(channel_ref, spec.key_search);
      while (auto message = stream->next()) {
        try {
          if (spec.window.contains(message->date)) {
            std::vector<CommentRecord> comments;
            try {
              auto replies = io.source.iter_replies(channel_ref, message->id);
              while (auto reply = replies->next())
                comments.push_back(build_comment_record(*reply, channel, message->id));
            } catch (const std::exception& e) {
              comments.clear();
              fmt::print(out, "Error processing comments: {}\n", e.what());
            }

            data.push_back(build_message_record(*message, channel, comments));
            ++outcome.c_index;
            ++t_index;

            auto snap = progress::estimate_progress(t_index, message->id,
                                                    (io.clock.now() - start).count(), cap);
            snap.display_ceiling = progress::display_ceiling(outcome.c_index, message->id, cap);
            progress::print_progress_block(
                out, {channel, outcome.c_index, t_index, message->id, data.back().date, snap});

            if (governor::should_checkpoint(t_index, options.checkpoint))
              snapshot(FileKind::backup,
                       sink::backup_filename(spec.file_name, t_index, channel, message->id, archive_fmt));

            if (t_index >= cap) break;
            if (over_deadline()) break;
            if (interrupted(options)) {
              summary.interrupted = true;
              break;
            }
          } else if (message->date < spec.window.date_min) {
            break;
          }
        } catch (const std::exception& e) {
          fmt::print(out, "Error processing message: {}\n", e.what());
        }
      }

      fmt::print(out, "\n\n#### {} was ok with {:05} posts ####\n\n\n", channel, outcome.c_index);
      snapshot(FileKind::partial, sink::partial_filename(channel, spec.file_name, t_index, archive_fmt));
    } catch (const std::exception& e) {
      outcome.status = ChannelStatus::error;
      fmt::print(out, "{} error: {}\n", channel, e.what());
    }
    summary.per_channel.push_back(outcome);

    if (summary.interrupted) break;

    const double loop_duration = (io.clock.now() - loop_start).count();
    const double pause = governor::pace_channel_loop(loop_duration, options.pacing);
    if (pause > 0) io.clock.sleep(Seconds{pause});
  }

  fmt::print(out, "\n{0}\n#Concluded! #{1:05} posts were scraped!\n{0}\n\n\n\n", std::string(50, '-'),
             t_index);
  snapshot(FileKind::final, sink::final_filename(spec.file_name, t_index, archive_fmt));

  summary.t_index = t_index;
  summary.wall_seconds = (io.clock.now() - start).count();
  return summary;
}

}  // namespace tgscrape::engine
