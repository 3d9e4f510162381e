#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tgscrape/config.hpp"
#include "tgscrape/timefmt.hpp"

namespace tgscrape {
class SimulatedClock;
}

namespace tgscrape::source {

struct Reaction {
  std::string emoticon;
  std::int64_t count = 1;

  friend bool operator==(const Reaction&, const Reaction&) = default;
};

// A post or reply as handed over by a transport.
struct RawMessage {
  std::int64_t id = 1;
  Timestamp date;
  std::optional<std::string> text;
  std::optional<std::int64_t> author_id;
  std::optional<std::string> post_author;
  std::optional<std::int64_t> views;
  std::optional<std::int64_t> forwards;
  bool has_media = false;
  std::vector<Reaction> reactions;
  // Set when the transport delivered a payload it could not decode. Record
  // construction fails for such messages.
  std::optional<std::string> decode_fault;

  friend bool operator==(const RawMessage&, const RawMessage&) = default;
};

// Pull-style stream. next() returns nullopt at the end and may throw the
// transport's error type at any point.
class MessageStream {
 public:
  virtual ~MessageStream() = default;
  virtual std::optional<RawMessage> next() = 0;
};

class MessageSource {
 public:
  virtual ~MessageSource() = default;

  // Newest first. A non-empty search restricts delivery to matching posts.
  // Throws ChannelError.
  virtual std::unique_ptr<MessageStream> iter_messages(const config::ChannelRef& channel,
                                                       std::string_view search) = 0;

  // The discussion thread under parent_id. Throws ThreadError.
  virtual std::unique_ptr<MessageStream> iter_replies(const config::ChannelRef& channel,
                                                      std::int64_t parent_id) = 0;
};

// ---------------------------------------------------------------------------
// Fixture-backed simulator

struct FixtureMessage {
  RawMessage message;
  std::vector<RawMessage> replies;
  bool fail_thread = false;
  bool fail_message = false;
};

struct FixtureChannel {
  std::string handle;
  std::vector<FixtureMessage> messages;
  bool fail_channel = false;
  // Deliver this many posts, then fail the channel.
  std::optional<std::int64_t> fail_channel_after;
  // Simulated seconds consumed per delivered post or reply.
  double latency_seconds = 0;
};

struct Fixture {
  std::vector<FixtureChannel> channels;
};

// Throws FormatError with a JSON path (and line/column for syntax errors).
Fixture parse_fixture(std::string_view json);
Fixture read_fixture_file(const std::filesystem::path& path);

// Inverse of parse_fixture; used by tests and the fixture generator.
std::string fixture_to_json(const Fixture& fixture);

// Deterministic source over a fixture. Messages and replies are delivered
// newest first; search is a case-insensitive (ASCII folding) substring match
// over the post text.
class SimulatedSource final : public MessageSource {
 public:
  explicit SimulatedSource(Fixture fixture);

  // Routes per-item latency to a simulated clock. Without one, latency is
  // ignored.
  void attach_clock(SimulatedClock* clock) noexcept { clock_ = clock; }

  std::unique_ptr<MessageStream> iter_messages(const config::ChannelRef& channel,
                                               std::string_view search) override;
  std::unique_ptr<MessageStream> iter_replies(const config::ChannelRef& channel,
                                              std::int64_t parent_id) override;

  std::size_t channel_count() const noexcept { return channels_.size(); }
  std::size_t message_count() const;
  const FixtureChannel* find_channel(std::string_view handle) const;

 private:
  std::vector<FixtureChannel> channels_;
  std::map<std::string, std::size_t, std::less<>> by_handle_;
  SimulatedClock* clock_ = nullptr;
};

SimulatedSource load_fixture(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Real transport slot

// Every outbound connection attempt goes through this hook first. Tests
// install a guard that fails to prove simulator runs stay offline.
using NetworkGuard = std::function<void(std::string_view endpoint)>;
void set_network_guard(NetworkGuard guard);
void check_network(std::string_view endpoint);

// Placeholder for an MTProto client adapter. It validates credentials,
// consults the network guard, asks for the login code once, and then reports
// every channel as unavailable because no client library is linked in.
class TelegramSource final : public MessageSource {
 public:
  using CodePrompt = std::function<std::string()>;

  TelegramSource(config::Credentials credentials, CodePrompt prompt);

  std::unique_ptr<MessageStream> iter_messages(const config::ChannelRef& channel,
                                               std::string_view search) override;
  std::unique_ptr<MessageStream> iter_replies(const config::ChannelRef& channel,
                                              std::int64_t parent_id) override;

 private:
  void ensure_session();

  config::Credentials credentials_;
  CodePrompt prompt_;
  bool session_started_ = false;
};

}  // namespace tgscrape::source
