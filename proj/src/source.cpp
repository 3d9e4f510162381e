#include "tgscrape/source.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tgscrape/clock.hpp"
#include "tgscrape/error.hpp"

namespace tgscrape::source {
namespace {

using nlohmann::json;

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

bool newer_first(const RawMessage& a, const RawMessage& b) {
  if (a.date != b.date) return a.date > b.date;
  return a.id > b.id;
}

// ---------------------------------------------------------------------------
// Fixture parsing

class FieldReader {
 public:
  FieldReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(std::string_view key, std::string_view why) const {
    auto where = key.empty() ? path_ : fmt::format("{}.{}", path_, key);
    throw FormatError(fmt::format("fixture {}: {}", where, why));
  }

  const json* find(std::string_view key) const {
    auto it = obj_.find(std::string(key));
    if (it == obj_.end()) return nullptr;
    return &*it;
  }

  const json& require(std::string_view key) const {
    if (auto* v = find(key)) return *v;
    fail(key, "missing");
  }

  std::int64_t integer(std::string_view key, std::int64_t min) const {
    const auto& v = require(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < min)
      fail(key, fmt::format("expected an integer >= {}", min));
    return v.get<std::int64_t>();
  }

  std::optional<std::int64_t> opt_integer(std::string_view key, std::int64_t min) const {
    auto* v = find(key);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_number_integer() || v->get<std::int64_t>() < min)
      fail(key, fmt::format("expected an integer >= {} or null", min));
    return v->get<std::int64_t>();
  }

  std::string text(std::string_view key) const {
    const auto& v = require(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::optional<std::string> opt_text(std::string_view key) const {
    auto* v = find(key);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_string()) fail(key, "expected a string or null");
    return v->get<std::string>();
  }

  bool flag(std::string_view key) const {
    auto* v = find(key);
    if (!v) return false;
    if (!v->is_boolean()) fail(key, "expected true or false");
    return v->get<bool>();
  }

  double number(std::string_view key, double fallback) const {
    auto* v = find(key);
    if (!v) return fallback;
    if (!v->is_number() || v->get<double>() < 0) fail(key, "expected a non-negative number");
    return v->get<double>();
  }

  const json* array(std::string_view key) const {
    auto* v = find(key);
    if (!v) return nullptr;
    if (!v->is_array()) fail(key, "expected an array");
    return v;
  }

  void reject_unknown(std::initializer_list<std::string_view> known) const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (std::find(known.begin(), known.end(), it.key()) == known.end())
        fail(it.key(), "unknown field");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& obj_;
  std::string path_;
};

RawMessage parse_raw(const FieldReader& r) {
  RawMessage m;
  m.id = r.integer("id", 1);
  try {
    m.date = parse_iso_datetime(r.text("date"));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    r.fail("date", e.what());
  }
  m.text = r.opt_text("text");
  m.author_id = r.opt_integer("author_id", std::numeric_limits<std::int64_t>::min());
  m.post_author = r.opt_text("post_author");
  m.views = r.opt_integer("views", 0);
  m.forwards = r.opt_integer("forwards", 0);
  m.has_media = r.flag("has_media");
  if (auto* reactions = r.array("reactions")) {
    for (std::size_t i = 0; i < reactions->size(); ++i) {
      FieldReader rr((*reactions)[i], fmt::format("{}.reactions[{}]", r.path(), i));
      rr.reject_unknown({"emoticon", "count"});
      m.reactions.push_back({rr.text("emoticon"), rr.integer("count", 1)});
    }
  }
  return m;
}

FixtureMessage parse_message(const FieldReader& r) {
  r.reject_unknown({"id", "date", "text", "author_id", "post_author", "views", "forwards",
                    "has_media", "reactions", "replies", "fail_thread", "fail_message"});
  FixtureMessage fm;
  fm.message = parse_raw(r);
  fm.fail_thread = r.flag("fail_thread");
  fm.fail_message = r.flag("fail_message");
  if (auto* replies = r.array("replies")) {
    std::set<std::int64_t> ids;
    for (std::size_t i = 0; i < replies->size(); ++i) {
      FieldReader rr((*replies)[i], fmt::format("{}.replies[{}]", r.path(), i));
      rr.reject_unknown({"id", "date", "text", "author_id", "post_author", "views", "forwards",
                         "has_media", "reactions"});
      auto reply = parse_raw(rr);
      if (!ids.insert(reply.id).second) rr.fail("id", fmt::format("duplicate reply id {}", reply.id));
      fm.replies.push_back(std::move(reply));
    }
    std::stable_sort(fm.replies.begin(), fm.replies.end(), newer_first);
  }
  return fm;
}

FixtureChannel parse_channel(const FieldReader& r) {
  r.reject_unknown({"handle", "messages", "fail_channel", "fail_channel_after", "latency_seconds"});
  FixtureChannel ch;
  try {
    ch.handle = config::ChannelRef::parse(r.text("handle")).handle();
  } catch (const ValidationError& e) {
    r.fail("handle", e.what());
  }
  ch.fail_channel = r.flag("fail_channel");
  ch.fail_channel_after = r.opt_integer("fail_channel_after", 0);
  ch.latency_seconds = r.number("latency_seconds", 0.0);
  std::set<std::int64_t> ids;
  if (auto* messages = r.array("messages")) {
    for (std::size_t i = 0; i < messages->size(); ++i) {
      FieldReader mr((*messages)[i], fmt::format("{}.messages[{}]", r.path(), i));
      auto fm = parse_message(mr);
      if (!ids.insert(fm.message.id).second)
        mr.fail("id", fmt::format("duplicate message id {}", fm.message.id));
      ch.messages.push_back(std::move(fm));
    }
  }
  std::stable_sort(ch.messages.begin(), ch.messages.end(),
                   [](const FixtureMessage& a, const FixtureMessage& b) {
                     return newer_first(a.message, b.message);
                   });
  return ch;
}

json raw_to_json(const RawMessage& m) {
  json j = json::object();
  j["id"] = m.id;
  j["date"] = format_iso_datetime(m.date);
  j["text"] = m.text ? json(*m.text) : json(nullptr);
  j["author_id"] = m.author_id ? json(*m.author_id) : json(nullptr);
  j["post_author"] = m.post_author ? json(*m.post_author) : json(nullptr);
  j["views"] = m.views ? json(*m.views) : json(nullptr);
  j["forwards"] = m.forwards ? json(*m.forwards) : json(nullptr);
  j["has_media"] = m.has_media;
  json reactions = json::array();
  for (const auto& r : m.reactions) reactions.push_back({{"emoticon", r.emoticon}, {"count", r.count}});
  j["reactions"] = std::move(reactions);
  return j;
}

// ---------------------------------------------------------------------------
// Streams

class VectorStream final : public MessageStream {
 public:
  VectorStream(std::vector<RawMessage> items, SimulatedClock* clock, double latency,
               std::optional<std::size_t> fail_after, std::string fail_what)
      : items_(std::move(items)),
        clock_(clock),
        latency_(latency),
        fail_after_(fail_after),
        fail_what_(std::move(fail_what)) {}

  std::optional<RawMessage> next() override {
    if (fail_after_ && pos_ >= *fail_after_) throw ChannelError(fail_what_);
    if (pos_ >= items_.size()) return std::nullopt;
    if (clock_ && latency_ > 0) clock_->advance(Seconds{latency_});
    return items_[pos_++];
  }

 private:
  std::vector<RawMessage> items_;
  std::size_t pos_ = 0;
  SimulatedClock* clock_;
  double latency_;
  std::optional<std::size_t> fail_after_;
  std::string fail_what_;
};

std::mutex g_guard_mutex;
NetworkGuard g_guard;

}  // namespace

Fixture parse_fixture(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("fixture: {}", e.what()));
  }
  if (!doc.is_array()) throw FormatError("fixture: top level must be an array of channels");
  Fixture fx;
  std::set<std::string> handles;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    FieldReader r(doc[i], fmt::format("[{}]", i));
    auto ch = parse_channel(r);
    if (!handles.insert(ch.handle).second) r.fail("handle", fmt::format("duplicate channel {}", ch.handle));
    fx.channels.push_back(std::move(ch));
  }
  return fx;
}

Fixture read_fixture_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot read fixture '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_fixture(buf.str());
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string fixture_to_json(const Fixture& fixture) {
  json doc = json::array();
  for (const auto& ch : fixture.channels) {
    json c = json::object();
    c["handle"] = ch.handle;
    if (ch.fail_channel) c["fail_channel"] = true;
    if (ch.fail_channel_after) c["fail_channel_after"] = *ch.fail_channel_after;
    if (ch.latency_seconds > 0) c["latency_seconds"] = ch.latency_seconds;
    json messages = json::array();
    for (const auto& fm : ch.messages) {
      auto m = raw_to_json(fm.message);
      if (!fm.replies.empty()) {
        json replies = json::array();
        for (const auto& r : fm.replies) replies.push_back(raw_to_json(r));
        m["replies"] = std::move(replies);
      }
      if (fm.fail_thread) m["fail_thread"] = true;
      if (fm.fail_message) m["fail_message"] = true;
      messages.push_back(std::move(m));
    }
    c["messages"] = std::move(messages);
    doc.push_back(std::move(c));
  }
  return doc.dump(1);
}

SimulatedSource::SimulatedSource(Fixture fixture) : channels_(std::move(fixture.channels)) {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    auto& ch = channels_[i];
    ch.handle = config::ChannelRef::parse(ch.handle).handle();
    std::stable_sort(ch.messages.begin(), ch.messages.end(),
                     [](const FixtureMessage& a, const FixtureMessage& b) {
                       return newer_first(a.message, b.message);
                     });
    for (auto& fm : ch.messages) std::stable_sort(fm.replies.begin(), fm.replies.end(), newer_first);
    by_handle_.emplace(ch.handle, i);
  }
}

std::size_t SimulatedSource::message_count() const {
  std::size_t n = 0;
  for (const auto& ch : channels_) n += ch.messages.size();
  return n;
}

const FixtureChannel* SimulatedSource::find_channel(std::string_view handle) const {
  auto it = by_handle_.find(handle);
  return it == by_handle_.end() ? nullptr : &channels_[it->second];
}

std::unique_ptr<MessageStream> SimulatedSource::iter_messages(const config::ChannelRef& channel,
                                                              std::string_view search) {
  const auto* ch = find_channel(channel.handle());
  if (!ch) throw ChannelError(fmt::format("Cannot find any entity corresponding to \"{}\"", channel.handle()));
  if (ch->fail_channel) throw ChannelError("simulated channel failure");

  const auto needle = ascii_lower(search);
  std::vector<RawMessage> items;
  for (const auto& fm : ch->messages) {
    if (!needle.empty()) {
      if (!fm.message.text || ascii_lower(*fm.message.text).find(needle) == std::string::npos)
        continue;
    }
    auto m = fm.message;
    if (fm.fail_message) m.decode_fault = "simulated message decode failure";
    items.push_back(std::move(m));
  }
  std::optional<std::size_t> fail_after;
  if (ch->fail_channel_after) fail_after = static_cast<std::size_t>(*ch->fail_channel_after);
  return std::make_unique<VectorStream>(std::move(items), clock_, ch->latency_seconds, fail_after,
                                        "simulated channel failure mid-stream");
}

std::unique_ptr<MessageStream> SimulatedSource::iter_replies(const config::ChannelRef& channel,
                                                             std::int64_t parent_id) {
  const auto* ch = find_channel(channel.handle());
  if (!ch) throw ThreadError(fmt::format("unknown channel {}", channel.handle()));
  std::vector<RawMessage> items;
  for (const auto& fm : ch->messages) {
    if (fm.message.id != parent_id) continue;
    if (fm.fail_thread) throw ThreadError("simulated discussion thread failure");
    items = fm.replies;
    break;
  }
  return std::make_unique<VectorStream>(std::move(items), clock_, ch->latency_seconds,
                                        std::nullopt, std::string{});
}

SimulatedSource load_fixture(const std::filesystem::path& path) {
  return SimulatedSource(read_fixture_file(path));
}

void set_network_guard(NetworkGuard guard) {
  std::lock_guard lock(g_guard_mutex);
  g_guard = std::move(guard);
}

void check_network(std::string_view endpoint) {
  NetworkGuard guard;
  {
    std::lock_guard lock(g_guard_mutex);
    guard = g_guard;
  }
  if (guard) guard(endpoint);
}

TelegramSource::TelegramSource(config::Credentials credentials, CodePrompt prompt)
    : credentials_(std::move(credentials)), prompt_(std::move(prompt)) {
  config::validate_credentials(credentials_);
}

void TelegramSource::ensure_session() {
  if (session_started_) return;
  check_network("api.telegram.org");
  // FIXME: wire an MTProto client here (login with credentials_, then
  // send_code_request / sign_in using the prompted code).
  if (prompt_) prompt_();
  session_started_ = true;
}

std::unique_ptr<MessageStream> TelegramSource::iter_messages(const config::ChannelRef& channel,
                                                             std::string_view) {
  try {
    ensure_session();
  } catch (const ChannelError&) {
    throw;
  } catch (const std::exception& e) {
    throw ChannelError(e.what());
  }
  throw ChannelError(fmt::format("no Telegram client is linked into this build; cannot read {}",
                                 channel.handle()));
}

std::unique_ptr<MessageStream> TelegramSource::iter_replies(const config::ChannelRef& channel,
                                                            std::int64_t) {
  throw ThreadError(fmt::format("no Telegram client is linked into this build; cannot read {}",
                                channel.handle()));
}

}  // namespace tgscrape::source
