#include <doctest.h>

#include <json.hpp>

#include "support/harness.hpp"
#include "support/oracle.hpp"
#include "tgscrape/error.hpp"
#include "tgscrape/textsan.hpp"

using namespace tgscrape;
using namespace tgscrape::engine;
using tgscrape::source::Fixture;
using tgscrape::source::parse_fixture;
using tgscrape::source::RawMessage;

namespace {

RawMessage raw(std::int64_t id, std::int64_t epoch) {
  RawMessage m;
  m.id = id;
  m.date = tgtest::ts(epoch);
  return m;
}

// n posts, one per hour, newest at 2025-01-10 12:00.
Fixture hourly(const std::string& handle, int n) {
  Fixture fx;
  source::FixtureChannel ch;
  ch.handle = handle;
  auto newest = tgtest::epoch_of(2025, 1, 10, 12);
  for (int i = 0; i < n; ++i) {
    source::FixtureMessage fm;
    fm.message = raw(n - i, newest - i * 3600);
    fm.message.text = "post " + std::to_string(n - i);
    ch.messages.push_back(fm);
  }
  fx.channels.push_back(ch);
  return fx;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("render_reactions") {
    CHECK(render_reactions({}) == "");
    std::vector<source::Reaction> one{{"👍", 3}};
    CHECK(render_reactions(one) == "👍 3 ");
    std::vector<source::Reaction> two{{"👍", 3}, {"❤", 1}};
    CHECK(render_reactions(two) == "👍 3 ❤ 1 ");
  }

  TEST_CASE("urls") {
    CHECK(build_message_url("@LulanoTelegram", 42) == "https://t.me/LulanoTelegram/42");
    CHECK(build_message_url("NoAt", 1) == "https://t.me/NoAt/1");
    CHECK(build_message_url("@jairbolsonarobrasil", 10007) == "https://t.me/jairbolsonarobrasil/10007");
    CHECK(build_comment_url("@X", 5, 9) == "https://t.me/X/5?comment=9");
    CHECK(build_comment_url("Y", 1, 1) == "https://t.me/Y/1?comment=1");
    CHECK(build_comment_url("@LulanoTelegram", 42, 101) ==
          "https://t.me/LulanoTelegram/42?comment=101");
  }

  TEST_CASE("comment record mapping") {
    auto r = raw(9, tgtest::epoch_of(2024, 11, 2, 8, 15));
    r.text = "ok";
    auto c = build_comment_record(r, "@X", 5);
    CHECK_FALSE(c.media);
    CHECK(c.reactions == "");
    CHECK(c.url == "https://t.me/X/5?comment=9");
    CHECK(c.date == "2024-11-02 08:15:00");
    r.has_media = true;
    r.reactions = {{"🔥", 2}};
    c = build_comment_record(r, "@X", 5);
    CHECK(c.media);
    CHECK(c.reactions == "🔥 2 ");
  }

  TEST_CASE("message record mapping") {
    auto r = raw(42, tgtest::epoch_of(2025, 1, 1));
    r.text = "hello";
    r.views = 100;
    r.forwards = 2;
    auto m = build_message_record(r, "@X", {});
    CHECK(m.views == 100);
    CHECK(m.shares == 2);
    CHECK(m.comments_list == "[]");
    CHECK(m.url == "https://t.me/X/42");

    r.text.reset();
    CHECK(build_message_record(r, "@X", {}).content == "");

    std::vector<CommentRecord> cs{build_comment_record(raw(1, 0), "@X", 42),
                                  build_comment_record(raw(2, 0), "@X", 42)};
    auto with = build_message_record(r, "@X", cs);
    CHECK(nlohmann::json::parse(with.comments_list).size() == 2);

    r.decode_fault = "bad";
    CHECK_THROWS_AS(build_message_record(r, "@X", {}), MessageError);
  }

  TEST_CASE("cap stops the run at exactly max_t_index records") {
    tgtest::Rig rig(hourly("@X", 100));
    auto s = rig.run(tgtest::make_job({.channels = {"@X"}, .max_t_index = 10}));
    CHECK(s.t_index == 10);
    auto finals = rig.sink.with_prefix("FINAL_");
    REQUIRE(finals.size() == 1);
    CHECK(finals[0].filename == "FINAL_Test_with_00010.parquet");
    CHECK(finals[0].rows.size() == 10);
    CHECK(finals[0].rows.front().message_id == 100);
    CHECK(finals[0].rows.back().message_id == 91);
  }

  TEST_CASE("a window excluding everything yields a header-only final file") {
    tgtest::Rig rig(hourly("@X", 20));
    auto s = rig.run(tgtest::make_job({.channels = {"@X"}, .date_min = "2023-01-01", .date_max = "2023-06-01"}));
    CHECK(s.t_index == 0);
    REQUIRE(rig.sink.with_prefix("FINAL_").size() == 1);
    CHECK(rig.sink.with_prefix("FINAL_")[0].rows.empty());
    CHECK(rig.console.str().find("#Concluded! #00000 posts were scraped!") != std::string::npos);
  }

  TEST_CASE("older posts end the channel early") {
    // Window is Jan 10 only; newest post at 12:00, one per hour going back.
    tgtest::Rig rig(hourly("@X", 48));
    auto s = rig.run(tgtest::make_job({.channels = {"@X"}, .date_min = "2025-01-10", .date_max = "2025-01-10"}));
    // Bounds are midnight-inclusive: only the 00:00 post on Jan 10 qualifies.
    CHECK(s.t_index == 1);
  }

  TEST_CASE("search filters posts") {
    tgtest::Rig rig(hourly("@X", 30));
    auto s = rig.run(tgtest::make_job({.channels = {"@X"}, .key_search = "POST 2"}));
    // "post 2" and "post 20".."post 29".
    CHECK(s.t_index == 11);
  }

  TEST_CASE("pacing injects the missing part of the minute") {
    auto fx = hourly("@X", 5);
    fx.channels[0].latency_seconds = 1.0;  // 5 posts -> 5 s loop
    auto second = hourly("@Y", 1);
    second.channels[0].latency_seconds = 300.0;
    fx.channels.push_back(second.channels[0]);
    tgtest::Rig rig(fx);
    rig.run(tgtest::make_job({.channels = {"@X", "@Y"}}));
    REQUIRE(rig.clock.sleeps().size() == 1);
    CHECK(rig.clock.sleeps()[0].count() == 55.0);
  }

  TEST_CASE("deadline crossing mid-channel still writes the final file") {
    auto fx = hourly("@X", 100);
    fx.channels[0].latency_seconds = 10.0;
    auto other = hourly("@Y", 5);
    fx.channels.push_back(other.channels[0]);
    tgtest::Rig rig(fx);
    auto s = rig.run(tgtest::make_job({.channels = {"@X", "@Y"}, .time_limit = 95}));
    // Elapsed passes 95 s once the tenth post has been delivered.
    CHECK(s.t_index == 10);
    CHECK(s.per_channel.size() == 1);
    CHECK(rig.sink.with_prefix("FINAL_").size() == 1);
    CHECK(rig.sink.with_prefix("FINAL_")[0].rows.size() == 10);
  }

  TEST_CASE("interrupt stops between posts and still writes the final file") {
    std::atomic<bool> stop{true};
    tgtest::Rig rig(hourly("@X", 10));
    RunOptions opt;
    opt.interrupt = &stop;
    auto s = rig.run(tgtest::make_job({.channels = {"@X"}}), opt);
    CHECK(s.interrupted);
    CHECK(s.t_index == 0);
    CHECK(rig.sink.with_prefix("FINAL_").size() == 1);
    CHECK(rig.clock.sleeps().empty());
  }

  TEST_CASE("fault containment with the three logged phrases") {
    auto fx = parse_fixture(R"([
      {"handle": "@A", "messages": [
        {"id": 1, "date": "2025-01-01T00:00:00Z", "text": "one"},
        {"id": 2, "date": "2025-01-02T00:00:00Z", "text": "two", "fail_message": true},
        {"id": 3, "date": "2025-01-03T00:00:00Z", "text": "three", "fail_thread": true,
         "replies": [{"id": 30, "date": "2025-01-03T01:00:00Z", "text": "lost"}]}]},
      {"handle": "@B", "fail_channel": true, "messages": []},
      {"handle": "@C", "messages": [{"id": 1, "date": "2025-01-01T00:00:00Z"}]}
    ])");
    tgtest::Rig rig(fx);
    auto s = rig.run(tgtest::make_job({.channels = {"@A", "@B", "@C"}}));
    CHECK(s.t_index == 3);
    REQUIRE(s.per_channel.size() == 3);
    CHECK(s.per_channel[0].status == ChannelStatus::ok);
    CHECK(s.per_channel[0].c_index == 2);
    CHECK(s.per_channel[1].status == ChannelStatus::error);
    CHECK(s.per_channel[2].status == ChannelStatus::ok);
    auto rows = rig.sink.with_prefix("FINAL_")[0].rows;
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].message_id == 3);
    CHECK(rows[0].comments_list == "[]");
    CHECK(rows[1].message_id == 1);
    auto log = rig.console.str();
    CHECK(log.find("Error processing comments: simulated discussion thread failure\n") != std::string::npos);
    CHECK(log.find("Error processing message: simulated message decode failure\n") != std::string::npos);
    CHECK(log.find("@B error: simulated channel failure\n") != std::string::npos);
    CHECK(log.find("#### @A was ok with 00002 posts ####") != std::string::npos);
    CHECK(log.find("#### @B was ok") == std::string::npos);
    // No partial for the failed channel.
    CHECK(rig.sink.with_prefix("complete_").size() == 2);
  }

  TEST_CASE("channel failing mid-stream keeps what it already archived") {
    auto fx = hourly("@X", 10);
    fx.channels[0].fail_channel_after = 4;
    tgtest::Rig rig(fx);
    auto s = rig.run(tgtest::make_job({.channels = {"@X"}}));
    CHECK(s.t_index == 4);
    CHECK(s.per_channel[0].status == ChannelStatus::error);
    CHECK(rig.sink.with_prefix("FINAL_")[0].rows.size() == 4);
  }

  TEST_CASE("checkpoints are cumulative snapshots") {
    auto fx = hourly("@X", 25);
    tgtest::Rig rig(fx);
    RunOptions opt;
    opt.checkpoint.interval = 10;
    auto s = rig.run(tgtest::make_job({.channels = {"@X"}}), opt);
    auto backups = rig.sink.with_prefix("backup_");
    REQUIRE(backups.size() == 2);
    CHECK(backups[0].filename == "backup_Test_until_00010_@X_ID0000016.parquet");
    CHECK(backups[1].rows.size() == 20);
    auto final_rows = rig.sink.with_prefix("FINAL_")[0].rows;
    CHECK(std::equal(backups[1].rows.begin(), backups[1].rows.end(), final_rows.begin()));
    CHECK(std::equal(backups[0].rows.begin(), backups[0].rows.end(), backups[1].rows.begin()));
    CHECK(s.files_written.size() == 4);
  }

  TEST_CASE("budget denial skips the channel without pacing") {
    tgtest::Rig rig(hourly("@X", 3));
    rig.budget = governor::BudgetState(1, 86400);
    rig.budget.admit_channel("@other", rig.clock.now());
    auto s = rig.run(tgtest::make_job({.channels = {"@X"}}));
    REQUIRE(s.per_channel.size() == 1);
    CHECK(s.per_channel[0].status == ChannelStatus::skipped_budget);
    CHECK(s.t_index == 0);
    CHECK(rig.clock.sleeps().empty());
    CHECK(rig.console.str().find("@X skipped: community budget exhausted, retry after 86400 s") !=
          std::string::npos);
  }

  TEST_CASE("final write failure escapes as SinkError") {
    tgtest::Rig rig(hourly("@X", 3));
    rig.sink.fail_on("FINAL_");
    CHECK_THROWS_AS(rig.run(tgtest::make_job({.channels = {"@X"}})), SinkError);
  }

  TEST_CASE("partial write failure is contained") {
    tgtest::Rig rig(hourly("@X", 3));
    rig.sink.fail_on("complete_");
    auto s = rig.run(tgtest::make_job({.channels = {"@X"}}));
    CHECK(s.per_channel[0].status == ChannelStatus::error);
    CHECK(rig.console.str().find("@X error: disk full") != std::string::npos);
  }

  TEST_CASE("progress blocks and banners") {
    tgtest::Rig rig(hourly("@X", 3));
    rig.run(tgtest::make_job({.channels = {"@X"}}));
    auto log = rig.console.str();
    CHECK(count_of(log, "Total: ") == 3);
    CHECK(log.find("From @X: 00001 contents of 00004") != std::string::npos);
    CHECK(log.find("Id: 00003 / Date: 2025-01-10 12:00:00") != std::string::npos);
  }

  TEST_CASE("engine output matches the oracle on random fixtures") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      tgtest::GenOptions opt;
      opt.fail_thread_probability = 0.05;
      opt.fail_message_probability = 0.05;
      auto fx = tgtest::random_fixture(seed, opt);
      std::string needle = seed % 3 == 0 ? "urna" : "";
      tgtest::Rig rig(fx);
      auto job = tgtest::make_job({.channels = tgtest::handles_of(fx), .date_min = "2024-10-01",
                                   .date_max = "2024-12-31", .key_search = needle});
      auto s = rig.run(job);
      auto expected = tgtest::oracle_rows(fx, tgtest::handles_of(fx), tgtest::epoch_of(2024, 10, 1),
                                          tgtest::epoch_of(2024, 12, 31), needle, 1'000'000);
      auto rows = rig.sink.with_prefix("FINAL_")[0].rows;
      REQUIRE(rows.size() == expected.size());
      CHECK(s.t_index == static_cast<std::int64_t>(rows.size()));
      std::int64_t sum = 0;
      for (const auto& c : s.per_channel) sum += c.c_index;
      CHECK(sum == s.t_index);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto diff = tgtest::compare_row(expected[i], rows[i]);
        CHECK_MESSAGE(diff.empty(), "seed ", seed, ": ", diff);
        CHECK(rows[i].url.find('@') == std::string::npos);
      }
    }
  }
}
