#include <doctest.h>

#include <fstream>
#include <map>
#include <random>

#include "support/test_support.hpp"
#include "tgscrape/clock.hpp"
#include "tgscrape/error.hpp"
#include "tgscrape/governor.hpp"

using namespace tgscrape;
using namespace tgscrape::governor;

namespace {

Instant at(double s) { return instant_from_epoch(s); }

std::string handle(int i) { return "@c" + std::to_string(i); }

}  // namespace

TEST_SUITE("governor") {
  TEST_CASE("pacing goldens") {
    PacingPolicy p;
    CHECK(pace_channel_loop(10, p) == 50);
    CHECK(pace_channel_loop(60, p) == 0);
    CHECK(pace_channel_loop(300, p) == 0);
    CHECK(pace_channel_loop(0, p) == 60);
  }

  TEST_CASE("pacing never negative and fills the minimum") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
      PacingPolicy p{std::uniform_real_distribution<double>(0.5, 120)(rng)};
      double d = std::uniform_real_distribution<double>(0, 200)(rng);
      double s = pace_channel_loop(d, p);
      CHECK(s >= 0);
      if (d < p.min_loop_seconds) CHECK(d + s >= p.min_loop_seconds - 1e-9);
    }
  }

  TEST_CASE("checkpoint cadence") {
    CheckpointPolicy c;
    CHECK(should_checkpoint(1000, c));
    CHECK_FALSE(should_checkpoint(999, c));
    CHECK(should_checkpoint(2000, c));
    CHECK_FALSE(should_checkpoint(2001, c));
    for (std::int64_t interval : {1, 3, 7, 1000}) {
      for (std::int64_t n : {1, 10, 999, 2500}) {
        std::int64_t fired = 0;
        for (std::int64_t t = 1; t <= n; ++t) fired += should_checkpoint(t, {interval});
        CHECK(fired == n / interval);
      }
    }
  }

  TEST_CASE("deadline is strict") {
    auto start = at(1000);
    CHECK(deadline_exceeded(start, at(1000 + 21601), 21600));
    CHECK_FALSE(deadline_exceeded(start, at(1000 + 21600), 21600));
    CHECK_FALSE(deadline_exceeded(start, start, 21600));
  }

  TEST_CASE("empty state admits") {
    BudgetState b;
    CHECK(std::holds_alternative<Admit>(b.admit_channel("@A", at(0))));
    CHECK(b.in_window_count(at(0)) == 1);
  }

  TEST_CASE("201st distinct community is denied until the oldest expires") {
    BudgetState b;
    double t0 = 1'700'000'000;
    for (int i = 0; i < 200; ++i)
      REQUIRE(std::holds_alternative<Admit>(b.admit_channel(handle(i), at(t0))));
    auto d = b.admit_channel("@late", at(t0 + 3600));
    REQUIRE(std::holds_alternative<Deny>(d));
    CHECK(std::get<Deny>(d).retry_after_seconds == 23 * 3600.0);
    CHECK(b.in_window_count(at(t0 + 3600)) == 200);
    // Admitted handles stay free while in the window.
    CHECK(std::holds_alternative<Admit>(b.admit_channel(handle(5), at(t0 + 3600))));
    CHECK(b.in_window_count(at(t0 + 3600)) == 200);
    // Exactly at expiry the slots open up again.
    CHECK(std::holds_alternative<Admit>(b.admit_channel("@late", at(t0 + 86400))));
  }

  TEST_CASE("re-admission consumes no budget") {
    BudgetState b(2, 86400);
    CHECK(std::holds_alternative<Admit>(b.admit_channel("@A", at(0))));
    CHECK(std::holds_alternative<Admit>(b.admit_channel("@A", at(7200))));
    CHECK(b.in_window_count(at(7200)) == 1);
    CHECK(std::holds_alternative<Admit>(b.admit_channel("@B", at(7300))));
    CHECK(std::holds_alternative<Deny>(b.admit_channel("@C", at(7400))));
  }

  TEST_CASE("random sequences never exceed the limit") {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 50; ++round) {
      std::int64_t limit = std::uniform_int_distribution<std::int64_t>(1, 20)(rng);
      std::int64_t window = std::uniform_int_distribution<std::int64_t>(10, 1000)(rng);
      BudgetState b(limit, window);
      SimulatedClock clock(at(0));
      std::map<std::string, double> last_admit;
      for (int step = 0; step < 400; ++step) {
        clock.advance(Seconds{std::uniform_real_distribution<double>(0, window / 10.0)(rng)});
        auto h = handle(std::uniform_int_distribution<int>(0, 40)(rng));
        auto now = clock.now();
        auto d = b.admit_channel(h, now);
        CHECK(b.in_window_count(now) <= limit);
        if (auto* deny = std::get_if<Deny>(&d)) {
          CHECK(deny->retry_after_seconds > 0);
          CHECK(deny->retry_after_seconds <= window);
          CHECK(b.in_window_count(now) == limit);
        }
      }
      for (std::size_t i = 1; i < b.admissions().size(); ++i)
        CHECK(b.admissions()[i - 1].admitted_at <= b.admissions()[i].admitted_at);
    }
  }

  TEST_CASE("serialization round trip") {
    BudgetState b(5, 100);
    b.admit_channel("@A", at(1.5));
    b.admit_channel("@B", at(1'700'000'000.25));
    auto text = b.serialize();
    auto back = BudgetState::deserialize(text, 5, 100);
    CHECK(back.admissions() == b.admissions());
    CHECK_THROWS_AS(BudgetState::deserialize("@A 12\n", 5, 100), Error);
  }

  TEST_CASE("state survives a restart through the store") {
    tgtest::TempDir dir;
    auto path = dir / "budget";
    double t0 = 1'700'000'000;
    {
      BudgetStore store(path);
      auto b = store.load(3, 86400);
      CHECK(b.admissions().empty());
      b.admit_channel("@A", at(t0));
      b.admit_channel("@B", at(t0));
      b.admit_channel("@C", at(t0));
      store.save(b);
    }
    BudgetStore store(path);
    auto b = store.load(3, 86400);
    CHECK(b.admissions().size() == 3);
    auto d = b.admit_channel("@D", at(t0 + 60));
    REQUIRE(std::holds_alternative<Deny>(d));
    CHECK(std::get<Deny>(d).retry_after_seconds == 86400 - 60);
    CHECK(std::holds_alternative<Admit>(b.admit_channel("@B", at(t0 + 60))));
  }

  TEST_CASE("a second store on the same file is refused") {
    tgtest::TempDir dir;
    auto path = dir / "budget";
    BudgetStore first(path);
    CHECK(std::filesystem::exists(first.lock_path()));
    CHECK_THROWS_AS(BudgetStore{path}, Error);
  }

  TEST_CASE("lock is released on destruction") {
    tgtest::TempDir dir;
    auto path = dir / "budget";
    { BudgetStore s(path); }
    CHECK_NOTHROW(BudgetStore{path});
  }
}
