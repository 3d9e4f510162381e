#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>

#include "support/test_support.hpp"
#include "tgscrape/config.hpp"
#include "tgscrape/error.hpp"

using namespace tgscrape;
using namespace tgscrape::config;

namespace {

std::vector<std::string> handles(const std::vector<ChannelRef>& refs) {
  std::vector<std::string> out;
  for (const auto& r : refs) out.push_back(r.handle());
  return out;
}

std::string fmt_date(int y, int m, int d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return buf;
}

ScrapeJobSpec form_job() {
  ScrapeJobSpec spec;
  spec.channels = parse_channel_list("@LulanoTelegram, @jairbolsonarobrasil, @Other_Channel_Name");
  spec.window = parse_date_window("2024-10-15", "2025-01-15");
  spec.file_name = "Test";
  spec.key_search = "";
  spec.max_t_index = 1'000'000;
  spec.time_limit = 21'600;
  spec.output_format = normalize_output_format("excel");
  return spec;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("channel list from the notebook form") {
    auto refs = parse_channel_list("@LulanoTelegram, @jairbolsonarobrasil, @Other_Channel_Name");
    CHECK(handles(refs) ==
          std::vector<std::string>{"@LulanoTelegram", "@jairbolsonarobrasil", "@Other_Channel_Name"});
  }

  TEST_CASE("single channel") { CHECK(handles(parse_channel_list("@A")) == std::vector<std::string>{"@A"}); }

  TEST_CASE("t.me links normalize and whitespace is trimmed") {
    CHECK(handles(parse_channel_list("https://t.me/Foo ,  @Bar")) == std::vector<std::string>{"@Foo", "@Bar"});
    CHECK(handles(parse_channel_list("https://t.me/Foo/")) == std::vector<std::string>{"@Foo"});
    CHECK(handles(parse_channel_list("NoAt")) == std::vector<std::string>{"NoAt"});
  }

  TEST_CASE("empty items are dropped") {
    CHECK(handles(parse_channel_list(" , @A,,@B , ")) == std::vector<std::string>{"@A", "@B"});
    CHECK(parse_channel_list("").empty());
  }

  TEST_CASE("forbidden forms name the offending item") {
    try {
      parse_channel_list("@ok, https://web.telegram.org/a/#-1001249230829");
      FAIL("expected rejection");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("https://web.telegram.org/a/#-1001249230829") != std::string::npos);
      CHECK(e.issues().front().field == "channels");
    }
    CHECK_THROWS_AS(parse_channel_list("-1001249230829"), ValidationError);
    CHECK_THROWS_AS(parse_channel_list("12345"), ValidationError);
    CHECK_THROWS_AS(parse_channel_list("@has space"), ValidationError);
    CHECK_THROWS_AS(parse_channel_list("https://t.me/"), ValidationError);
  }

  TEST_CASE("parse_channel_list is idempotent on its rendered output") {
    std::mt19937 rng(7);
    const std::vector<std::string> pieces = {"@A", "https://t.me/Foo", " @Bar ", "", "plain", "@x_y", "https://t.me/Z/"};
    for (int round = 0; round < 200; ++round) {
      std::string raw;
      int n = std::uniform_int_distribution<int>(0, 6)(rng);
      for (int i = 0; i < n; ++i) {
        if (i) raw += ",";
        raw += pieces[std::uniform_int_distribution<std::size_t>(0, pieces.size() - 1)(rng)];
      }
      auto once = parse_channel_list(raw);
      auto twice = parse_channel_list(join_channel_list(once));
      CHECK(once == twice);
    }
  }

  TEST_CASE("fuzzed channel lists yield only valid handles or a diagnostic") {
    std::mt19937 rng(11);
    const std::string alphabet = "@,:/ -_.#abcXYZ019\thttps://t.me/web.telegram.org";
    for (int round = 0; round < 2000; ++round) {
      std::string raw;
      int len = std::uniform_int_distribution<int>(0, 40)(rng);
      for (int i = 0; i < len; ++i)
        raw += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
      try {
        for (const auto& ref : parse_channel_list(raw)) {
          const auto& h = ref.handle();
          CHECK(!h.empty());
          CHECK(h.find_first_of(" \t\n\r") == std::string::npos);
          CHECK(h.rfind("https://web.telegram.org", 0) != 0);
          CHECK(h.find_first_not_of("0123456789-") != std::string::npos);
        }
      } catch (const ValidationError&) {
      }
    }
  }

  TEST_CASE("date window") {
    auto w = parse_date_window("2024-10-15", "2025-01-15");
    CHECK(w.date_min == tgtest::ts(tgtest::epoch_of(2024, 10, 15)));
    CHECK(w.date_max == tgtest::ts(tgtest::epoch_of(2025, 1, 15)));

    auto single = parse_date_window("2024-01-01", "2024-01-01");
    CHECK(single.date_min == single.date_max);

    CHECK_THROWS_AS(parse_date_window("2025-01-15", "2024-10-15"), ValidationError);
    CHECK_THROWS_AS(parse_date_window("2024-13-01", "2025-01-01"), ValidationError);
    CHECK_THROWS_AS(parse_date_window("2024-02-30", "2025-01-01"), ValidationError);
    CHECK_THROWS_AS(parse_date_window("15/10/2024", "2025-01-01"), ValidationError);
    CHECK_THROWS_AS(parse_date_window("2024-10-15", ""), ValidationError);
  }

  TEST_CASE("date window output always ordered or rejected") {
    std::mt19937 rng(3);
    auto pick = [&] {
      return fmt_date(std::uniform_int_distribution<int>(2020, 2026)(rng), std::uniform_int_distribution<int>(1, 12)(rng),
                      std::uniform_int_distribution<int>(1, 31)(rng));
    };
    for (int i = 0; i < 500; ++i) {
      try {
        auto w = parse_date_window(pick(), pick());
        CHECK(w.date_min <= w.date_max);
      } catch (const ValidationError&) {
      }
    }
  }

  TEST_CASE("output format normalization") {
    CHECK(normalize_output_format("excel") == OutputFormat::workbook);
    CHECK(normalize_output_format("PARQUET") == OutputFormat::parquet);
    CHECK(normalize_output_format(" Excel! ") == OutputFormat::workbook);
    CHECK_THROWS_AS(normalize_output_format("csv"), ValidationError);
    CHECK_THROWS_AS(normalize_output_format("xcel"), ValidationError);
  }

  TEST_CASE("the notebook's full parameter set validates") {
    auto job = validate_job(form_job());
    CHECK(job.warnings().empty());
    CHECK(job.spec().channels.size() == 3);
    CHECK(job.spec().output_format == OutputFormat::workbook);
  }

  TEST_CASE("empty channels are rejected by field") {
    auto spec = form_job();
    spec.channels.clear();
    try {
      validate_job(spec);
      FAIL("expected rejection");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()) == "channels: empty");
    }
  }

  TEST_CASE("every violated invariant is reported") {
    auto spec = form_job();
    spec.max_t_index = 0;
    spec.time_limit = 0;
    spec.file_name = "a/b";
    try {
      validate_job(spec);
      FAIL("expected rejection");
    } catch (const ValidationError& e) {
      std::vector<std::string> fields;
      for (const auto& i : e.issues()) fields.push_back(i.field);
      CHECK(fields == std::vector<std::string>{"file_name", "max_t_index", "time_limit"});
    }
  }

  TEST_CASE("long time limits warn but pass") {
    auto spec = form_job();
    spec.time_limit = 22'000;
    auto job = validate_job(spec);
    REQUIRE(job.warnings().size() == 1);
    CHECK(job.warnings().front().find("21600") != std::string::npos);

    spec.time_limit = 21'600;
    CHECK(validate_job(spec).warnings().empty());
  }

  TEST_CASE("credentials file") {
    auto creds = parse_credentials(
        "# account\nusername = someone\nphone=+5511999999999\napi_id=123456\napi_hash=0123456789abcdef0123456789ABCDEF\n");
    CHECK(creds.username == "someone");
    CHECK(creds.phone == "+5511999999999");
    CHECK(creds.api_id == "123456");

    CHECK_THROWS_AS(parse_credentials("username=@someone\nphone=+5511999999999\napi_id=1\napi_hash=0123456789abcdef0123456789abcdef"),
                    ValidationError);
    CHECK_THROWS_AS(parse_credentials("username=a\nphone=5511999999999\napi_id=1\napi_hash=0123456789abcdef0123456789abcdef"),
                    ValidationError);
    CHECK_THROWS_AS(parse_credentials("username=a\nphone=+5511999999999\napi_id=x1\napi_hash=0123456789abcdef0123456789abcdef"),
                    ValidationError);
    CHECK_THROWS_AS(parse_credentials("username=a\nphone=+5511999999999\napi_id=1\napi_hash=0123"), ValidationError);
    CHECK_THROWS_AS(parse_credentials("bogus line"), ValidationError);
    CHECK_THROWS_AS(parse_credentials("colour=blue"), ValidationError);
  }

  TEST_CASE("credentials from a file and from the environment") {
    tgtest::TempDir dir;
    {
      std::ofstream out(dir / "creds");
      out << "username=u\nphone=+12345678\napi_id=42\napi_hash=ffffffffffffffffffffffffffffffff\n";
    }
    CHECK(load_credentials(dir / "creds").api_id == "42");
    CHECK_THROWS_AS(load_credentials(dir / "missing"), Error);

    ::unsetenv("TGSCRAPE_USERNAME");
    ::unsetenv("TGSCRAPE_PHONE");
    ::unsetenv("TGSCRAPE_API_ID");
    ::unsetenv("TGSCRAPE_API_HASH");
    CHECK_FALSE(credentials_from_env().has_value());
    ::setenv("TGSCRAPE_USERNAME", "u", 1);
    CHECK_THROWS_AS(credentials_from_env(), ValidationError);
    ::setenv("TGSCRAPE_PHONE", "+12345678", 1);
    ::setenv("TGSCRAPE_API_ID", "42", 1);
    ::setenv("TGSCRAPE_API_HASH", "ffffffffffffffffffffffffffffffff", 1);
    auto env = credentials_from_env();
    REQUIRE(env.has_value());
    CHECK(env->username == "u");
    ::unsetenv("TGSCRAPE_USERNAME");
    ::unsetenv("TGSCRAPE_PHONE");
    ::unsetenv("TGSCRAPE_API_ID");
    ::unsetenv("TGSCRAPE_API_HASH");
  }
}
