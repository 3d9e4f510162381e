#include "tgscrape/cli.hpp"

#include <unistd.h>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>

#include "tgscrape/clock.hpp"
#include "tgscrape/engine.hpp"
#include "tgscrape/error.hpp"
#include "tgscrape/governor.hpp"
#include "tgscrape/sink.hpp"
#include "tgscrape/source.hpp"

namespace tgscrape::cli {
namespace {

std::atomic<bool> g_interrupt{false};

const std::map<std::string, std::string, std::less<>> kFieldFlags = {
    {"channels", "--channels"},       {"date_min", "--date-min"},
    {"date_max", "--date-max"},       {"file_name", "--file-name"},
    {"key_search", "--key-search"},   {"max_t_index", "--max-messages"},
    {"time_limit", "--time-limit"},   {"format", "--format"},
    {"budget_limit", "--budget-limit"}};

std::string flag_for(const std::string& field) {
  auto it = kFieldFlags.find(field);
  return it == kFieldFlags.end() ? field : it->second;
}

ValidationError relabel(const ValidationError& e) {
  auto issues = e.issues();
  for (auto& i : issues) i.field = flag_for(i.field);
  return ValidationError(std::move(issues));
}

std::string trim(std::string_view s) {
  auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string iso_day(Timestamp t) { return format_archive_date(t).substr(0, 10); }

void print_issues(std::ostream& err, const ValidationError& e) {
  for (const auto& i : e.issues()) fmt::print(err, "error: {}: {}\n", i.field, i.message);
}

config::Credentials resolve_credentials(const CliInvocation& inv) {
  if (inv.credentials_path) return config::load_credentials(*inv.credentials_path);
  if (const char* path = std::getenv("TGSCRAPE_CREDENTIALS")) return config::load_credentials(path);
  if (auto env = config::credentials_from_env()) return *env;
  throw ValidationError("--credentials",
                        "live mode needs a credentials file (--credentials or TGSCRAPE_CREDENTIALS) "
                        "or the TGSCRAPE_USERNAME/PHONE/API_ID/API_HASH variables");
}

}  // namespace

void request_interrupt() noexcept { g_interrupt.store(true); }
void reset_interrupt() noexcept { g_interrupt.store(false); }

CliInvocation parse_invocation(const std::vector<std::string>& args) {
  CliInvocation inv;
  CLI::App app{"Archive Telegram channel and group posts, with their comment threads, "
               "into workbook or parquet files.",
               "tgscrape"};
  std::string credentials, fixture, budget_state;
  std::string output_dir = inv.output_dir.string();

  app.add_option("--channels", inv.channels, "Comma-separated @names or https://t.me/ links");
  app.add_option("--date-min", inv.date_min, "First day of the window (YYYY-MM-DD, UTC)");
  app.add_option("--date-max", inv.date_max, "Last day of the window (YYYY-MM-DD, UTC midnight)");
  app.add_option("--file-name", inv.file_name, "Stem used in every output file name")->capture_default_str();
  app.add_option("--key-search", inv.key_search, "Only archive posts matching this keyword");
  app.add_option("--max-messages", inv.max_messages, "Stop after this many posts")->capture_default_str();
  app.add_option("--time-limit", inv.time_limit, "Stop after this many seconds")->capture_default_str();
  app.add_option("--format", inv.format, "excel or parquet")->capture_default_str();
  app.add_option("--fixture", fixture, "Read from a JSON fixture instead of Telegram (simulated clock)");
  app.add_option("--credentials", credentials, "key=value credentials file for live mode");
  app.add_option("--output-dir", output_dir, "Directory for backup, partial and final files")->capture_default_str();
  app.add_option("--budget-state", budget_state,
                 "Community budget state file (default: <output-dir>/.tgscrape-budget)");
  app.add_option("--budget-limit", inv.budget_limit, "Distinct communities per 24h")->capture_default_str();
  app.add_option("--checkpoint-interval", inv.checkpoint_interval, "Posts between backups")->capture_default_str();
  app.add_option("--min-loop-seconds", inv.min_loop_seconds, "Minimum time spent per channel")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw ValidationError("usage", app.help());
  } catch (const CLI::ParseError& e) {
    throw ValidationError("usage", e.what());
  }

  std::vector<FieldIssue> missing;
  if (inv.channels.empty()) missing.push_back({"--channels", "required"});
  if (inv.date_min.empty()) missing.push_back({"--date-min", "required"});
  if (inv.date_max.empty()) missing.push_back({"--date-max", "required"});
  if (inv.budget_limit < 1) missing.push_back({"--budget-limit", "must be at least 1"});
  if (inv.checkpoint_interval < 1) missing.push_back({"--checkpoint-interval", "must be at least 1"});
  if (!(inv.min_loop_seconds > 0)) missing.push_back({"--min-loop-seconds", "must be positive"});
  if (!missing.empty()) throw ValidationError(std::move(missing));

  if (!credentials.empty()) inv.credentials_path = credentials;
  if (!fixture.empty()) inv.fixture_path = fixture;
  if (!budget_state.empty()) inv.budget_state_path = budget_state;
  inv.output_dir = output_dir;
  return inv;
}

config::ValidatedJob build_job(const CliInvocation& inv) {
  try {
    config::ScrapeJobSpec spec;
    std::vector<FieldIssue> issues;
    auto collect = [&](auto&& fn) {
      try {
        fn();
      } catch (const ValidationError& e) {
        for (const auto& i : e.issues()) issues.push_back(i);
      }
    };
    collect([&] { spec.channels = config::parse_channel_list(inv.channels); });
    collect([&] { spec.window = config::parse_date_window(inv.date_min, inv.date_max); });
    collect([&] { spec.output_format = config::normalize_output_format(inv.format); });
    spec.file_name = inv.file_name;
    spec.key_search = inv.key_search;
    spec.max_t_index = inv.max_messages;
    spec.time_limit = inv.time_limit;
    if (issues.empty()) return config::validate_job(std::move(spec));

    // Report the remaining checks too, skipping fields that already failed
    // to parse.
    try {
      config::validate_job(spec);
    } catch (const ValidationError& e) {
      for (const auto& i : e.issues()) {
        bool seen = std::any_of(issues.begin(), issues.end(),
                                [&](const FieldIssue& p) { return p.field == i.field; });
        if (!seen) issues.push_back(i);
      }
    }
    throw ValidationError(std::move(issues));
  } catch (const ValidationError& e) {
    throw relabel(e);
  }
}

std::vector<std::string> render_job_flags(const config::ScrapeJobSpec& spec) {
  return {"--channels",     config::join_channel_list(spec.channels),
          "--date-min",     iso_day(spec.window.date_min),
          "--date-max",     iso_day(spec.window.date_max),
          "--file-name",    spec.file_name,
          "--key-search",   spec.key_search,
          "--max-messages", std::to_string(spec.max_t_index),
          "--time-limit",   std::to_string(spec.time_limit),
          "--format",       std::string(config::format_flag_value(spec.output_format))};
}

std::string prompt_verification_code(std::istream& in, std::ostream& out, bool interactive) {
  if (!interactive)
    throw Error(
        "Telegram sent a login code but stdin is not a terminal; run tgscrape once from an "
        "interactive shell to complete the login");
  out << "Please enter the code you received: " << std::flush;
  std::string line;
  if (!std::getline(in, line)) throw Error("input closed before a verification code was entered");
  return trim(line);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliInvocation inv;
  try {
    inv = parse_invocation(args);
  } catch (const ValidationError& e) {
    if (e.issues().size() == 1 && e.issues().front().field == "usage") {
      const auto& text = e.issues().front().message;
      bool help = std::find(args.begin(), args.end(), "--help") != args.end() ||
                  std::find(args.begin(), args.end(), "-h") != args.end();
      (help ? out : err) << text << (text.empty() || text.back() == '\n' ? "" : "\n");
      return help ? 0 : 2;
    }
    print_issues(err, e);
    return 2;
  }

  std::optional<config::ValidatedJob> job;
  try {
    job = build_job(inv);
  } catch (const ValidationError& e) {
    print_issues(err, e);
    return 2;
  }
  for (const auto& w : job->warnings()) fmt::print(err, "warning: {}\n", w);

  try {
    std::unique_ptr<source::MessageSource> src;
    std::unique_ptr<Clock> clock;
    if (inv.fixture_path) {
      auto sim_clock = std::make_unique<SimulatedClock>(SystemClock{}.now());
      auto sim = std::make_unique<source::SimulatedSource>(source::load_fixture(*inv.fixture_path));
      sim->attach_clock(sim_clock.get());
      src = std::move(sim);
      clock = std::move(sim_clock);
    } else {
      auto creds = resolve_credentials(inv);
      src = std::make_unique<source::TelegramSource>(std::move(creds), [&out] {
        return prompt_verification_code(std::cin, out, ::isatty(STDIN_FILENO) != 0);
      });
      clock = std::make_unique<SystemClock>();
    }

    auto state_path = inv.budget_state_path.value_or(inv.output_dir / ".tgscrape-budget");
    std::error_code ec;
    if (state_path.has_parent_path()) std::filesystem::create_directories(state_path.parent_path(), ec);
    governor::BudgetStore store(state_path);
    auto budget = store.load(inv.budget_limit);

    sink::DirectorySink sink(inv.output_dir, job->spec().output_format);
    engine::RunOptions options;
    options.pacing.min_loop_seconds = inv.min_loop_seconds;
    options.checkpoint.interval = inv.checkpoint_interval;
    options.interrupt = &g_interrupt;
    options.on_admission = [&store](const governor::BudgetState& s) { store.save(s); };

    auto summary = engine::run_job(*job, {*src, sink, budget, *clock, out}, options);
    store.save(budget);

    fmt::print(out, "summary: {} posts in {:.1f} s{}\n", summary.t_index, summary.wall_seconds,
               summary.interrupted ? " (interrupted)" : "");
    for (const auto& c : summary.per_channel)
      fmt::print(out, "  {:<32} {:>7} {}\n", c.handle, c.c_index, engine::to_string(c.status));
    fmt::print(out, "result: {}\n", summary.final_file().string());
    return 0;
  } catch (const ValidationError& e) {
    print_issues(err, e);
    return 2;
  } catch (const SinkError& e) {
    fmt::print(err, "error: writing the final file failed: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }
}

}  // namespace tgscrape::cli
