#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "support/test_support.hpp"
#include "tgscrape/clock.hpp"
#include "tgscrape/config.hpp"
#include "tgscrape/engine.hpp"
#include "tgscrape/error.hpp"
#include "tgscrape/governor.hpp"
#include "tgscrape/sink.hpp"

namespace tgtest {

// Keeps every snapshot in memory, keyed by the filename the engine chose.
class RecordingSink final : public tgscrape::sink::Sink {
 public:
  struct Snapshot {
    std::string filename;
    std::vector<tgscrape::MessageRecord> rows;
  };

  explicit RecordingSink(tgscrape::config::OutputFormat fmt = tgscrape::config::OutputFormat::parquet)
      : fmt_(fmt) {}

  tgscrape::config::OutputFormat format() const override { return fmt_; }
  std::filesystem::path write(std::span<const tgscrape::MessageRecord> rows,
                              const std::string& filename) override {
    if (fail_on_prefix_.size() && filename.rfind(fail_on_prefix_, 0) == 0)
      throw tgscrape::SinkError("disk full");
    snapshots.push_back({filename, {rows.begin(), rows.end()}});
    return filename;
  }

  void fail_on(std::string prefix) { fail_on_prefix_ = std::move(prefix); }

  std::vector<Snapshot> with_prefix(const std::string& prefix) const {
    std::vector<Snapshot> out;
    for (const auto& s : snapshots)
      if (s.filename.rfind(prefix, 0) == 0) out.push_back(s);
    return out;
  }

  std::vector<Snapshot> snapshots;

 private:
  tgscrape::config::OutputFormat fmt_;
  std::string fail_on_prefix_;
};

struct JobArgs {
  std::vector<std::string> channels;
  std::string date_min = "2024-01-01";
  std::string date_max = "2026-01-01";
  std::string file_name = "Test";
  std::string key_search;
  std::int64_t max_t_index = tgscrape::config::kDefaultMaxMessages;
  std::int64_t time_limit = tgscrape::config::kDefaultTimeLimit;
  tgscrape::config::OutputFormat format = tgscrape::config::OutputFormat::parquet;
};

inline tgscrape::config::ValidatedJob make_job(const JobArgs& a) {
  using namespace tgscrape::config;
  ScrapeJobSpec spec;
  for (const auto& c : a.channels) spec.channels.push_back(ChannelRef::parse(c));
  spec.window = parse_date_window(a.date_min, a.date_max);
  spec.file_name = a.file_name;
  spec.key_search = a.key_search;
  spec.max_t_index = a.max_t_index;
  spec.time_limit = a.time_limit;
  spec.output_format = a.format;
  return validate_job(std::move(spec));
}

inline std::vector<std::string> handles_of(const tgscrape::source::Fixture& fx) {
  std::vector<std::string> out;
  for (const auto& c : fx.channels) out.push_back(c.handle);
  return out;
}

// Source, clock, budget and console wired together around one fixture.
struct Rig {
  explicit Rig(tgscrape::source::Fixture fx, double start_epoch = 1'750'000'000)
      : source(std::move(fx)), clock(tgscrape::instant_from_epoch(start_epoch)) {
    source.attach_clock(&clock);
  }

  tgscrape::engine::JobSummary run(const tgscrape::config::ValidatedJob& job,
                                   const tgscrape::engine::RunOptions& opt = {}) {
    return tgscrape::engine::run_job(job, {source, sink, budget, clock, console}, opt);
  }

  tgscrape::source::SimulatedSource source;
  tgscrape::SimulatedClock clock;
  tgscrape::governor::BudgetState budget;
  RecordingSink sink;
  std::ostringstream console;
};

}  // namespace tgtest
