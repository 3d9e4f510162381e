#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tgscrape/timefmt.hpp"

namespace tgscrape::governor {

struct PacingPolicy {
  double min_loop_seconds = 60.0;
};

struct CheckpointPolicy {
  std::int64_t interval = 1000;
};

// How long to sleep after a channel loop so it lasts at least
// min_loop_seconds.
double pace_channel_loop(double loop_duration_seconds, const PacingPolicy& policy);

bool should_checkpoint(std::int64_t t_index, const CheckpointPolicy& policy);

// Strictly greater than the limit.
bool deadline_exceeded(Instant start, Instant now, std::int64_t time_limit_seconds);

struct Admit {};
struct Deny {
  double retry_after_seconds = 0;
};
using AdmissionDecision = std::variant<Admit, Deny>;

struct Admission {
  std::string handle;
  Instant admitted_at;

  friend bool operator==(const Admission&, const Admission&) = default;
};

inline constexpr std::int64_t kDefaultBudgetLimit = 200;
inline constexpr std::int64_t kDefaultBudgetWindow = 86'400;

// Sliding-window count of distinct communities touched. The platform hands
// out a ~24h soft ban past roughly 200 of them.
class BudgetState {
 public:
  explicit BudgetState(std::int64_t budget_limit = kDefaultBudgetLimit,
                       std::int64_t window_seconds = kDefaultBudgetWindow);

  // A handle already admitted inside the window is admitted again for free.
  // Otherwise it consumes one slot, or is denied until the oldest in-window
  // admission ages out.
  AdmissionDecision admit_channel(std::string_view handle, Instant now);

  // Distinct handles with an admission inside (now - window, now].
  std::int64_t in_window_count(Instant now) const;

  const std::vector<Admission>& admissions() const noexcept { return admissions_; }
  std::int64_t budget_limit() const noexcept { return budget_limit_; }
  std::int64_t window_seconds() const noexcept { return window_seconds_; }

  // "handle<TAB>epoch-seconds" per line.
  std::string serialize() const;
  static BudgetState deserialize(std::string_view text, std::int64_t budget_limit,
                                 std::int64_t window_seconds);

 private:
  bool in_window(const Admission& a, Instant now) const;
  void prune(Instant now);

  std::int64_t budget_limit_;
  std::int64_t window_seconds_;
  std::vector<Admission> admissions_;
};

// Owns the on-disk budget state for one run. Holds "<path>.lock" for its
// lifetime so two runs never share a state file.
class BudgetStore {
 public:
  explicit BudgetStore(std::filesystem::path path);
  ~BudgetStore();

  BudgetStore(const BudgetStore&) = delete;
  BudgetStore& operator=(const BudgetStore&) = delete;

  // Missing file yields an empty state.
  BudgetState load(std::int64_t budget_limit = kDefaultBudgetLimit,
                   std::int64_t window_seconds = kDefaultBudgetWindow) const;

  // Write-temp-then-rename.
  void save(const BudgetState& state) const;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path lock_path() const;

 private:
  std::filesystem::path path_;
  int lock_fd_ = -1;
};

}  // namespace tgscrape::governor
