#include "tgscrape/governor.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "tgscrape/error.hpp"

namespace tgscrape::governor {

double pace_channel_loop(double loop_duration_seconds, const PacingPolicy& policy) {
  if (loop_duration_seconds < policy.min_loop_seconds)
    return policy.min_loop_seconds - loop_duration_seconds;
  return 0.0;
}

bool should_checkpoint(std::int64_t t_index, const CheckpointPolicy& policy) {
  return t_index % policy.interval == 0;
}

bool deadline_exceeded(Instant start, Instant now, std::int64_t time_limit_seconds) {
  return (now - start).count() > static_cast<double>(time_limit_seconds);
}

BudgetState::BudgetState(std::int64_t budget_limit, std::int64_t window_seconds)
    : budget_limit_(budget_limit), window_seconds_(window_seconds) {
  if (budget_limit < 1) throw ValidationError("budget_limit", "must be at least 1");
  if (window_seconds < 1) throw ValidationError("window_seconds", "must be at least 1");
}

bool BudgetState::in_window(const Admission& a, Instant now) const {
  return a.admitted_at + Seconds{static_cast<double>(window_seconds_)} > now;
}

void BudgetState::prune(Instant now) {
  std::erase_if(admissions_, [&](const Admission& a) { return !in_window(a, now); });
}

std::int64_t BudgetState::in_window_count(Instant now) const {
  std::set<std::string_view> distinct;
  for (const auto& a : admissions_)
    if (in_window(a, now)) distinct.insert(a.handle);
  return static_cast<std::int64_t>(distinct.size());
}

AdmissionDecision BudgetState::admit_channel(std::string_view handle, Instant now) {
  prune(now);
  for (const auto& a : admissions_)
    if (a.handle == handle) return Admit{};

  if (in_window_count(now) < budget_limit_) {
    auto pos = std::upper_bound(
        admissions_.begin(), admissions_.end(), now,
        [](Instant t, const Admission& a) { return t < a.admitted_at; });
    admissions_.insert(pos, Admission{std::string(handle), now});
    return Admit{};
  }
  const auto& oldest = admissions_.front();
  auto expiry = oldest.admitted_at + Seconds{static_cast<double>(window_seconds_)};
  return Deny{(expiry - now).count()};
}

std::string BudgetState::serialize() const {
  std::string out;
  for (const auto& a : admissions_)
    out += fmt::format("{}\t{}\n", a.handle, epoch_seconds(a.admitted_at));
  return out;
}

BudgetState BudgetState::deserialize(std::string_view text, std::int64_t budget_limit,
                                     std::int64_t window_seconds) {
  BudgetState state(budget_limit, window_seconds);
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw FormatError(fmt::format("budget state line {}: expected handle<TAB>epoch-seconds", lineno));
    const char* begin = line.c_str() + tab + 1;
    char* end = nullptr;
    errno = 0;
    double secs = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno != 0)
      throw FormatError(fmt::format("budget state line {}: bad timestamp '{}'", lineno, begin));
    state.admissions_.push_back({line.substr(0, tab), instant_from_epoch(secs)});
  }
  std::stable_sort(state.admissions_.begin(), state.admissions_.end(),
                   [](const Admission& a, const Admission& b) { return a.admitted_at < b.admitted_at; });
  return state;
}

BudgetStore::BudgetStore(std::filesystem::path path) : path_(std::move(path)) {
  auto lock = lock_path();
  lock_fd_ = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (lock_fd_ < 0) {
    if (errno == EEXIST)
      throw Error(fmt::format(
          "budget state '{}' is locked by another run (remove '{}' if no run is active)",
          path_.string(), lock.string()));
    throw Error(fmt::format("cannot create lock '{}': {}", lock.string(), std::strerror(errno)));
  }
  auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(lock_fd_, pid.data(), pid.size());
}

BudgetStore::~BudgetStore() {
  if (lock_fd_ >= 0) {
    ::close(lock_fd_);
    std::error_code ec;
    std::filesystem::remove(lock_path(), ec);
  }
}

std::filesystem::path BudgetStore::lock_path() const {
  auto p = path_;
  p += ".lock";
  return p;
}

BudgetState BudgetStore::load(std::int64_t budget_limit, std::int64_t window_seconds) const {
  std::ifstream in(path_);
  if (!in) return BudgetState(budget_limit, window_seconds);
  std::stringstream buf;
  buf << in.rdbuf();
  return BudgetState::deserialize(buf.str(), budget_limit, window_seconds);
}

void BudgetStore::save(const BudgetState& state) const {
  auto tmp = path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << state.serialize();
    out.flush();
    if (!out) throw SinkError(fmt::format("cannot write budget state '{}'", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path_, ec);
  if (ec)
    throw SinkError(fmt::format("cannot replace budget state '{}': {}", path_.string(), ec.message()));
}

}  // namespace tgscrape::governor
