#pragma once

#include <vector>

#include "tgscrape/timefmt.hpp"

namespace tgscrape {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Instant now() = 0;
  virtual void sleep(Seconds d) = 0;
};

class SystemClock final : public Clock {
 public:
  Instant now() override;
  void sleep(Seconds d) override;
};

// Time moves only when told to. sleep() advances the clock and is logged so
// tests can assert on injected pauses.
class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(Instant start = Instant{}) : now_(start) {}

  Instant now() override { return now_; }
  void sleep(Seconds d) override;
  void advance(Seconds d) { now_ += d; }

  const std::vector<Seconds>& sleeps() const noexcept { return sleeps_; }

 private:
  Instant now_;
  std::vector<Seconds> sleeps_;
};

}  // namespace tgscrape
