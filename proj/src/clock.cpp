#include "tgscrape/clock.hpp"

#include <thread>

namespace tgscrape {

Instant SystemClock::now() {
  return std::chrono::time_point_cast<Seconds>(std::chrono::system_clock::now());
}

void SystemClock::sleep(Seconds d) {
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

void SimulatedClock::sleep(Seconds d) {
  sleeps_.push_back(d);
  if (d.count() > 0) now_ += d;
}

}  // namespace tgscrape
