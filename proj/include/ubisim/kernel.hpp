#pragma once

#include "ubisim/error.hpp"
#include "ubisim/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace ubisim {

// Event destination; nullopt addresses the kernel itself.
using Target = std::optional<NodeId>;

inline std::string target_name(const Target& t) {
  return t ? std::to_string(*t) : std::string("KERNEL");
}

template <typename Payload>
struct Event {
  Tick time = 0;
  std::uint64_t seq = 0;
  Target target;
  Payload payload;
};

// Deterministic discrete-event core: a virtual clock, a (time, seq)-ordered
// queue and the single seeded random stream of a simulation instance.
// Payload is the caller's event variant; dispatch is the caller's handler.
template <typename Payload>
class Kernel {
 public:
  using EventType = Event<Payload>;

  explicit Kernel(std::uint64_t seed = 1) : rng_(seed) {}

  Tick clock() const noexcept { return clock_; }
  bool idle() const noexcept { return queue_.empty(); }
  std::size_t pending() const noexcept { return queue_.size(); }
  std::uint64_t processed() const noexcept { return processed_; }

  std::optional<Tick> next_time() const {
    if (queue_.empty()) return std::nullopt;
    return queue_.top().time;
  }

  // Returns the sequence number assigned to the event.
  std::uint64_t schedule(Tick time, Target target, Payload payload) {
    if (time < clock_) {
      throw Error(ErrorCode::PastEvent, "event at t=" + std::to_string(time) +
                                            " scheduled when clock=" + std::to_string(clock_));
    }
    const std::uint64_t seq = next_seq_++;
    queue_.push(EventType{time, seq, std::move(target), std::move(payload)});
    return seq;
  }

  // Pops the minimal (time, seq) event, advances the clock and dispatches it.
  // Returns nullopt (Idle) on an empty queue without touching the clock.
  template <typename Handler>
  std::optional<EventType> step(Handler&& handler) {
    if (queue_.empty()) return std::nullopt;
    EventType ev = queue_.top();
    queue_.pop();
    clock_ = ev.time;
    ++processed_;
    std::invoke(handler, std::as_const(ev));
    return ev;
  }

  // Processes every event with time <= t_end. Returns the number processed.
  template <typename Handler>
  std::size_t run_until(Tick t_end, Handler&& handler) {
    std::size_t n = 0;
    while (!queue_.empty() && queue_.top().time <= t_end) {
      step(handler);
      ++n;
    }
    return n;
  }

  std::mt19937_64& rng() noexcept { return rng_; }

  // Uniform draw in [0, 1) from the top 53 bits; portable across standard
  // libraries, unlike std::uniform_real_distribution.
  double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

 private:
  struct Later {
    bool operator()(const EventType& a, const EventType& b) const noexcept {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  Tick clock_ = 0;
  std::uint64_t next_seq_ = 1;
  std::uint64_t processed_ = 0;
  std::priority_queue<EventType, std::vector<EventType>, Later> queue_;
  std::mt19937_64 rng_;
};

}  // namespace ubisim
