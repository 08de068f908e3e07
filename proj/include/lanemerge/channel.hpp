#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <variant>
#include <vector>

#include "lanemerge/merge_rules.hpp"

namespace lanemerge::sim {

struct ChannelParams {
  double delay = 0.1;           // [s]
  double drop_probability = 0.0; // [0, 1]
  std::uint32_t seed = 1;

  bool valid() const {
    return delay >= 0.0 && drop_probability >= 0.0 && drop_probability <= 1.0;
  }
};

using Payload = std::variant<rules::CoopMessage, rules::CoopResponse>;

// Delayed, lossy, in-order V2V channel. Drops are decided at send time from
// the seeded generator, so the random sequence is tied to send order.
class Channel {
 public:
  explicit Channel(const ChannelParams& params)
      : params_(params), rng_(params.seed) {}

  void send(const Payload& payload, double t) {
    Entry e;
    e.payload = payload;
    e.deliver_at = t + params_.delay;
    e.dropped = draw_() < params_.drop_probability;
    if (params_.drop_probability <= 0.0) e.dropped = false;
    if (params_.drop_probability >= 1.0) e.dropped = true;
    pending_.push_back(e);
  }

  // All payloads due at time t, in send order.
  std::vector<Payload> step(double t) {
    std::vector<Payload> out;
    while (!pending_.empty() && pending_.front().deliver_at <= t + 1e-9) {
      if (!pending_.front().dropped) out.push_back(pending_.front().payload);
      pending_.pop_front();
    }
    return out;
  }

  std::size_t pending_count() const { return pending_.size(); }

 private:
  struct Entry {
    Payload payload;
    double deliver_at = 0.0;
    bool dropped = false;
  };

  double draw_() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  }

  ChannelParams params_;
  std::mt19937 rng_;
  std::deque<Entry> pending_;
};

} // namespace lanemerge::sim
