#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include "tcache/types.hpp"

namespace tcache {

/// Announces that `key` was rewritten at `ver`. Carries no value.
struct Invalidation {
  ObjectId key = 0;
  Version ver = kInitialVersion;

  friend bool operator==(const Invalidation&, const Invalidation&) = default;
};

struct ChannelConfig {
  double drop_prob = 0.2;
  Tick min_delay = 1;
  Tick max_delay = 10;
  /// When false, delivery times are clamped so survivors arrive in enqueue order.
  bool allow_reorder = false;
  std::uint64_t seed = 1;
};

struct ChannelStats {
  std::uint64_t enqueued = 0;
  std::uint64_t dropped = 0;
  std::uint64_t delivered = 0;
};

/**
 * Best-effort DB-to-cache invalidation pipe. Each message is dropped
 * independently with probability drop_prob at enqueue time; survivors become
 * deliverable after a uniform delay in [min_delay, max_delay].
 *
 * Thread-safe.
 */
class LossyChannel {
 public:
  explicit LossyChannel(ChannelConfig cfg);

  void enqueue(Invalidation inv, Tick now);

  /// Messages deliverable at `now`, in delivery order. Dropped messages never appear.
  std::vector<Invalidation> drain(Tick now);

  std::optional<Tick> next_delivery_time() const;
  ChannelStats stats() const;
  const ChannelConfig& config() const { return cfg_; }

 private:
  struct InFlight {
    Tick deliver_at;
    std::uint64_t seq;
    Invalidation inv;
  };

  ChannelConfig cfg_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::deque<InFlight> queue_;
  Tick last_deliver_at_ = 0;
  std::uint64_t seq_ = 0;
  ChannelStats stats_;
};

}  // namespace tcache
