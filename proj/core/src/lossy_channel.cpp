#include "tcache/lossy_channel.hpp"

#include <algorithm>
#include <stdexcept>

namespace tcache {

LossyChannel::LossyChannel(ChannelConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
  if (cfg_.drop_prob < 0.0 || cfg_.drop_prob > 1.0) {
    throw std::invalid_argument("channel drop_prob must be in [0, 1]");
  }
  if (cfg_.min_delay < 0 || cfg_.max_delay < cfg_.min_delay) {
    throw std::invalid_argument("channel delay bounds must satisfy 0 <= min <= max");
  }
}

void LossyChannel::enqueue(Invalidation inv, Tick now) {
  std::lock_guard lock(mu_);
  ++stats_.enqueued;
  std::bernoulli_distribution drop(cfg_.drop_prob);
  std::uniform_int_distribution<Tick> delay(cfg_.min_delay, cfg_.max_delay);
  // Always draw both so the stream position does not depend on the outcome.
  const bool dropped = drop(rng_);
  Tick deliver_at = now + delay(rng_);
  if (dropped) {
    ++stats_.dropped;
    return;
  }
  if (!cfg_.allow_reorder) {
    deliver_at = std::max(deliver_at, last_deliver_at_);
    last_deliver_at_ = deliver_at;
  }
  InFlight msg{deliver_at, seq_++, inv};
  auto pos = std::upper_bound(queue_.begin(), queue_.end(), msg, [](const InFlight& a, const InFlight& b) {
    return a.deliver_at < b.deliver_at;
  });
  queue_.insert(pos, msg);
}

std::vector<Invalidation> LossyChannel::drain(Tick now) {
  std::lock_guard lock(mu_);
  std::vector<Invalidation> out;
  while (!queue_.empty() && queue_.front().deliver_at <= now) {
    out.push_back(queue_.front().inv);
    queue_.pop_front();
  }
  stats_.delivered += out.size();
  return out;
}

std::optional<Tick> LossyChannel::next_delivery_time() const {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  return queue_.front().deliver_at;
}

ChannelStats LossyChannel::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

}  // namespace tcache
