#include <doctest.h>

#include <stdexcept>

#include "tcache/lossy_channel.hpp"

using namespace tcache;

namespace {

std::vector<Invalidation> pump(LossyChannel& ch, int messages, Tick horizon) {
  std::vector<Invalidation> got;
  for (Tick t = 0; t < horizon; ++t) {
    if (t < messages) ch.enqueue({static_cast<ObjectId>(t % 50), static_cast<Version>(t + 1)}, t);
    for (const auto& inv : ch.drain(t)) got.push_back(inv);
  }
  return got;
}

}  // namespace

TEST_CASE("lossless channel delivers every message exactly once in order") {
  LossyChannel ch({0.0, 1, 10, false, 5});
  const auto got = pump(ch, 10000, 10100);
  REQUIRE(got.size() == 10000);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].ver == i + 1);
  CHECK(ch.stats().delivered == 10000);
  CHECK(ch.stats().dropped == 0);
}

TEST_CASE("total loss delivers nothing") {
  LossyChannel ch({1.0, 1, 10, false, 5});
  CHECK(pump(ch, 1000, 1100).empty());
  CHECK(ch.stats().dropped == 1000);
}

TEST_CASE("twenty percent loss delivers about eighty percent") {
  LossyChannel ch({0.2, 1, 10, false, 11});
  const auto got = pump(ch, 10000, 10100);
  const double frac = static_cast<double>(got.size()) / 10000.0;
  CHECK(frac >= 0.78);
  CHECK(frac <= 0.82);
  for (std::size_t i = 1; i < got.size(); ++i) CHECK(got[i - 1].ver < got[i].ver);
}

TEST_CASE("delivery happens within the delay window") {
  LossyChannel ch({0.0, 3, 7, false, 2});
  for (Tick t = 0; t < 200; ++t) ch.enqueue({0, static_cast<Version>(t + 1)}, t * 20);
  for (Tick now = 0; now < 200 * 20 + 10; ++now) {
    for (const auto& inv : ch.drain(now)) {
      const Tick sent = static_cast<Tick>(inv.ver - 1) * 20;
      CHECK(now - sent >= 3);
      CHECK(now - sent <= 7);
    }
  }
  CHECK_FALSE(ch.next_delivery_time().has_value());
}

TEST_CASE("reordering can be enabled") {
  LossyChannel ch({0.0, 0, 50, true, 9});
  for (Tick t = 0; t < 200; ++t) ch.enqueue({0, static_cast<Version>(t + 1)}, t);
  std::vector<Version> order;
  for (Tick t = 0; t < 400; ++t) {
    for (const auto& inv : ch.drain(t)) order.push_back(inv.ver);
  }
  REQUIRE(order.size() == 200);
  CHECK_FALSE(std::is_sorted(order.begin(), order.end()));
}

TEST_CASE("invalid channel parameters are rejected") {
  CHECK_THROWS_AS(LossyChannel({1.5, 1, 10, false, 1}), std::invalid_argument);
  CHECK_THROWS_AS(LossyChannel({0.1, 10, 1, false, 1}), std::invalid_argument);
  CHECK_THROWS_AS(LossyChannel({0.1, -1, 1, false, 1}), std::invalid_argument);
}
