#pragma once

#include <cstdint>
#include <limits>

namespace tcache {

/// Index into the object universe [0, N).
using ObjectId = std::uint32_t;

/// Commit version. Totally ordered; 0 is the bootstrap version of every object.
using Version = std::uint64_t;

/// Opaque object payload.
using Value = std::int64_t;

/// Identifier of a transaction (update or read-only).
using TxnId = std::uint64_t;

/// Simulated time in ticks. One tick is one millisecond.
using Tick = std::int64_t;

inline constexpr Version kInitialVersion = 0;
inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();
inline constexpr Tick kTicksPerSecond = 1000;

}  // namespace tcache
