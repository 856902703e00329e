#pragma once

#include <vector>

#include "tcache/types.hpp"

namespace tcache {

enum class TxnKind { kUpdate, kReadOnly };
enum class TxnStatus { kCommitted, kAborted };

struct VersionedKey {
  ObjectId key = 0;
  Version ver = kInitialVersion;

  friend bool operator==(const VersionedKey&, const VersionedKey&) = default;
};

/// A completed transaction as reported to the consistency monitor.
struct HistoryEvent {
  TxnId txn_id = 0;
  TxnKind kind = TxnKind::kUpdate;
  TxnStatus status = TxnStatus::kCommitted;
  std::vector<VersionedKey> read_set;
  /// Update events carry the commit version in every pair; read-only events leave it empty.
  std::vector<VersionedKey> write_set;
  Tick timestamp = 0;
};

/// In-process sink for completed transactions.
class HistorySink {
 public:
  virtual ~HistorySink() = default;
  virtual void record_event(const HistoryEvent& e) = 0;
};

}  // namespace tcache
