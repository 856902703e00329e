#include "tcache/dependency.hpp"

#include <algorithm>
#include <unordered_map>

namespace tcache {

DependencyList DependencyList::from_recency_order(std::span<const DependencyEntry> by_recency,
                                                  std::size_t bound) {
  return prune_lru(by_recency, bound);
}

std::optional<Version> DependencyList::find(ObjectId key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return e.ver;
  }
  return std::nullopt;
}

DependencyList prune_lru(std::span<const DependencyEntry> by_recency, std::size_t bound) {
  // Position of first (most recent) occurrence, version is the max over all.
  std::unordered_map<ObjectId, std::size_t> slot;
  std::vector<DependencyEntry> distinct;
  distinct.reserve(by_recency.size());
  for (const auto& e : by_recency) {
    auto [it, inserted] = slot.try_emplace(e.key, distinct.size());
    if (inserted) {
      distinct.push_back(e);
    } else {
      auto& kept = distinct[it->second];
      kept.ver = std::max(kept.ver, e.ver);
    }
  }
  if (distinct.size() > bound) distinct.resize(bound);

  DependencyList out;
  out.entries_ = std::move(distinct);
  out.bound_ = bound;
  return out;
}

std::vector<DependencyEntry> merge_full_dep_list(std::span<const AccessTuple> read_set,
                                                 std::span<const AccessTuple> write_set) {
  std::vector<DependencyEntry> direct;
  std::vector<DependencyEntry> inherited;
  for (auto set : {read_set, write_set}) {
    for (const auto& t : set) {
      direct.push_back({t.key, t.ver});
      inherited.insert(inherited.end(), t.deps.begin(), t.deps.end());
    }
  }
  std::stable_sort(inherited.begin(), inherited.end(),
                   [](const DependencyEntry& a, const DependencyEntry& b) { return a.ver > b.ver; });
  direct.insert(direct.end(), inherited.begin(), inherited.end());

  auto merged = prune_lru(direct, kUnbounded);
  return {merged.begin(), merged.end()};
}

Version VersionClock::next(std::span<const Version> accessed_versions) {
  Version floor = last_;
  for (Version v : accessed_versions) floor = std::max(floor, v);
  last_ = floor + 1;
  return last_;
}

}  // namespace tcache
