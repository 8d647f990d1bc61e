#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fpv/graph.hpp"

namespace fpv {

/// Byte string identifying a label-preserving isomorphism class exactly:
/// two graphs compare equal iff they are isomorphic.
struct CanonicalKey {
    std::string bytes;

    bool operator==(const CanonicalKey&) const = default;
    auto operator<=>(const CanonicalKey&) const = default;
    std::string hex() const;
};

/// True iff a node bijection exists that preserves both adjacency and
/// labels. Backtracking search with label/degree pruning; does not require
/// the graphs to be connected.
bool is_isomorphic(const AccessGraph& g1, const AccessGraph& g2);

/// Exact canonical form by individualization-refinement: stable color
/// refinement on (label, neighbor-color multiset), branching on the first
/// non-singleton cell, minimum encoding over all discrete leaves. Not a
/// hash; equal keys <=> isomorphic.
CanonicalKey canonical_key(const AccessGraph& g);

struct DedupClass {
    CanonicalKey key;
    AccessGraph representative;          // first member encountered
    std::vector<std::string> member_ids; // in input order
    int frequency() const { return static_cast<int>(member_ids.size()); }
};

struct DedupReport {
    std::vector<DedupClass> classes;     // sorted by descending frequency
    std::size_t corpus_size = 0;
};

/// Partitions a corpus into isomorphism classes keyed by canonical_key.
/// Classes are sorted by descending frequency, ties broken by first
/// occurrence, so the report is deterministic given input order.
DedupReport deduplicate(std::span<const AccessGraph> corpus);

std::string dedup_to_json(const DedupReport& report);
std::string dedup_to_csv(const DedupReport& report);

}  // namespace fpv
