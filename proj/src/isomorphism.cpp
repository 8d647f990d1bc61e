#include "fpv/isomorphism.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace fpv {

namespace {

constexpr int kMaxNodes = 64;  // adjacency rows are uint64_t bitmasks

struct BitGraph {
    int n = 0;
    std::vector<std::uint64_t> adj;  // adj[i] bit j set iff edge (i,j)
    std::vector<RoomLabel> labels;
    std::vector<int> degree;

    static BitGraph from(const AccessGraph& g) {
        if (g.node_count() > kMaxNodes)
            throw Error("GraphTooLarge", "graphs above 64 nodes are not supported");
        BitGraph b;
        b.n = g.node_count();
        b.adj.assign(b.n, 0);
        b.labels = g.labels;
        b.degree.assign(b.n, 0);
        for (const auto& [x, y] : g.edges) {
            b.adj[x] |= 1ull << y;
            b.adj[y] |= 1ull << x;
            b.degree[x]++;
            b.degree[y]++;
        }
        return b;
    }
};

// Cheap isomorphism invariants: node count, edge count, and the sorted
// (label, degree) multiset. Distinct invariants => not isomorphic.
std::vector<std::pair<int, int>> label_degree_signature(const BitGraph& g) {
    std::vector<std::pair<int, int>> sig(g.n);
    for (int i = 0; i < g.n; ++i) sig[i] = {static_cast<int>(g.labels[i]), g.degree[i]};
    std::sort(sig.begin(), sig.end());
    return sig;
}

// ---------------------------------------------------------------------------
// Backtracking isomorphism test
// ---------------------------------------------------------------------------

struct MatchState {
    const BitGraph& g1;
    const BitGraph& g2;
    std::vector<int> order;    // g1 vertices in matching order
    std::vector<int> map12;    // g1 -> g2 or -1
    std::vector<char> used2;   // g2 vertices already matched

    bool extend(size_t pos) {
        if (pos == order.size()) return true;
        int v = order[pos];
        for (int u = 0; u < g2.n; ++u) {
            if (used2[u] || g2.labels[u] != g1.labels[v] || g2.degree[u] != g1.degree[v]) continue;
            bool ok = true;
            for (size_t k = 0; k < pos && ok; ++k) {
                int w = order[k];
                bool e1 = (g1.adj[v] >> w) & 1;
                bool e2 = (g2.adj[u] >> map12[w]) & 1;
                if (e1 != e2) ok = false;
            }
            if (!ok) continue;
            map12[v] = u;
            used2[u] = 1;
            if (extend(pos + 1)) return true;
            used2[u] = 0;
            map12[v] = -1;
        }
        return false;
    }
};

// Matching order: BFS from the highest-degree vertex of each component, so
// most candidates are pruned by adjacency to already-mapped vertices.
std::vector<int> matching_order(const BitGraph& g) {
    std::vector<int> order;
    std::vector<char> seen(g.n, 0);
    while (static_cast<int>(order.size()) < g.n) {
        int start = -1;
        for (int i = 0; i < g.n; ++i)
            if (!seen[i] && (start < 0 || g.degree[i] > g.degree[start])) start = i;
        std::vector<int> queue{start};
        seen[start] = 1;
        for (size_t qi = 0; qi < queue.size(); ++qi) {
            int v = queue[qi];
            order.push_back(v);
            for (int u = 0; u < g.n; ++u) {
                if (!seen[u] && ((g.adj[v] >> u) & 1)) {
                    seen[u] = 1;
                    queue.push_back(u);
                }
            }
        }
    }
    return order;
}

// ---------------------------------------------------------------------------
// Canonicalization: individualization-refinement
// ---------------------------------------------------------------------------

// Stable color refinement. Colors are dense ranks 0..k-1 ordered by an
// isomorphism-invariant signature, so refinement commutes with relabeling.
void refine_colors(const BitGraph& g, std::vector<int>& color) {
    const int n = g.n;
    std::vector<std::vector<int>> nb_colors(n);
    while (true) {
        for (int v = 0; v < n; ++v) {
            auto& nc = nb_colors[v];
            nc.clear();
            std::uint64_t bits = g.adj[v];
            while (bits) {
                int u = std::countr_zero(bits);
                bits &= bits - 1;
                nc.push_back(color[u]);
            }
            std::sort(nc.begin(), nc.end());
        }
        // Signature: (old color, sorted neighbor colors). Re-rank.
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        auto sig_less = [&](int a, int b) {
            if (color[a] != color[b]) return color[a] < color[b];
            return nb_colors[a] < nb_colors[b];
        };
        auto sig_equal = [&](int a, int b) {
            return color[a] == color[b] && nb_colors[a] == nb_colors[b];
        };
        std::sort(idx.begin(), idx.end(), sig_less);
        std::vector<int> next(n);
        int rank = 0;
        next[idx[0]] = 0;
        for (int i = 1; i < n; ++i) {
            if (!sig_equal(idx[i - 1], idx[i])) ++rank;
            next[idx[i]] = rank;
        }
        if (next == color) break;
        color = std::move(next);
    }
}

std::string encode_ordered(const BitGraph& g, const std::vector<int>& position) {
    const int n = g.n;
    std::string enc;
    enc.resize(static_cast<size_t>(1 + n) + (static_cast<size_t>(n) * (n - 1) / 2 + 7) / 8, '\0');
    enc[0] = static_cast<char>(n);
    for (int v = 0; v < n; ++v) enc[1 + position[v]] = static_cast<char>(g.labels[v]);
    size_t base = 1 + static_cast<size_t>(n);
    for (int v = 0; v < n; ++v) {
        std::uint64_t bits = g.adj[v];
        while (bits) {
            int u = std::countr_zero(bits);
            bits &= bits - 1;
            int i = position[v], j = position[u];
            if (i > j) continue;  // each undirected edge written once
            // Upper-triangle bit index of (i, j), row-major.
            size_t bit = static_cast<size_t>(i) * (2 * n - i - 1) / 2 + (j - i - 1);
            enc[base + bit / 8] |= static_cast<char>(1u << (bit % 8));
        }
    }
    return enc;
}

void canonical_search(const BitGraph& g, std::vector<int> color, std::string& best, bool& have_best) {
    refine_colors(g, color);
    const int n = g.n;

    // First non-singleton cell (lowest color id).
    std::vector<int> cell_size(n, 0);
    for (int v = 0; v < n; ++v) cell_size[color[v]]++;
    int target = -1;
    for (int c = 0; c < n; ++c) {
        if (cell_size[c] > 1) {
            target = c;
            break;
        }
    }

    if (target < 0) {
        // Discrete coloring: color ranks are the canonical positions.
        std::string enc = encode_ordered(g, color);
        if (!have_best || enc < best) {
            best = std::move(enc);
            have_best = true;
        }
        return;
    }

    // Individualize each vertex of the target cell in turn: it keeps the
    // cell's color and the rest of the cell shifts up by one. Twins (vertices
    // whose adjacency rows agree outside each other) are interchangeable by
    // an automorphism, so only the first of each twin class is branched on.
    std::vector<int> branched;
    for (int v = 0; v < n; ++v) {
        if (color[v] != target) continue;
        bool twin = false;
        for (int u : branched) {
            if ((g.adj[u] & ~(1ull << v)) == (g.adj[v] & ~(1ull << u))) {
                twin = true;
                break;
            }
        }
        if (twin) continue;
        branched.push_back(v);
        std::vector<int> child(color);
        for (int u = 0; u < n; ++u) {
            if (child[u] > target || (child[u] == target && u != v)) child[u]++;
        }
        canonical_search(g, std::move(child), best, have_best);
    }
}

}  // namespace

std::string CanonicalKey::hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xf]);
    }
    return out;
}

bool is_isomorphic(const AccessGraph& g1, const AccessGraph& g2) {
    if (g1.node_count() != g2.node_count() || g1.edge_count() != g2.edge_count()) return false;
    BitGraph b1 = BitGraph::from(g1);
    BitGraph b2 = BitGraph::from(g2);
    if (label_degree_signature(b1) != label_degree_signature(b2)) return false;
    if (b1.n == 0) return true;

    MatchState state{b1, b2, matching_order(b1), std::vector<int>(b1.n, -1),
                     std::vector<char>(b1.n, 0)};
    return state.extend(0);
}

CanonicalKey canonical_key(const AccessGraph& g) {
    BitGraph b = BitGraph::from(g);
    if (b.n == 0) return CanonicalKey{std::string(1, '\0')};
    std::vector<int> color(b.n);
    for (int v = 0; v < b.n; ++v) color[v] = static_cast<int>(b.labels[v]);
    // Densify initial label colors to ranks.
    {
        std::vector<int> present;
        for (int c : color) present.push_back(c);
        std::sort(present.begin(), present.end());
        present.erase(std::unique(present.begin(), present.end()), present.end());
        for (int& c : color)
            c = static_cast<int>(std::lower_bound(present.begin(), present.end(), c) - present.begin());
    }
    std::string best;
    bool have_best = false;
    canonical_search(b, std::move(color), best, have_best);
    return CanonicalKey{std::move(best)};
}

DedupReport deduplicate(std::span<const AccessGraph> corpus) {
    DedupReport report;
    report.corpus_size = corpus.size();
    std::unordered_map<std::string, size_t> index;  // key bytes -> class position
    std::vector<DedupClass> classes;
    for (const AccessGraph& g : corpus) {
        CanonicalKey key = canonical_key(g);
        auto [it, inserted] = index.try_emplace(key.bytes, classes.size());
        if (inserted) {
            classes.push_back(DedupClass{std::move(key), g, {g.id}});
        } else {
            classes[it->second].member_ids.push_back(g.id);
        }
    }
    // Descending frequency, ties by first occurrence (stable sort keeps input order).
    std::stable_sort(classes.begin(), classes.end(),
                     [](const DedupClass& a, const DedupClass& b) {
                         return a.member_ids.size() > b.member_ids.size();
                     });
    report.classes = std::move(classes);
    return report;
}

std::string dedup_to_json(const DedupReport& report) {
    nlohmann::json out;
    out["corpus_size"] = report.corpus_size;
    auto classes = nlohmann::json::array();
    for (const auto& cls : report.classes) {
        nlohmann::json entry;
        entry["key"] = cls.key.hex();
        entry["frequency"] = cls.frequency();
        entry["representative_id"] = cls.representative.id;
        entry["representative"] = nlohmann::json::parse(to_jsonl(cls.representative));
        entry["member_ids"] = cls.member_ids;
        classes.push_back(std::move(entry));
    }
    out["classes"] = std::move(classes);
    return out.dump(2);
}

std::string dedup_to_csv(const DedupReport& report) {
    std::ostringstream out;
    out << "class_key,frequency,representative_id\n";
    for (const auto& cls : report.classes)
        out << cls.key.hex() << "," << cls.frequency() << "," << cls.representative.id << "\n";
    return out.str();
}

}  // namespace fpv
