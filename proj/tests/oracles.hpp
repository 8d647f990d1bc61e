// Test-side oracles, deliberately independent of the library's algorithms:
// brute-force isomorphism by permutation enumeration, Floyd-Warshall
// all-pairs distances, and a random labeled graph generator.
#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "fpv/graph.hpp"

namespace oracles {

/// All label-preserving bijections, n <= 8 (8! = 40320).
inline bool iso_bruteforce(const fpv::AccessGraph& a, const fpv::AccessGraph& b) {
    int n = a.node_count();
    if (n != b.node_count() || a.edge_count() != b.edge_count()) return false;
    std::vector<std::vector<char>> adj_a(n, std::vector<char>(n, 0));
    std::vector<std::vector<char>> adj_b(n, std::vector<char>(n, 0));
    for (auto [x, y] : a.edges) adj_a[x][y] = adj_a[y][x] = 1;
    for (auto [x, y] : b.edges) adj_b[x][y] = adj_b[y][x] = 1;

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (int i = 0; i < n && ok; ++i)
            if (a.labels[i] != b.labels[perm[i]]) ok = false;
        for (int i = 0; i < n && ok; ++i)
            for (int j = i + 1; j < n && ok; ++j)
                if (adj_a[i][j] != adj_b[perm[i]][perm[j]]) ok = false;
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

inline std::vector<std::vector<int>> floyd_warshall(const fpv::AccessGraph& g) {
    int n = g.node_count();
    const int inf = 1 << 20;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (int i = 0; i < n; ++i) d[i][i] = 0;
    for (auto [x, y] : g.edges) d[x][y] = d[y][x] = 1;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    return d;
}

/// Random labeled graph over a small label alphabet; may be disconnected.
inline fpv::AccessGraph random_graph(std::mt19937_64& rng, int max_nodes = 8, int n_labels = 3) {
    fpv::AccessGraph g;
    int n = std::uniform_int_distribution<int>(1, max_nodes)(rng);
    for (int i = 0; i < n; ++i)
        g.labels.push_back(static_cast<fpv::RoomLabel>(
            std::uniform_int_distribution<int>(0, n_labels - 1)(rng)));
    std::uniform_real_distribution<double> u(0, 1);
    double p = u(rng);  // vary density so some pairs collide structurally
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (u(rng) < p) g.edges.emplace_back(i, j);
    return g;
}

inline std::vector<int> random_permutation(std::mt19937_64& rng, int n) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

/// Random connected graph with distinct-ish labels for metric tests.
inline fpv::AccessGraph random_connected_graph(std::mt19937_64& rng, int n, double extra_p = 0.2) {
    fpv::AccessGraph g;
    for (int i = 0; i < n; ++i)
        g.labels.push_back(static_cast<fpv::RoomLabel>(
            std::uniform_int_distribution<int>(0, fpv::kNumRoomLabels - 1)(rng)));
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 1; i < n; ++i)
        g.edges.emplace_back(std::uniform_int_distribution<int>(0, i - 1)(rng), i);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (u(rng) >= extra_p) continue;
            bool present = false;
            for (auto [x, y] : g.edges)
                if (x == std::min(i, j) && y == std::max(i, j)) present = true;
            if (!present) g.edges.emplace_back(std::min(i, j), std::max(i, j));
        }
    return g;
}

}  // namespace oracles
