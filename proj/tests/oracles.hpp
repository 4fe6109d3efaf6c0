#pragma once

// Independent brute-force oracles for the metric suite. These deliberately
// re-derive every number from first principles (maps, pair enumeration,
// exhaustive matching) and share no code with the library implementations.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hcoref/cluster_graph.hpp"

namespace hcoref::testing {

struct OraclePrf {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

inline double oracle_f1(double r, double p) { return r + p > 0 ? 2 * r * p / (r + p) : 0.0; }

inline std::map<std::string, int> membership(const Partition& partition) {
    std::map<std::string, int> of;
    for (std::size_t c = 0; c < partition.size(); ++c)
        for (const auto& id : partition[c]) of[id] = static_cast<int>(c);
    return of;
}

inline double muc_oracle_side(const Partition& base, const Partition& other) {
    auto other_of = membership(other);
    double num = 0, den = 0;
    for (const auto& cluster : base) {
        if (cluster.size() <= 1) continue;
        std::set<int> touched;
        for (const auto& id : cluster) touched.insert(other_of.at(id));
        num += double(cluster.size()) - double(touched.size());
        den += double(cluster.size()) - 1.0;
    }
    return den > 0 ? num / den : 0.0;
}

inline OraclePrf muc_oracle(const Partition& gold, const Partition& pred) {
    OraclePrf out;
    out.recall = muc_oracle_side(gold, pred);
    out.precision = muc_oracle_side(pred, gold);
    out.f1 = oracle_f1(out.recall, out.precision);
    return out;
}

inline double b3_oracle_side(const Partition& base, const Partition& other) {
    auto base_of = membership(base);
    auto other_of = membership(other);
    if (base_of.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [id, bc] : base_of) {
        double same = 0.0, size = 0.0;
        for (const auto& [peer, pc] : base_of) {
            if (pc != bc) continue;
            size += 1.0;
            if (other_of.at(peer) == other_of.at(id)) same += 1.0;
        }
        total += same / size;
    }
    return total / double(base_of.size());
}

inline OraclePrf b3_oracle(const Partition& gold, const Partition& pred) {
    OraclePrf out;
    out.recall = b3_oracle_side(gold, pred);
    out.precision = b3_oracle_side(pred, gold);
    out.f1 = oracle_f1(out.recall, out.precision);
    return out;
}

// CEAFe by exhaustive injection of the smaller cluster list into the larger.
inline double ceafe_best_matching(const std::vector<std::vector<double>>& phi) {
    std::size_t rows = phi.size();
    std::size_t cols = rows ? phi.front().size() : 0;
    if (rows == 0 || cols == 0) return 0.0;
    if (rows > cols) {
        std::vector<std::vector<double>> flipped(cols, std::vector<double>(rows));
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) flipped[c][r] = phi[r][c];
        return ceafe_best_matching(flipped);
    }
    std::vector<std::size_t> columns(cols);
    for (std::size_t c = 0; c < cols; ++c) columns[c] = c;
    double best = 0.0;
    // rows <= cols: try every ordered choice of rows-many distinct columns.
    std::vector<bool> used(cols, false);
    std::vector<std::size_t> chosen(rows, 0);
    auto recurse = [&](auto&& self, std::size_t row, double sum) -> void {
        if (row == rows) {
            best = std::max(best, sum);
            return;
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (used[c]) continue;
            used[c] = true;
            self(self, row + 1, sum + phi[row][c]);
            used[c] = false;
        }
    };
    recurse(recurse, 0, 0.0);
    return best;
}

inline OraclePrf ceafe_oracle(const Partition& gold, const Partition& pred) {
    OraclePrf out;
    if (gold.empty() || pred.empty()) return out;
    std::vector<std::vector<double>> phi(gold.size(), std::vector<double>(pred.size()));
    for (std::size_t g = 0; g < gold.size(); ++g) {
        std::set<std::string> gold_set(gold[g].begin(), gold[g].end());
        for (std::size_t p = 0; p < pred.size(); ++p) {
            double overlap = 0;
            for (const auto& id : pred[p]) overlap += gold_set.count(id) ? 1.0 : 0.0;
            phi[g][p] = 2.0 * overlap / (double(gold[g].size()) + double(pred[p].size()));
        }
    }
    double best = ceafe_best_matching(phi);
    out.recall = best / double(gold.size());
    out.precision = best / double(pred.size());
    out.f1 = oracle_f1(out.recall, out.precision);
    return out;
}

inline double lea_oracle_side(const Partition& base, const Partition& other) {
    auto other_of = membership(other);
    std::map<int, std::size_t> other_size;
    for (std::size_t c = 0; c < other.size(); ++c) other_size[int(c)] = other[c].size();
    double num = 0, den = 0;
    for (const auto& cluster : base) {
        double importance = double(cluster.size());
        double resolved;
        if (cluster.size() == 1) {
            resolved = other_size.at(other_of.at(cluster.front())) == 1 ? 1.0 : 0.0;
        } else {
            double links = 0, hits = 0;
            for (std::size_t i = 0; i < cluster.size(); ++i)
                for (std::size_t j = i + 1; j < cluster.size(); ++j) {
                    links += 1.0;
                    if (other_of.at(cluster[i]) == other_of.at(cluster[j])) hits += 1.0;
                }
            resolved = hits / links;
        }
        num += importance * resolved;
        den += importance;
    }
    return den > 0 ? num / den : 0.0;
}

inline OraclePrf lea_oracle(const Partition& gold, const Partition& pred) {
    OraclePrf out;
    out.recall = lea_oracle_side(gold, pred);
    out.precision = lea_oracle_side(pred, gold);
    out.f1 = oracle_f1(out.recall, out.precision);
    return out;
}

/// Exponential recursion on suffixes (equal heads collapse by the standard
/// prefix lemma); no DP table anywhere.
inline int levenshtein_recursive(std::string_view a, std::string_view b) {
    while (!a.empty() && !b.empty() && a.front() == b.front()) {
        a.remove_prefix(1);
        b.remove_prefix(1);
    }
    if (a.empty()) return static_cast<int>(b.size());
    if (b.empty()) return static_cast<int>(a.size());
    int erase = levenshtein_recursive(a.substr(1), b);
    int insert = levenshtein_recursive(a, b.substr(1));
    int replace = levenshtein_recursive(a.substr(1), b.substr(1));
    return 1 + std::min({erase, insert, replace});
}

/// Pure-textbook variant without the prefix lemma, for cross-checking the
/// faster oracle on very short strings.
inline int levenshtein_recursive_plain(std::string_view a, std::string_view b) {
    if (a.empty()) return static_cast<int>(b.size());
    if (b.empty()) return static_cast<int>(a.size());
    int erase = 1 + levenshtein_recursive_plain(a.substr(1), b);
    int insert = 1 + levenshtein_recursive_plain(a, b.substr(1));
    int replace = (a.front() == b.front() ? 0 : 1) +
                  levenshtein_recursive_plain(a.substr(1), b.substr(1));
    return std::min({erase, insert, replace});
}

/// All-pairs shortest path by breadth-first search over the undirected view.
inline std::vector<std::vector<int>> bfs_distances_oracle(std::size_t n,
                                                          const ClusterGraph& graph) {
    std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& edge : graph.edges) {
        adj[edge.parent].push_back(edge.child);
        adj[edge.child].push_back(edge.parent);
    }
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::size_t> frontier{s};
        dist[s][s] = 0;
        int depth = 0;
        while (!frontier.empty()) {
            ++depth;
            std::vector<std::size_t> next;
            for (auto node : frontier)
                for (auto peer : adj[node])
                    if (dist[s][peer] < 0) {
                        dist[s][peer] = depth;
                        next.push_back(peer);
                    }
            frontier = std::move(next);
        }
    }
    return dist;
}

}  // namespace hcoref::testing
