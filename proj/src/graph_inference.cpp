#include "hcoref/graph_inference.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "hcoref/errors.hpp"

namespace hcoref {

namespace {

struct ActiveCluster {
    std::vector<std::string> members;
    std::string min_id;
    bool alive = true;
};

}  // namespace

Partition agglomerative_cluster(const std::vector<std::string>& ids,
                                const SimilarityFn& similarity, double tau_c) {
    std::vector<std::string> sorted_ids = ids;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    std::size_t n = sorted_ids.size();

    std::vector<ActiveCluster> clusters(n);
    for (std::size_t i = 0; i < n; ++i) {
        clusters[i].members = {sorted_ids[i]};
        clusters[i].min_id = sorted_ids[i];
    }

    // sum[i][j] = total pairwise similarity between members of i and j, so the
    // average linkage after a merge is a pure index update.
    std::vector<std::vector<double>> sum(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            sum[i][j] = sum[j][i] = similarity(sorted_ids[i], sorted_ids[j]);

    for (;;) {
        double best_avg = 0.0;
        bool found = false;
        std::size_t best_i = 0, best_j = 0;
        std::pair<std::string, std::string> best_key;
        for (std::size_t i = 0; i < n; ++i) {
            if (!clusters[i].alive) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!clusters[j].alive) continue;
                double avg = sum[i][j] / (static_cast<double>(clusters[i].members.size()) *
                                          static_cast<double>(clusters[j].members.size()));
                auto key = clusters[i].min_id < clusters[j].min_id
                               ? std::make_pair(clusters[i].min_id, clusters[j].min_id)
                               : std::make_pair(clusters[j].min_id, clusters[i].min_id);
                if (!found || avg > best_avg || (avg == best_avg && key < best_key)) {
                    found = true;
                    best_avg = avg;
                    best_i = i;
                    best_j = j;
                    best_key = key;
                }
            }
        }
        if (!found || best_avg < tau_c) break;

        auto& into = clusters[best_i];
        auto& from = clusters[best_j];
        into.members.insert(into.members.end(), from.members.begin(), from.members.end());
        into.min_id = std::min(into.min_id, from.min_id);
        from.alive = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == best_i || k == best_j) continue;
            sum[best_i][k] += sum[best_j][k];
            sum[k][best_i] = sum[best_i][k];
        }
    }

    Partition out;
    for (auto& cluster : clusters) {
        if (!cluster.alive) continue;
        std::sort(cluster.members.begin(), cluster.members.end());
        out.push_back(std::move(cluster.members));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

Partition cluster_mentions(const std::vector<ScoredPair>& pairs,
                           const std::vector<std::string>& mention_ids,
                           const ClusteringConfig& config) {
    std::map<MentionPair, double> coref;
    for (const auto& scored : pairs)
        coref[scored.pair] = scored.distribution[static_cast<std::size_t>(RelationClass::Coref)];
    auto similarity = [&](const std::string& a, const std::string& b) {
        auto it = coref.find(MentionPair::canonical(a, b));
        return it == coref.end() ? 0.0 : it->second;
    };
    return agglomerative_cluster(mention_ids, similarity, config.tau_c);
}

namespace {

// Mean cross-cluster distribution, reoriented onto the unordered cluster pair
// (lo, hi): [none + coref, lo->hi, hi->lo].
struct RelationTally {
    double none = 0.0;
    double lo_to_hi = 0.0;
    double hi_to_lo = 0.0;
    std::size_t count = 0;
};

// Deterministic cycle search: DFS from the smallest cluster index along edges
// sorted by (parent, child). Returns edge indices on one cycle, or empty.
std::vector<std::size_t> find_cycle(std::size_t n, const std::vector<ClusterGraph::Edge>& edges) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);  // (child, edge idx)
    for (std::size_t e = 0; e < edges.size(); ++e)
        adj[edges[e].parent].push_back({edges[e].child, e});
    for (auto& out : adj) std::sort(out.begin(), out.end());

    std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
    std::vector<std::pair<std::size_t, std::size_t>> stack;  // (node, next adj position)
    std::vector<std::size_t> edge_path;

    for (std::size_t root = 0; root < n; ++root) {
        if (state[root] != 0) continue;
        stack.push_back({root, 0});
        state[root] = 1;
        while (!stack.empty()) {
            auto& [node, pos] = stack.back();
            if (pos >= adj[node].size()) {
                state[node] = 2;
                stack.pop_back();
                if (!edge_path.empty()) edge_path.pop_back();
                continue;
            }
            auto [child, edge_idx] = adj[node][pos++];
            if (state[child] == 1) {
                // Found a back edge: the cycle is the path suffix from `child`.
                edge_path.push_back(edge_idx);
                std::vector<std::size_t> cycle;
                bool collecting = false;
                for (std::size_t e : edge_path) {
                    if (edges[e].parent == child) collecting = true;
                    if (collecting) cycle.push_back(e);
                }
                return cycle;
            }
            if (state[child] == 0) {
                state[child] = 1;
                edge_path.push_back(edge_idx);
                stack.push_back({child, 0});
            }
        }
    }
    return {};
}

}  // namespace

ClusterGraph induce_hierarchy(const Partition& partition,
                              const std::vector<ScoredPair>& pairs,
                              const HierarchyConfig& config) {
    std::unordered_map<std::string, std::size_t> cluster_of;
    for (std::size_t c = 0; c < partition.size(); ++c)
        for (const auto& id : partition[c]) cluster_of[id] = c;

    std::map<std::pair<std::size_t, std::size_t>, RelationTally> tallies;
    for (const auto& scored : pairs) {
        auto it1 = cluster_of.find(scored.pair.first);
        auto it2 = cluster_of.find(scored.pair.second);
        if (it1 == cluster_of.end() || it2 == cluster_of.end())
            throw ValidationError("scored pair mentions missing from partition");
        std::size_t c1 = it1->second, c2 = it2->second;
        if (c1 == c2) continue;
        std::size_t lo = std::min(c1, c2), hi = std::max(c1, c2);
        auto& tally = tallies[{lo, hi}];
        const auto& p = scored.distribution;
        tally.none += p[static_cast<std::size_t>(RelationClass::None)] +
                      p[static_cast<std::size_t>(RelationClass::Coref)];
        // FirstParent means cluster(first) -> cluster(second).
        if (c1 == lo) {
            tally.lo_to_hi += p[static_cast<std::size_t>(RelationClass::FirstParent)];
            tally.hi_to_lo += p[static_cast<std::size_t>(RelationClass::SecondParent)];
        } else {
            tally.hi_to_lo += p[static_cast<std::size_t>(RelationClass::FirstParent)];
            tally.lo_to_hi += p[static_cast<std::size_t>(RelationClass::SecondParent)];
        }
        tally.count++;
    }

    ClusterGraph graph;
    graph.clusters = partition;
    for (const auto& [key, tally] : tallies) {
        if (tally.count == 0) continue;
        double n = static_cast<double>(tally.count);
        double none = tally.none / n;
        double forward = tally.lo_to_hi / n;
        double backward = tally.hi_to_lo / n;
        if (none >= forward && none >= backward) continue;
        if (forward >= backward) {
            if (forward >= config.tau_h)
                graph.edges.push_back({key.first, key.second, forward});
        } else {
            if (backward >= config.tau_h)
                graph.edges.push_back({key.second, key.first, backward});
        }
    }

    // Restore acyclicity: drop the weakest edge on a cycle until none remain.
    for (;;) {
        auto cycle = find_cycle(graph.clusters.size(), graph.edges);
        if (cycle.empty()) break;
        std::size_t weakest = cycle.front();
        for (std::size_t e : cycle) {
            if (graph.edges[e].confidence < graph.edges[weakest].confidence ||
                (graph.edges[e].confidence == graph.edges[weakest].confidence &&
                 std::make_pair(graph.edges[e].parent, graph.edges[e].child) <
                     std::make_pair(graph.edges[weakest].parent, graph.edges[weakest].child)))
                weakest = e;
        }
        graph.edges.erase(graph.edges.begin() + static_cast<std::ptrdiff_t>(weakest));
    }

    std::sort(graph.edges.begin(), graph.edges.end(), [](const auto& a, const auto& b) {
        return std::make_pair(a.parent, a.child) < std::make_pair(b.parent, b.child);
    });
    return graph;
}

}  // namespace hcoref
