#include "hcoref/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "hcoref/assignment.hpp"
#include "hcoref/errors.hpp"
#include "hcoref/graph_inference.hpp"

namespace hcoref {
namespace metrics {

namespace {

constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

std::unordered_map<std::string, std::size_t> cluster_index(const Partition& partition) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < partition.size(); ++c)
        for (const auto& id : partition[c]) index[id] = c;
    return index;
}

void require_same_universe(const Partition& gold, const Partition& pred) {
    std::set<std::string> gold_ids, pred_ids;
    for (const auto& cluster : gold) gold_ids.insert(cluster.begin(), cluster.end());
    for (const auto& cluster : pred) pred_ids.insert(cluster.begin(), cluster.end());
    if (gold_ids != pred_ids)
        throw ValidationError("partitions cover different mention universes");
}

// One side of MUC: how many links of `base` clusters survive in `other`.
double muc_side(const Partition& base, const Partition& other) {
    auto other_of = cluster_index(other);
    double numerator = 0.0, denominator = 0.0;
    for (const auto& cluster : base) {
        if (cluster.size() < 2) continue;
        std::set<std::size_t> parts;
        for (const auto& id : cluster) parts.insert(other_of.at(id));
        numerator += static_cast<double>(cluster.size()) - static_cast<double>(parts.size());
        denominator += static_cast<double>(cluster.size()) - 1.0;
    }
    return denominator > 0.0 ? numerator / denominator : 0.0;
}

double b_cubed_side(const Partition& base, const Partition& other) {
    auto base_of = cluster_index(base);
    auto other_of = cluster_index(other);
    if (base_of.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [id, b] : base_of) {
        const auto& base_cluster = base[b];
        std::size_t overlap = 0;
        for (const auto& member : base_cluster)
            if (other_of.at(member) == other_of.at(id)) ++overlap;
        total += static_cast<double>(overlap) / static_cast<double>(base_cluster.size());
    }
    return total / static_cast<double>(base_of.size());
}

double lea_side(const Partition& base, const Partition& other) {
    auto other_of = cluster_index(other);
    std::unordered_map<std::size_t, std::size_t> other_sizes;
    for (std::size_t c = 0; c < other.size(); ++c) other_sizes[c] = other[c].size();

    double weighted = 0.0, weight_total = 0.0;
    for (const auto& cluster : base) {
        double resolved;
        if (cluster.size() == 1) {
            // Self-link: resolved iff the mention is a singleton on both sides.
            resolved = other[other_of.at(cluster.front())].size() == 1 ? 1.0 : 0.0;
        } else {
            std::size_t hits = 0;
            for (std::size_t i = 0; i < cluster.size(); ++i)
                for (std::size_t j = i + 1; j < cluster.size(); ++j)
                    if (other_of.at(cluster[i]) == other_of.at(cluster[j])) ++hits;
            double links =
                static_cast<double>(cluster.size()) * (static_cast<double>(cluster.size()) - 1.0) / 2.0;
            resolved = static_cast<double>(hits) / links;
        }
        weighted += static_cast<double>(cluster.size()) * resolved;
        weight_total += static_cast<double>(cluster.size());
    }
    return weight_total > 0.0 ? weighted / weight_total : 0.0;
}

std::size_t overlap_size(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    // Both sides sorted by construction is not guaranteed for callers; use a set.
    std::set<std::string> sa(a.begin(), a.end());
    std::size_t count = 0;
    for (const auto& id : b)
        if (sa.count(id)) ++count;
    return count;
}

bool clusters_match(const std::vector<std::string>& pred_cluster,
                    const std::vector<std::string>& gold_cluster, OverlapMode mode) {
    std::size_t overlap = overlap_size(pred_cluster, gold_cluster);
    if (mode == OverlapMode::Any) return overlap > 0;
    return 2 * overlap >= pred_cluster.size() && 2 * overlap >= gold_cluster.size();
}

std::vector<std::vector<std::size_t>> undirected_distances(const ClusterGraph& graph) {
    std::size_t n = graph.clusters.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& edge : graph.edges) {
        adj[edge.parent].push_back(edge.child);
        adj[edge.child].push_back(edge.parent);
    }
    std::vector<std::vector<std::size_t>> dist(n, std::vector<std::size_t>(n, kUnreachable));
    for (std::size_t s = 0; s < n; ++s) {
        std::deque<std::size_t> queue{s};
        dist[s][s] = 0;
        while (!queue.empty()) {
            auto node = queue.front();
            queue.pop_front();
            for (auto next : adj[node]) {
                if (dist[s][next] != kUnreachable) continue;
                dist[s][next] = dist[s][node] + 1;
                queue.push_back(next);
            }
        }
    }
    return dist;
}

}  // namespace

double harmonic_f1(double recall, double precision) {
    if (recall + precision == 0.0) return 0.0;
    return 2.0 * recall * precision / (recall + precision);
}

Prf muc(const Partition& gold, const Partition& pred) {
    require_same_universe(gold, pred);
    Prf out;
    out.recall = muc_side(gold, pred);
    out.precision = muc_side(pred, gold);
    out.f1 = harmonic_f1(out.recall, out.precision);
    return out;
}

Prf b_cubed(const Partition& gold, const Partition& pred) {
    require_same_universe(gold, pred);
    Prf out;
    out.recall = b_cubed_side(gold, pred);
    out.precision = b_cubed_side(pred, gold);
    out.f1 = harmonic_f1(out.recall, out.precision);
    return out;
}

Prf ceaf_e(const Partition& gold, const Partition& pred) {
    require_same_universe(gold, pred);
    Prf out;
    if (gold.empty() || pred.empty()) return out;
    std::vector<std::vector<double>> phi(gold.size(), std::vector<double>(pred.size(), 0.0));
    for (std::size_t g = 0; g < gold.size(); ++g)
        for (std::size_t p = 0; p < pred.size(); ++p)
            phi[g][p] = 2.0 * static_cast<double>(overlap_size(gold[g], pred[p])) /
                        (static_cast<double>(gold[g].size()) + static_cast<double>(pred[p].size()));
    double best = max_assignment_score(phi);
    out.recall = best / static_cast<double>(gold.size());
    out.precision = best / static_cast<double>(pred.size());
    out.f1 = harmonic_f1(out.recall, out.precision);
    return out;
}

Prf lea(const Partition& gold, const Partition& pred) {
    require_same_universe(gold, pred);
    Prf out;
    out.recall = lea_side(gold, pred);
    out.precision = lea_side(pred, gold);
    out.f1 = harmonic_f1(out.recall, out.precision);
    return out;
}

CoreferenceReport coreference_report(const Partition& gold, const Partition& pred) {
    CoreferenceReport report;
    report.muc = muc(gold, pred);
    report.b3 = b_cubed(gold, pred);
    report.ceafe = ceaf_e(gold, pred);
    report.lea = lea(gold, pred);
    report.conll_f1 = conll_f1(report);
    return report;
}

double conll_f1(const CoreferenceReport& report) {
    return (report.muc.f1 + report.b3.f1 + report.ceafe.f1) / 3.0;
}

Prf hierarchy_score(const ClusterGraph& gold, const ClusterGraph& pred, OverlapMode mode) {
    auto edge_matches = [&](const ClusterGraph::Edge& a, const ClusterGraph& a_graph,
                            const ClusterGraph::Edge& b, const ClusterGraph& b_graph) {
        return clusters_match(a_graph.clusters[a.parent], b_graph.clusters[b.parent], mode) &&
               clusters_match(a_graph.clusters[a.child], b_graph.clusters[b.child], mode);
    };

    Prf out;
    if (gold.edges.empty() && pred.edges.empty()) {
        out.recall = out.precision = out.f1 = 1.0;
        return out;
    }
    std::size_t recalled = 0;
    for (const auto& gold_edge : gold.edges) {
        for (const auto& pred_edge : pred.edges) {
            if (edge_matches(pred_edge, pred, gold_edge, gold)) {
                ++recalled;
                break;
            }
        }
    }
    std::size_t correct = 0;
    for (const auto& pred_edge : pred.edges) {
        for (const auto& gold_edge : gold.edges) {
            if (edge_matches(pred_edge, pred, gold_edge, gold)) {
                ++correct;
                break;
            }
        }
    }
    out.recall = gold.edges.empty()
                     ? 0.0
                     : static_cast<double>(recalled) / static_cast<double>(gold.edges.size());
    out.precision = pred.edges.empty()
                        ? 0.0
                        : static_cast<double>(correct) / static_cast<double>(pred.edges.size());
    out.f1 = harmonic_f1(out.recall, out.precision);
    return out;
}

double path_ratio(const ClusterGraph& gold, const ClusterGraph& pred) {
    // Align each pred cluster to the gold cluster of maximum overlap
    // (ties: smallest gold index; zero overlap: unaligned)...
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> aligned_gold(pred.clusters.size(), kNone);
    std::vector<std::size_t> aligned_overlap(pred.clusters.size(), 0);
    for (std::size_t p = 0; p < pred.clusters.size(); ++p) {
        for (std::size_t g = 0; g < gold.clusters.size(); ++g) {
            std::size_t ov = overlap_size(pred.clusters[p], gold.clusters[g]);
            if (ov > aligned_overlap[p]) {
                aligned_overlap[p] = ov;
                aligned_gold[p] = g;
            }
        }
    }
    // ...then pick, per gold cluster, the best-overlapping pred aligned to it.
    std::vector<std::size_t> pred_of_gold(gold.clusters.size(), kNone);
    std::vector<std::size_t> pred_overlap(gold.clusters.size(), 0);
    for (std::size_t p = 0; p < pred.clusters.size(); ++p) {
        if (aligned_gold[p] == kNone) continue;
        std::size_t g = aligned_gold[p];
        if (aligned_overlap[p] > pred_overlap[g]) {
            pred_overlap[g] = aligned_overlap[p];
            pred_of_gold[g] = p;
        }
    }

    auto gold_dist = undirected_distances(gold);
    auto pred_dist = undirected_distances(pred);

    std::size_t total = 0, matched = 0;
    for (std::size_t i = 0; i < gold.clusters.size(); ++i) {
        for (std::size_t j = i + 1; j < gold.clusters.size(); ++j) {
            if (gold_dist[i][j] == kUnreachable) continue;
            ++total;
            if (pred_of_gold[i] == kNone || pred_of_gold[j] == kNone) continue;
            std::size_t d = pred_dist[pred_of_gold[i]][pred_of_gold[j]];
            if (d != kUnreachable && d == gold_dist[i][j]) ++matched;
        }
    }
    return total == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(total);
}

HierarchyReport hierarchy_report(const ClusterGraph& gold, const ClusterGraph& pred) {
    HierarchyReport report;
    report.hierarchy = hierarchy_score(gold, pred, OverlapMode::Any);
    report.hierarchy_50 = hierarchy_score(gold, pred, OverlapMode::Half);
    report.path_ratio = path_ratio(gold, pred);
    return report;
}

int levenshtein(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<int> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        int diagonal = row[0];
        row[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            int previous = row[j];
            int substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, substitute});
            diagonal = previous;
        }
    }
    return row[b.size()];
}

double surface_similarity(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    double longest = static_cast<double>(std::max(a.size(), b.size()));
    return 1.0 - static_cast<double>(levenshtein(a, b)) / longest;
}

Partition lexical_baseline_cluster(const Topic& topic, double tau_c) {
    std::unordered_map<std::string, std::string> surface_of;
    std::vector<std::string> ids;
    for (const auto& m : topic.mentions) {
        surface_of[m.mention_id] = m.surface;
        ids.push_back(m.mention_id);
    }
    auto similarity = [&](const std::string& a, const std::string& b) {
        return surface_similarity(surface_of.at(a), surface_of.at(b));
    };
    return agglomerative_cluster(ids, similarity, tau_c);
}

std::vector<TopicScore> baseline_topic_scores(const std::vector<Topic>& topics, double tau_c) {
    std::vector<TopicScore> scores;
    scores.reserve(topics.size());
    for (const auto& topic : topics) {
        if (!topic.gold)
            throw ValidationError("topic " + topic.topic_id +
                                  " has no gold annotation for baseline scoring");
        auto pred = lexical_baseline_cluster(topic, tau_c);
        auto gold = partition_from_gold(*topic.gold);
        scores.push_back({topic.topic_id, coreference_report(gold, pred).conll_f1});
    }
    return scores;
}

std::vector<std::string> select_hard_subset(const std::vector<Topic>& topics,
                                            double fraction, double tau_c) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw ValidationError("hard-subset fraction must be in (0, 1]");
    auto scores = baseline_topic_scores(topics, tau_c);
    std::sort(scores.begin(), scores.end(), [](const TopicScore& a, const TopicScore& b) {
        if (a.baseline_conll_f1 != b.baseline_conll_f1)
            return a.baseline_conll_f1 < b.baseline_conll_f1;
        return a.topic_id < b.topic_id;
    });
    std::size_t keep = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(topics.size())));
    std::vector<std::string> ids;
    ids.reserve(keep);
    for (std::size_t i = 0; i < keep && i < scores.size(); ++i)
        ids.push_back(scores[i].topic_id);
    return ids;
}

}  // namespace metrics
}  // namespace hcoref
