#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hcoref/cluster_graph.hpp"
#include "hcoref/corpus.hpp"

namespace hcoref {
namespace metrics {

struct Prf {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

double harmonic_f1(double recall, double precision);

// Coreference metrics over two partitions of the same mention universe.
Prf muc(const Partition& gold, const Partition& pred);
Prf b_cubed(const Partition& gold, const Partition& pred);
Prf ceaf_e(const Partition& gold, const Partition& pred);
Prf lea(const Partition& gold, const Partition& pred);

struct CoreferenceReport {
    Prf muc;
    Prf b3;
    Prf ceafe;
    Prf lea;
    double conll_f1 = 0.0;  // mean of MUC/B3/CEAFe F1
};

CoreferenceReport coreference_report(const Partition& gold, const Partition& pred);
double conll_f1(const CoreferenceReport& report);

// Hierarchy metrics.
enum class OverlapMode { Any, Half };

/// Edge-level recall/precision with cluster matching by overlap:
/// Any-mode matches on non-empty intersection; Half-mode requires the
/// intersection to cover at least half of both clusters (the F1-50% variant).
Prf hierarchy_score(const ClusterGraph& gold, const ClusterGraph& pred, OverlapMode mode);

/// Fraction of connected gold cluster pairs whose shortest-path distance is
/// preserved between the max-overlap-aligned predicted clusters (undirected
/// BFS on both graphs; 1.0 when no gold pair is connected).
double path_ratio(const ClusterGraph& gold, const ClusterGraph& pred);

struct HierarchyReport {
    Prf hierarchy;
    Prf hierarchy_50;
    double path_ratio = 0.0;
};

HierarchyReport hierarchy_report(const ClusterGraph& gold, const ClusterGraph& pred);

// Levenshtein baseline.
int levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein(a, b) / max(|a|, |b|); 1.0 for two empty strings.
double surface_similarity(std::string_view a, std::string_view b);

Partition lexical_baseline_cluster(const Topic& topic, double tau_c);

struct TopicScore {
    std::string topic_id;
    double baseline_conll_f1 = 0.0;
};

/// Baseline CoNLL F1 per topic (requires gold), used for hard-subset ranking.
std::vector<TopicScore> baseline_topic_scores(const std::vector<Topic>& topics, double tau_c);

/// The floor(fraction * |topics|) topics with the lowest Levenshtein-baseline
/// CoNLL F1, ties by topic_id ascending, returned sorted by score ascending.
std::vector<std::string> select_hard_subset(const std::vector<Topic>& topics,
                                            double fraction, double tau_c);

}  // namespace metrics
}  // namespace hcoref
