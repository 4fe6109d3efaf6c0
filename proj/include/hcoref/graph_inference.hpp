#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hcoref/cluster_graph.hpp"
#include "hcoref/pair_scoring.hpp"

namespace hcoref {

struct ClusteringConfig {
    double tau_c = 0.5;  // merge-stop threshold; linkage is always average
};

struct HierarchyConfig {
    double tau_h = 0.5;  // directed-edge emission threshold
};

using SimilarityFn = std::function<double(const std::string&, const std::string&)>;

/// Average-linkage agglomerative clustering over `ids` with a pairwise
/// similarity function: start from singletons, repeatedly merge the cluster
/// pair with the highest mean inter-cluster similarity while that maximum is
/// >= tau_c. Ties go to the pair with the smallest (min id, min id) key.
/// Clusters are returned sorted by their minimum id, members sorted.
Partition agglomerative_cluster(const std::vector<std::string>& ids,
                                const SimilarityFn& similarity, double tau_c);

/// Clustering on similarity = P(Coref); pairs absent from `pairs` count as 0.
Partition cluster_mentions(const std::vector<ScoredPair>& pairs,
                           const std::vector<std::string>& mention_ids,
                           const ClusteringConfig& config);

/// Directed cluster-pair relations from mean cross-cluster distributions.
/// Coref mass folds into None (the partition is already fixed); the argmax
/// directed edge is emitted when its mean probability is >= tau_h. Cycles are
/// repaired by deleting the minimum-confidence edge on a cycle until acyclic.
ClusterGraph induce_hierarchy(const Partition& partition,
                              const std::vector<ScoredPair>& pairs,
                              const HierarchyConfig& config);

}  // namespace hcoref
