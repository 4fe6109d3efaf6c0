#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hcoref/corpus.hpp"

namespace hcoref {

using Partition = std::vector<std::vector<std::string>>;

/// A partition of a topic's mentions plus directed parent -> child edges
/// between clusters, with a confidence per edge.
struct ClusterGraph {
    Partition clusters;
    struct Edge {
        std::size_t parent = 0;
        std::size_t child = 0;
        double confidence = 0.0;
    };
    std::vector<Edge> edges;
};

/// Disjointness, exhaustiveness over `mention_ids`, index bounds, no
/// self-loops, acyclicity. Throws ValidationError on the first failure.
void validate_cluster_graph(const ClusterGraph& graph,
                            const std::vector<std::string>& mention_ids);

bool graph_is_acyclic(const ClusterGraph& graph);

/// Gold annotation as a ClusterGraph. Clusters are ordered by ascending gold
/// cluster id and mention ids sorted within each cluster, so the result is
/// deterministic. Edge confidences are 1.
ClusterGraph gold_cluster_graph(const Topic& topic);

Partition partition_from_gold(const GoldAnnotation& gold);

nlohmann::json cluster_graph_to_json(const std::string& topic_id, const ClusterGraph& graph);
std::pair<std::string, ClusterGraph> cluster_graph_from_json(const nlohmann::json& record);

void write_cluster_graphs(const std::string& path,
                          const std::vector<std::pair<std::string, ClusterGraph>>& graphs);
std::vector<std::pair<std::string, ClusterGraph>> read_cluster_graphs(const std::string& path);

}  // namespace hcoref
