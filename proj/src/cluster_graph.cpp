#include "hcoref/cluster_graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include "hcoref/errors.hpp"
#include "hcoref/util.hpp"

namespace hcoref {

bool graph_is_acyclic(const ClusterGraph& graph) {
    std::size_t n = graph.clusters.size();
    std::vector<std::vector<std::size_t>> adj(n);
    std::vector<int> indegree(n, 0);
    for (const auto& edge : graph.edges) {
        adj[edge.parent].push_back(edge.child);
        indegree[edge.child]++;
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push_back(i);
    std::size_t visited = 0;
    while (!ready.empty()) {
        auto node = ready.back();
        ready.pop_back();
        ++visited;
        for (auto next : adj[node])
            if (--indegree[next] == 0) ready.push_back(next);
    }
    return visited == n;
}

void validate_cluster_graph(const ClusterGraph& graph,
                            const std::vector<std::string>& mention_ids) {
    std::unordered_set<std::string> seen;
    for (const auto& cluster : graph.clusters) {
        if (cluster.empty()) throw ValidationError("cluster graph has an empty cluster");
        for (const auto& id : cluster)
            if (!seen.insert(id).second)
                throw ValidationError("mention " + id + " appears in two clusters");
    }
    for (const auto& id : mention_ids)
        if (!seen.count(id))
            throw ValidationError("mention " + id + " missing from cluster graph");
    if (seen.size() != mention_ids.size())
        throw ValidationError("cluster graph covers mentions outside the topic");
    for (const auto& edge : graph.edges) {
        if (edge.parent >= graph.clusters.size() || edge.child >= graph.clusters.size())
            throw ValidationError("cluster graph edge index out of range");
        if (edge.parent == edge.child)
            throw ValidationError("cluster graph has a self-loop edge");
    }
    if (!graph_is_acyclic(graph))
        throw ValidationError("cluster graph edges contain a cycle");
}

Partition partition_from_gold(const GoldAnnotation& gold) {
    std::map<std::string, std::vector<std::string>> by_cluster;
    for (const auto& [mention_id, cluster_id] : gold.cluster_of)
        by_cluster[cluster_id].push_back(mention_id);
    Partition partition;
    for (auto& [cluster_id, members] : by_cluster) {
        std::sort(members.begin(), members.end());
        partition.push_back(std::move(members));
    }
    return partition;
}

ClusterGraph gold_cluster_graph(const Topic& topic) {
    if (!topic.gold)
        throw ValidationError("topic " + topic.topic_id + " has no gold annotation");
    const auto& gold = *topic.gold;
    ClusterGraph graph;
    std::map<std::string, std::size_t> index_of;
    std::map<std::string, std::vector<std::string>> by_cluster;
    for (const auto& [mention_id, cluster_id] : gold.cluster_of)
        by_cluster[cluster_id].push_back(mention_id);
    for (auto& [cluster_id, members] : by_cluster) {
        std::sort(members.begin(), members.end());
        index_of[cluster_id] = graph.clusters.size();
        graph.clusters.push_back(std::move(members));
    }
    for (const auto& [parent, child] : gold.hierarchy_edges)
        graph.edges.push_back({index_of.at(parent), index_of.at(child), 1.0});
    return graph;
}

nlohmann::json cluster_graph_to_json(const std::string& topic_id, const ClusterGraph& graph) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& edge : graph.edges)
        edges.push_back({edge.parent, edge.child, edge.confidence});
    return {{"topic_id", topic_id}, {"clusters", graph.clusters}, {"edges", edges}};
}

std::pair<std::string, ClusterGraph> cluster_graph_from_json(const nlohmann::json& record) {
    ClusterGraph graph;
    graph.clusters = record.at("clusters").get<Partition>();
    for (const auto& edge : record.at("edges")) {
        graph.edges.push_back({edge.at(0).get<std::size_t>(), edge.at(1).get<std::size_t>(),
                               edge.at(2).get<double>()});
    }
    return {record.at("topic_id").get<std::string>(), std::move(graph)};
}

void write_cluster_graphs(const std::string& path,
                          const std::vector<std::pair<std::string, ClusterGraph>>& graphs) {
    std::string out;
    for (const auto& [topic_id, graph] : graphs) {
        out += cluster_graph_to_json(topic_id, graph).dump();
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<std::pair<std::string, ClusterGraph>> read_cluster_graphs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open cluster graph file: " + path);
    std::vector<std::pair<std::string, ClusterGraph>> graphs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        graphs.push_back(cluster_graph_from_json(nlohmann::json::parse(line)));
    }
    return graphs;
}

}  // namespace hcoref
