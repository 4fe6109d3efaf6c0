#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hcoref/cluster_graph.hpp"
#include "hcoref/corpus.hpp"

namespace hcoref::testing {

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path() / "hcoref-tests";
        std::filesystem::create_directories(base);
        static std::atomic<unsigned> counter{0};
        path_ = base / (tag + "-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

inline std::string mention_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "m%02zu", i);
    return buf;
}

/// Random partition of mentions m00..m{n-1} into at most max_clusters parts.
inline Partition random_partition(std::mt19937_64& rng, std::size_t n,
                                  std::size_t max_clusters) {
    std::uniform_int_distribution<std::size_t> pick(0, max_clusters - 1);
    std::map<std::size_t, std::vector<std::string>> buckets;
    for (std::size_t i = 0; i < n; ++i) buckets[pick(rng)].push_back(mention_name(i));
    Partition partition;
    for (auto& [key, members] : buckets) partition.push_back(std::move(members));
    return partition;
}

/// Random topic: every mention sits in its own one-paragraph context, cluster
/// membership shows in the surface tokens, hierarchy edges form a random DAG.
inline Topic random_topic(std::mt19937_64& rng, const std::string& topic_id,
                          std::size_t max_mentions = 12, std::size_t max_clusters = 4,
                          double edge_probability = 0.4) {
    std::uniform_int_distribution<std::size_t> mention_count_dist(1, max_mentions);
    std::size_t n_mentions = mention_count_dist(rng);
    std::uniform_int_distribution<std::size_t> cluster_count_dist(
        1, std::min(max_clusters, n_mentions));
    std::size_t n_clusters = cluster_count_dist(rng);

    Topic topic;
    topic.topic_id = topic_id;
    Document doc;
    doc.doc_id = topic_id + "-doc";

    GoldAnnotation gold;
    std::uniform_int_distribution<std::size_t> cluster_pick(0, n_clusters - 1);
    std::vector<std::size_t> cluster_of(n_mentions);
    // Keep every cluster non-empty: first n_clusters mentions seed them.
    for (std::size_t i = 0; i < n_mentions; ++i)
        cluster_of[i] = i < n_clusters ? i : cluster_pick(rng);

    for (std::size_t i = 0; i < n_mentions; ++i) {
        std::string concept_token = "concept" + std::to_string(cluster_of[i]);
        std::string variant_token = "variant" + std::to_string(i);
        std::vector<std::string> paragraph = {"the",         "study",  "of",
                                              concept_token, variant_token, "continues"};
        doc.paragraphs.push_back(paragraph);

        Mention mention;
        mention.mention_id = mention_name(i);
        mention.doc_id = doc.doc_id;
        mention.paragraph_index = i;
        mention.start = 3;
        mention.end = 5;
        mention.surface = concept_token + " " + variant_token;
        topic.mentions.push_back(mention);
        gold.cluster_of[mention.mention_id] = "c" + std::to_string(cluster_of[i]);
    }
    topic.documents.push_back(std::move(doc));

    std::bernoulli_distribution edge_coin(edge_probability);
    for (std::size_t parent = 0; parent < n_clusters; ++parent)
        for (std::size_t child = parent + 1; child < n_clusters; ++child)
            if (edge_coin(rng))
                gold.hierarchy_edges.emplace("c" + std::to_string(parent),
                                             "c" + std::to_string(child));
    topic.gold = std::move(gold);
    return topic;
}

}  // namespace hcoref::testing
