#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hcoref/backends.hpp"
#include "hcoref/cascade.hpp"
#include "hcoref/config.hpp"
#include "hcoref/definitions.hpp"
#include "hcoref/graph_inference.hpp"
#include "hcoref/http_backends.hpp"
#include "hcoref/pair_scoring.hpp"
#include "hcoref/report.hpp"
#include "hcoref/retrieval.hpp"

namespace hcoref {

struct StageRecord {
    std::map<std::string, std::uint64_t> counters;
    double wall_ms = 0.0;
    bool skipped = false;
};

struct RunManifest {
    nlohmann::json config_snapshot;
    std::vector<std::pair<std::string, StageRecord>> stages;
    std::map<std::string, std::string> output_digests;  // rel path -> fnv1a64 hex
    std::string failed_stage;                           // empty on success

    nlohmann::json to_json() const;
    std::uint64_t counter(const std::string& stage, const std::string& key) const;
};

/// Staged pipeline with persisted intermediates: each stage reads its
/// predecessor's files under the output directory, so interrupted runs resume
/// from the last completed stage (and definition generation resumes from the
/// persistent cache regardless).
class Pipeline {
  public:
    explicit Pipeline(PipelineConfig config);
    ~Pipeline();

    /// Re-run stages even when their output files already exist.
    void set_force(bool force) { force_ = force; }

    StageRecord ingest();
    StageRecord index();
    StageRecord define_singleton();
    StageRecord score();
    StageRecord cascade_stage();
    StageRecord cluster();
    StageRecord evaluate();

    /// ingest -> index -> define-singleton -> score -> cascade -> cluster ->
    /// evaluate; writes manifest.json (also on failure, naming the stage).
    RunManifest run();

    void export_training(Serializer format, const std::string& out_path);
    RenderedReport render_from_evaluation() const;
    std::vector<metrics::TopicScore> hard_subset_scores();

    const PipelineConfig& config() const { return config_; }
    std::string out_path(const std::string& name) const;

    /// Topics from the staged file when present, else from data.topics.
    const std::vector<Topic>& topics();

    // Backend call counters (cumulative over this Pipeline's lifetime).
    std::uint64_t generator_calls() const;
    std::uint64_t scorer_calls() const;
    std::uint64_t embedder_calls() const;

  private:
    Embedder& embedder();
    Reranker& reranker();
    Generator& generator();
    PairScorer& scorer();
    DefinitionCache& cache();
    DefinitionService& definition_service();
    const RetrievalPipeline* retrieval_pipeline();
    const std::vector<FewshotExample>& fewshot_examples();

    std::string serialize_pair(const MentionView& first, const MentionView& second,
                               const std::optional<PairDefinitions>& definitions);
    ScoreRequest make_request(const Topic& topic, const MentionPair& pair,
                              const std::optional<PairDefinitions>& definitions);
    std::map<std::string, std::string> load_singleton_texts() const;  // "topic\x1fmention" -> text
    std::vector<std::pair<std::string, std::vector<ScoredPair>>> load_pairs_by_topic(
        const std::string& path) const;
    std::string final_pairs_path() const;

    PipelineConfig config_;
    bool force_ = false;

    std::optional<std::vector<Topic>> topics_;
    std::unique_ptr<Embedder> raw_embedder_;
    std::unique_ptr<CountingEmbedder> counting_embedder_;
    std::unique_ptr<Reranker> reranker_;
    std::unique_ptr<Generator> raw_generator_;
    std::unique_ptr<CountingGenerator> counting_generator_;
    std::unique_ptr<PairScorer> raw_scorer_;
    std::unique_ptr<CountingScorer> counting_scorer_;
    std::unique_ptr<DefinitionCache> cache_;
    std::unique_ptr<DefinitionService> definition_service_;
    std::unique_ptr<CorpusIndex> index_;
    std::unique_ptr<RetrievalPipeline> retrieval_;
    std::optional<std::vector<FewshotExample>> fewshot_examples_;
};

}  // namespace hcoref
