#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hcoref/definitions.hpp"
#include "hcoref/pair_scoring.hpp"

namespace hcoref {

enum class Stage2FailurePolicy { Abort, FallBackToStage1 };

struct CascadeConfig {
    double theta = 0.5;       // stage-1 confidence threshold
    std::size_t top_k = 10;   // max selected pairs per mention
    bool stage2_enabled = true;
    Stage2FailurePolicy on_failure = Stage2FailurePolicy::Abort;
};

/// Stage-1 survivors routed to relational rescoring, with provenance.
struct CandidateSet {
    struct Provenance {
        double stage1_confidence = 0.0;
        std::vector<std::string> selected_via;  // mention(s) whose ranking kept it
    };
    std::set<MentionPair> selected;
    std::map<MentionPair, Provenance> provenance;
};

/// Drops pairs whose argmax is None, then per mention keeps its surviving
/// pairs with confidence >= theta ranked by confidence (ties by canonical
/// pair order), at most top_k; the candidate set is the union over mentions.
CandidateSet stage1_filter_rank(const std::vector<ScoredPair>& stage1,
                                const CascadeConfig& config);

/// Every pair exactly once: stage-2 distributions replace stage-1 where
/// present, all other pairs keep their stage-1 result.
std::vector<ScoredPair> merge_predictions(const std::vector<ScoredPair>& stage1,
                                          const std::vector<ScoredPair>& stage2);

/// Renders a scorer input for a pair; the pipeline binds this to the
/// configured serializer (and few-shot examples, when applicable).
using PairSerializerFn = std::function<std::string(
    const MentionView&, const MentionView&, const std::optional<PairDefinitions>&)>;

/// Generates both directed relational definitions for each candidate and
/// rescores it with relational augmentation. On per-pair failure either
/// aborts or keeps the pair's stage-1 result, per `on_failure`.
std::vector<ScoredPair> stage2_rescore(const CandidateSet& candidates, const Topic& topic,
                                       DefinitionService& definitions, PairScorer& scorer,
                                       const PairSerializerFn& serialize,
                                       std::optional<std::size_t> context_window,
                                       Stage2FailurePolicy on_failure,
                                       const std::vector<ScoredPair>& stage1);

/// Per-run cascade accounting, serialized into the cascade manifest.
struct CascadeStats {
    double theta = 0.0;
    std::size_t top_k = 0;
    std::size_t stage1_pairs = 0;
    std::size_t candidates = 0;
    std::uint64_t stage2_generator_calls = 0;
    std::uint64_t stage2_scorer_calls = 0;
};

nlohmann::json cascade_stats_to_json(const CascadeStats& stats);

}  // namespace hcoref
