#include "hcoref/cascade.hpp"

#include <algorithm>
#include <unordered_map>

#include "hcoref/errors.hpp"

namespace hcoref {

CandidateSet stage1_filter_rank(const std::vector<ScoredPair>& stage1,
                                const CascadeConfig& config) {
    // Surviving pairs grouped by endpoint mention.
    std::map<std::string, std::vector<const ScoredPair*>> by_mention;
    for (const auto& scored : stage1) {
        if (scored.argmax_class() == RelationClass::None) continue;
        by_mention[scored.pair.first].push_back(&scored);
        by_mention[scored.pair.second].push_back(&scored);
    }

    CandidateSet candidates;
    for (auto& [mention_id, pairs] : by_mention) {
        std::sort(pairs.begin(), pairs.end(), [](const ScoredPair* a, const ScoredPair* b) {
            double ca = a->confidence(), cb = b->confidence();
            if (ca != cb) return ca > cb;
            return a->pair < b->pair;
        });
        std::size_t taken = 0;
        for (const ScoredPair* scored : pairs) {
            if (taken >= config.top_k) break;
            if (scored->confidence() < config.theta) break;  // sorted, rest are lower
            ++taken;
            candidates.selected.insert(scored->pair);
            auto& prov = candidates.provenance[scored->pair];
            prov.stage1_confidence = scored->confidence();
            prov.selected_via.push_back(mention_id);
        }
    }
    return candidates;
}

std::vector<ScoredPair> merge_predictions(const std::vector<ScoredPair>& stage1,
                                          const std::vector<ScoredPair>& stage2) {
    std::map<MentionPair, const ScoredPair*> overrides;
    for (const auto& scored : stage2) overrides[scored.pair] = &scored;

    std::vector<ScoredPair> merged;
    merged.reserve(stage1.size());
    std::size_t used = 0;
    for (const auto& scored : stage1) {
        auto it = overrides.find(scored.pair);
        if (it != overrides.end()) {
            merged.push_back(*it->second);
            ++used;
        } else {
            merged.push_back(scored);
        }
    }
    if (used != overrides.size())
        throw ValidationError("merge_predictions: stage-2 contains a pair absent from stage-1");
    return merged;
}

std::vector<ScoredPair> stage2_rescore(const CandidateSet& candidates, const Topic& topic,
                                       DefinitionService& definitions, PairScorer& scorer,
                                       const PairSerializerFn& serialize,
                                       std::optional<std::size_t> context_window,
                                       Stage2FailurePolicy on_failure,
                                       const std::vector<ScoredPair>& stage1) {
    std::map<MentionPair, const ScoredPair*> stage1_of;
    for (const auto& scored : stage1) stage1_of[scored.pair] = &scored;

    std::vector<ScoredPair> out;
    out.reserve(candidates.selected.size());
    for (const auto& pair : candidates.selected) {
        try {
            const Mention& first = topic.mention(pair.first);
            const Mention& second = topic.mention(pair.second);
            auto [def_first, def_second] = definitions.relational(first, second, topic);

            PairDefinitions pair_defs;
            pair_defs.kind = Stage::Relational;
            pair_defs.first_text = def_first.text;
            pair_defs.second_text = def_second.text;

            MentionView view_first = mention_view(first, topic, context_window);
            MentionView view_second = mention_view(second, topic, context_window);
            ScoreRequest request;
            request.pair = pair;
            request.serialized = serialize(view_first, view_second, pair_defs);
            request.first_surface = first.surface;
            request.second_surface = second.surface;
            if (topic.gold) request.gold = gold_relation(pair, *topic.gold);

            ScoredPair rescored;
            rescored.pair = pair;
            rescored.distribution = softmax(scorer.score(request));
            rescored.stage = Stage::Relational;
            rescored.definitions_used = {
                def_first.anchor_id + "|" + def_first.other_id + ":" +
                    def_first.meta.prompt_hash,
                def_second.anchor_id + "|" + def_second.other_id + ":" +
                    def_second.meta.prompt_hash};
            out.push_back(std::move(rescored));
        } catch (const std::exception& e) {
            if (on_failure == Stage2FailurePolicy::Abort)
                throw BackendError("stage-2 rescoring failed for pair (" + pair.first + ", " +
                                   pair.second + "): " + e.what());
            auto it = stage1_of.find(pair);
            if (it != stage1_of.end()) out.push_back(*it->second);
        }
    }
    return out;
}

nlohmann::json cascade_stats_to_json(const CascadeStats& stats) {
    return {{"theta", stats.theta},
            {"top_k", stats.top_k},
            {"stage1_pairs", stats.stage1_pairs},
            {"candidates", stats.candidates},
            {"stage2_generator_calls", stats.stage2_generator_calls},
            {"stage2_scorer_calls", stats.stage2_scorer_calls}};
}

}  // namespace hcoref
