#include "hcoref/backends.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <set>

#include "hcoref/errors.hpp"
#include "hcoref/metrics.hpp"
#include "hcoref/util.hpp"

namespace hcoref {

EmbeddingVector HashEmbedder::embed(const std::string& text) {
    std::mt19937_64 rng(fnv1a64(text));
    std::uniform_real_distribution<float> uniform(-1.0f, 1.0f);
    EmbeddingVector vec;
    vec.values.resize(dim_);
    for (auto& v : vec.values) v = uniform(rng);
    return vec;
}

std::vector<ScoredPassage> LexicalOverlapReranker::rerank(
    const std::string& query, const std::vector<Passage>& passages) {
    auto query_tokens_vec = split_tokens(query);
    std::set<std::string> query_tokens(query_tokens_vec.begin(), query_tokens_vec.end());
    std::vector<ScoredPassage> out;
    out.reserve(passages.size());
    for (const auto& passage : passages) {
        auto passage_tokens_vec = split_tokens(passage.text);
        std::set<std::string> passage_tokens(passage_tokens_vec.begin(),
                                             passage_tokens_vec.end());
        std::size_t shared = 0;
        for (const auto& token : passage_tokens)
            if (query_tokens.count(token)) ++shared;
        std::size_t unioned = query_tokens.size() + passage_tokens.size() - shared;
        double score =
            unioned == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(unioned);
        out.push_back({passage, score});
    }
    return out;
}

std::string EchoGenerator::generate(const std::string& prompt) {
    return truncate_tokens(prompt, prefix_tokens_);
}

namespace {

PairLogits logits_for_peaked(RelationClass peak, double peak_prob) {
    double rest = (1.0 - peak_prob) / 3.0;
    PairLogits logits;
    for (std::size_t i = 0; i < 4; ++i)
        logits[i] = std::log(i == static_cast<std::size_t>(peak) ? peak_prob : rest);
    return logits;
}

}  // namespace

PairLogits OracleScorer::score(const ScoreRequest& request) {
    if (!request.gold)
        throw ValidationError("oracle scorer needs a gold relation for pair (" +
                              request.pair.first + ", " + request.pair.second + ")");
    return logits_for_peaked(*request.gold, 0.97);
}

PairLogits LexicalScorer::score(const ScoreRequest& request) {
    double s = metrics::surface_similarity(request.first_surface, request.second_surface);
    PairDistribution probs = {1.0 - s, s, 0.0, 0.0};
    double sum = 0.0;
    for (double& p : probs) {
        p = std::max(p, epsilon_);
        sum += p;
    }
    PairLogits logits;
    for (std::size_t i = 0; i < 4; ++i) logits[i] = std::log(probs[i] / sum);
    return logits;
}

PairLogits IclScorer::score(const ScoreRequest& request) {
    std::string response = generator_->generate(request.serialized);
    auto label = parse_icl_label(response);
    if (!label) {
        std::cerr << "warning: unparseable scorer response for pair (" << request.pair.first
                  << ", " << request.pair.second << "); defaulting to class 0\n";
        label = RelationClass::None;
    }
    return logits_for_peaked(*label, 0.97);
}

}  // namespace hcoref
