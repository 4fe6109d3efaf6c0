#include "hcoref/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "hcoref/errors.hpp"
#include "hcoref/util.hpp"

namespace hcoref {

std::vector<Passage> read_passages(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus file: " + path);
    std::vector<Passage> passages;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            auto record = nlohmann::json::parse(line);
            passages.push_back({record.at("passage_id").get<std::string>(),
                                record.at("source_id").get<std::string>(),
                                record.at("text").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + " line " + std::to_string(line_number) + ": " + e.what());
        }
        if (passages.back().text.empty())
            throw ValidationError("passage " + passages.back().passage_id + " has empty text");
    }
    return passages;
}

void write_passages(const std::string& path, const std::vector<Passage>& passages) {
    std::string out;
    for (const auto& p : passages) {
        out += nlohmann::json{{"passage_id", p.passage_id},
                              {"source_id", p.source_id},
                              {"text", p.text}}
                   .dump();
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<std::string> ContextSet::passage_ids() const {
    std::vector<std::string> ids;
    ids.reserve(entries.size());
    for (const auto& entry : entries) ids.push_back(entry.passage.passage_id);
    return ids;
}

CorpusIndex CorpusIndex::build(const std::vector<Passage>& corpus, Embedder& embedder,
                               std::size_t parallelism) {
    if (corpus.empty()) throw ValidationError("cannot index an empty corpus");
    std::unordered_set<std::string> ids;
    for (const auto& p : corpus)
        if (!ids.insert(p.passage_id).second)
            throw ValidationError("duplicate passage_id: " + p.passage_id);

    CorpusIndex index;
    index.passages_ = corpus;
    index.dim_ = embedder.dim();
    index.vectors_.resize(corpus.size());
    parallel_for(corpus.size(), parallelism, [&](std::size_t i) {
        EmbeddingVector vec;
        try {
            vec = embedder.embed(corpus[i].text);
        } catch (const std::exception& e) {
            throw BackendError("embedding passage " + corpus[i].passage_id +
                               " failed: " + e.what());
        }
        if (vec.dim() != index.dim_)
            throw BackendError("embedding passage " + corpus[i].passage_id +
                               ": dimension mismatch");
        for (float v : vec.values)
            if (!std::isfinite(v))
                throw BackendError("embedding passage " + corpus[i].passage_id +
                                   ": non-finite value");
        index.vectors_[i] = std::move(vec.values);
    });
    return index;
}

CorpusIndex CorpusIndex::from_parts(std::vector<Passage> passages,
                                    std::vector<std::vector<float>> vectors) {
    if (passages.size() != vectors.size())
        throw ValidationError("index parts disagree: " + std::to_string(passages.size()) +
                              " passages, " + std::to_string(vectors.size()) + " vectors");
    if (passages.empty()) throw ValidationError("cannot rebuild an empty index");
    CorpusIndex index;
    index.dim_ = vectors.front().size();
    for (const auto& vec : vectors)
        if (vec.size() != index.dim_)
            throw ValidationError("index vectors have inconsistent dimensions");
    index.passages_ = std::move(passages);
    index.vectors_ = std::move(vectors);
    return index;
}

std::vector<ScoredPassage> CorpusIndex::retrieve(const EmbeddingVector& query,
                                                 std::size_t k) const {
    if (k == 0) throw ValidationError("retrieve requires k >= 1");
    if (query.dim() != dim_) throw ValidationError("query dimension mismatch");

    std::vector<std::pair<double, std::size_t>> scored(passages_.size());
    for (std::size_t i = 0; i < passages_.size(); ++i) {
        double dot = 0.0;
        const auto& stored = vectors_[i];
        for (std::size_t d = 0; d < dim_; ++d)
            dot += static_cast<double>(query.values[d]) * static_cast<double>(stored[d]);
        scored[i] = {dot, i};
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return passages_[a.second].passage_id < passages_[b.second].passage_id;
    });

    std::size_t take = std::min(k, scored.size());
    std::vector<ScoredPassage> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        out.push_back({passages_[scored[i].second], scored[i].first});
    return out;
}

ContextSet rerank_filter(const std::string& mention_id, const std::string& query,
                         const std::vector<ScoredPassage>& candidates, Reranker& reranker,
                         std::size_t keep, double min_score,
                         RerankFailurePolicy on_failure) {
    ContextSet contexts;
    contexts.mention_id = mention_id;
    if (keep == 0) return contexts;

    std::vector<Passage> passages;
    passages.reserve(candidates.size());
    for (const auto& c : candidates) passages.push_back(c.passage);

    std::vector<ScoredPassage> scored;
    try {
        scored = reranker.rerank(query, passages);
    } catch (const std::exception& e) {
        if (on_failure == RerankFailurePolicy::Fail)
            throw BackendError(std::string("reranker failed: ") + e.what());
        scored = candidates;  // pass through the pre-rerank order and scores
    }

    std::vector<ScoredPassage> kept;
    for (auto& entry : scored)
        if (entry.score >= min_score) kept.push_back(std::move(entry));
    std::sort(kept.begin(), kept.end(), [](const ScoredPassage& a, const ScoredPassage& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage.passage_id < b.passage.passage_id;
    });
    if (kept.size() > keep) kept.resize(keep);
    contexts.entries = std::move(kept);
    return contexts;
}

ContextSet RetrievalPipeline::contexts_for(const std::string& mention_id,
                                           const std::string& query) const {
    auto query_vec = embedder_->embed(query);
    auto candidates = index_->retrieve(query_vec, config_.k);
    return rerank_filter(mention_id, query, candidates, *reranker_, config_.keep,
                         config_.min_score, config_.on_rerank_failure);
}

}  // namespace hcoref
