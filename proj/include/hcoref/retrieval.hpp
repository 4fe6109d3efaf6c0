#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace hcoref {

struct Passage {
    std::string passage_id;
    std::string source_id;
    std::string text;
};

std::vector<Passage> read_passages(const std::string& path);
void write_passages(const std::string& path, const std::vector<Passage>& passages);

struct EmbeddingVector {
    std::vector<float> values;
    std::size_t dim() const { return values.size(); }
};

class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    /// Must be deterministic within a run: same text, same vector.
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual std::string name() const = 0;
};

struct ScoredPassage {
    Passage passage;
    double score = 0.0;
};

class Reranker {
  public:
    virtual ~Reranker() = default;
    /// Scores and reorders candidates; the output is a subset of the input.
    virtual std::vector<ScoredPassage> rerank(const std::string& query,
                                              const std::vector<Passage>& passages) = 0;
    virtual std::string name() const = 0;
};

/// Ordered retrieved-context set for one mention; scores non-increasing.
struct ContextSet {
    std::string mention_id;
    std::vector<ScoredPassage> entries;

    std::vector<std::string> passage_ids() const;
};

/// Exact dot-product index: one stored vector per passage, brute-force scan
/// at query time. Immutable after build; safe for concurrent queries.
class CorpusIndex {
  public:
    static CorpusIndex build(const std::vector<Passage>& corpus, Embedder& embedder,
                             std::size_t parallelism = 1);

    /// Rebuilds an index from persisted passages and vectors.
    static CorpusIndex from_parts(std::vector<Passage> passages,
                                  std::vector<std::vector<float>> vectors);

    std::size_t size() const { return passages_.size(); }
    std::size_t dim() const { return dim_; }

    /// The min(k, size) passages with the largest dot products against
    /// `query`, score-descending, ties by ascending passage_id.
    std::vector<ScoredPassage> retrieve(const EmbeddingVector& query, std::size_t k) const;

    const std::vector<Passage>& passages() const { return passages_; }
    const std::vector<float>& vector_of(std::size_t i) const { return vectors_[i]; }

  private:
    std::vector<Passage> passages_;
    std::vector<std::vector<float>> vectors_;
    std::size_t dim_ = 0;
};

enum class RerankFailurePolicy { Fail, PassThrough };

struct RetrievalConfig {
    std::size_t k = 20;          // first-stage retrieval depth
    std::size_t keep = 5;        // post-rerank keep count
    double min_score = 0.0;      // rerank score cutoff
    RerankFailurePolicy on_rerank_failure = RerankFailurePolicy::Fail;
};

/// Reranks and filters `candidates` for `query`: drop below min_score, keep
/// at most `keep`, order by reranker score descending with passage_id ties.
ContextSet rerank_filter(const std::string& mention_id, const std::string& query,
                         const std::vector<ScoredPassage>& candidates, Reranker& reranker,
                         std::size_t keep, double min_score,
                         RerankFailurePolicy on_failure = RerankFailurePolicy::Fail);

/// Full per-mention retrieval: embed query, exact top-k, rerank-and-filter.
class RetrievalPipeline {
  public:
    RetrievalPipeline(const CorpusIndex* index, Embedder* embedder, Reranker* reranker,
                      RetrievalConfig config)
        : index_(index), embedder_(embedder), reranker_(reranker), config_(config) {}

    ContextSet contexts_for(const std::string& mention_id, const std::string& query) const;

    const RetrievalConfig& config() const { return config_; }

  private:
    const CorpusIndex* index_;
    Embedder* embedder_;
    Reranker* reranker_;
    RetrievalConfig config_;
};

}  // namespace hcoref
