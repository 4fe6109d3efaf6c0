#include <doctest.h>

#include <algorithm>
#include <random>

#include "hcoref/backends.hpp"
#include "hcoref/errors.hpp"
#include "hcoref/retrieval.hpp"
#include "test_support.hpp"

using namespace hcoref;
using namespace hcoref::testing;

namespace {

/// Embedder with a fixed vector per text, for hand-built scenarios.
class TableEmbedder : public Embedder {
  public:
    TableEmbedder(std::size_t dim, std::map<std::string, std::vector<float>> table)
        : dim_(dim), table_(std::move(table)) {}
    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) override {
        return EmbeddingVector{table_.at(text)};
    }
    std::string name() const override { return "table"; }

  private:
    std::size_t dim_;
    std::map<std::string, std::vector<float>> table_;
};

class FailingReranker : public Reranker {
  public:
    std::vector<ScoredPassage> rerank(const std::string&,
                                      const std::vector<Passage>&) override {
        throw BackendError("reranker offline");
    }
    std::string name() const override { return "failing"; }
};

/// Scores a passage by its input rank reversed (first gets the most).
class IdentityReranker : public Reranker {
  public:
    std::vector<ScoredPassage> rerank(const std::string&,
                                      const std::vector<Passage>& passages) override {
        std::vector<ScoredPassage> out;
        for (std::size_t i = 0; i < passages.size(); ++i)
            out.push_back({passages[i], static_cast<double>(passages.size() - i)});
        return out;
    }
    std::string name() const override { return "identity"; }
};

std::vector<Passage> three_passages() {
    return {{"p1", "s", "first text"}, {"p2", "s", "second text"}, {"p3", "s", "third text"}};
}

}  // namespace

TEST_CASE("index_corpus stores one vector per passage") {
    HashEmbedder embedder(8);
    auto index = CorpusIndex::build(three_passages(), embedder);
    CHECK(index.size() == 3);
    CHECK(index.dim() == 8);
}

TEST_CASE("index_corpus rejects duplicates and empty corpora") {
    HashEmbedder embedder(8);
    auto corpus = three_passages();
    corpus.push_back({"p1", "s", "dup"});
    CHECK_THROWS_AS(CorpusIndex::build(corpus, embedder), ValidationError);
    CHECK_THROWS_AS(CorpusIndex::build({}, embedder), ValidationError);
}

TEST_CASE("retrieve ranks by dot product with passage_id tie-break") {
    TableEmbedder embedder(2, {{"first text", {1.0f, 0.0f}},
                               {"second text", {0.0f, 1.0f}},
                               {"third text", {0.5f, 0.5f}},
                               {"query", {1.0f, 0.0f}}});
    auto index = CorpusIndex::build(three_passages(), embedder);

    auto top2 = index.retrieve(embedder.embed("query"), 2);
    REQUIRE(top2.size() == 2);
    CHECK(top2[0].passage.passage_id == "p1");
    CHECK(top2[0].score == doctest::Approx(1.0));
    CHECK(top2[1].passage.passage_id == "p3");
    CHECK(top2[1].score == doctest::Approx(0.5));

    auto all = index.retrieve(embedder.embed("query"), 10);
    CHECK(all.size() == 3);

    TableEmbedder tie_embedder(2, {{"first text", {1.0f, 0.0f}},
                                   {"second text", {1.0f, 0.0f}},
                                   {"third text", {0.0f, 1.0f}},
                                   {"query", {1.0f, 0.0f}}});
    auto tie_index = CorpusIndex::build(three_passages(), tie_embedder);
    auto tied = tie_index.retrieve(tie_embedder.embed("query"), 2);
    CHECK(tied[0].passage.passage_id == "p1");
    CHECK(tied[1].passage.passage_id == "p2");
}

TEST_CASE("retrieve equals an independent brute-force scan on random corpora") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> coord(-1.0f, 1.0f);
    for (int round = 0; round < 20; ++round) {
        std::uniform_int_distribution<std::size_t> size_dist(1, 200);
        std::size_t n = size_dist(rng);
        const std::size_t dim = 16;

        std::vector<Passage> corpus;
        std::map<std::string, std::vector<float>> table;
        for (std::size_t i = 0; i < n; ++i) {
            std::string id = "p" + std::to_string(1000 + i);
            std::vector<float> vec(dim);
            for (auto& v : vec) v = coord(rng);
            corpus.push_back({id, "s", "text " + id});
            table["text " + id] = vec;
        }
        std::vector<float> query(dim);
        for (auto& v : query) v = coord(rng);
        table["query"] = query;

        TableEmbedder embedder(dim, table);
        auto index = CorpusIndex::build(corpus, embedder);
        std::uniform_int_distribution<std::size_t> k_dist(1, n + 3);
        std::size_t k = k_dist(rng);
        auto got = index.retrieve(EmbeddingVector{query}, k);

        // Oracle: recompute every dot product and stable-sort.
        std::vector<std::pair<double, std::string>> expected;
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0;
            for (std::size_t d = 0; d < dim; ++d)
                dot += double(query[d]) * double(table["text " + corpus[i].passage_id][d]);
            expected.push_back({dot, corpus[i].passage_id});
        }
        std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        REQUIRE(got.size() == std::min(k, n));
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].passage.passage_id == expected[i].second);
            CHECK(got[i].score == doctest::Approx(expected[i].first).epsilon(1e-12));
        }
    }
}

TEST_CASE("rerank_filter keep and min_score") {
    IdentityReranker reranker;
    auto passages = three_passages();
    std::vector<ScoredPassage> candidates;
    for (const auto& p : passages) candidates.push_back({p, 0.0});

    auto empty = rerank_filter("m", "query", candidates, reranker, 0, 0.0);
    CHECK(empty.entries.empty());

    auto top2 = rerank_filter("m", "query", candidates, reranker, 2, 0.0);
    REQUIRE(top2.entries.size() == 2);
    CHECK(top2.entries[0].passage.passage_id == "p1");
    CHECK(top2.entries[1].passage.passage_id == "p2");
    CHECK(top2.entries[0].score >= top2.entries[1].score);

    auto filtered = rerank_filter("m", "query", candidates, reranker, 5, 100.0);
    CHECK(filtered.entries.empty());
}

TEST_CASE("rerank failure policy: fail or pass through") {
    FailingReranker reranker;
    std::vector<ScoredPassage> candidates = {{{"p1", "s", "text"}, 0.7}};
    CHECK_THROWS_AS(
        rerank_filter("m", "q", candidates, reranker, 3, 0.0, RerankFailurePolicy::Fail),
        BackendError);
    auto through =
        rerank_filter("m", "q", candidates, reranker, 3, 0.0, RerankFailurePolicy::PassThrough);
    REQUIRE(through.entries.size() == 1);
    CHECK(through.entries[0].passage.passage_id == "p1");
    CHECK(through.entries[0].score == doctest::Approx(0.7));
}

TEST_CASE("lexical overlap reranker prefers shared tokens") {
    LexicalOverlapReranker reranker;
    std::vector<Passage> passages = {{"p1", "s", "graph embedding methods"},
                                     {"p2", "s", "unrelated words entirely"}};
    auto scored = reranker.rerank("graph embedding", passages);
    REQUIRE(scored.size() == 2);
    CHECK(scored[0].score > scored[1].score);
    CHECK(scored[1].score == 0.0);
}

TEST_CASE("pipeline ContextSet is deterministic under corpus insertion order") {
    auto corpus = three_passages();
    HashEmbedder embedder(12);
    LexicalOverlapReranker reranker;
    RetrievalConfig config;
    config.k = 3;
    config.keep = 2;

    auto index_fwd = CorpusIndex::build(corpus, embedder);
    std::reverse(corpus.begin(), corpus.end());
    auto index_rev = CorpusIndex::build(corpus, embedder);

    RetrievalPipeline fwd(&index_fwd, &embedder, &reranker, config);
    RetrievalPipeline rev(&index_rev, &embedder, &reranker, config);
    auto a = fwd.contexts_for("m", "second text query");
    auto b = rev.contexts_for("m", "second text query");
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].passage.passage_id == b.entries[i].passage.passage_id);
        CHECK(a.entries[i].score == b.entries[i].score);
    }
    CHECK(std::is_sorted(a.entries.begin(), a.entries.end(),
                         [](const auto& x, const auto& y) { return x.score > y.score; }));
}
