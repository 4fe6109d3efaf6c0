#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "hcoref/definitions.hpp"
#include "hcoref/pair_scoring.hpp"
#include "hcoref/retrieval.hpp"

namespace hcoref {

// Deterministic offline backends. These are first-class, config-selectable
// implementations: they make the whole pipeline runnable with no network.

/// Text-hash embedder: values in [-1, 1] seeded from the text, so identical
/// texts always embed identically.
class HashEmbedder : public Embedder {
  public:
    explicit HashEmbedder(std::size_t dim = 16) : dim_(dim) {}
    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) override;
    std::string name() const override { return "hash-embedder"; }

  private:
    std::size_t dim_;
};

/// Token-Jaccard reranker: score = |query tokens ∩ passage tokens| /
/// |query tokens ∪ passage tokens|.
class LexicalOverlapReranker : public Reranker {
  public:
    std::vector<ScoredPassage> rerank(const std::string& query,
                                      const std::vector<Passage>& passages) override;
    std::string name() const override { return "lexical-overlap-reranker"; }
};

/// Echoes the first `prefix_tokens` tokens of the prompt back as the
/// "generated" text.
class EchoGenerator : public Generator {
  public:
    explicit EchoGenerator(std::size_t prefix_tokens = 30) : prefix_tokens_(prefix_tokens) {}
    std::string generate(const std::string& prompt) override;
    std::string name() const override { return "echo-generator"; }

  private:
    std::size_t prefix_tokens_;
};

/// Reads the gold relation from the score request and emits probability 0.97
/// on the gold class, 0.01 elsewhere (as logits).
class OracleScorer : public PairScorer {
  public:
    PairLogits score(const ScoreRequest& request) override;
    std::string name() const override { return "oracle-scorer"; }
};

/// Surface-similarity baseline: s = 1 - normalized Levenshtein distance;
/// distribution (None: 1-s, Coref: s, parents: 0) with an epsilon floor.
class LexicalScorer : public PairScorer {
  public:
    explicit LexicalScorer(double epsilon = 1e-6) : epsilon_(epsilon) {}
    PairLogits score(const ScoreRequest& request) override;
    std::string name() const override { return "lexical-scorer"; }

  private:
    double epsilon_;
};

/// In-context-learning scorer: sends the serialized few-shot prompt to a chat
/// generator and parses the structured "LABEL: <k>" answer. Unparseable
/// responses map to None with a warning on stderr.
class IclScorer : public PairScorer {
  public:
    explicit IclScorer(Generator* generator) : generator_(generator) {}
    PairLogits score(const ScoreRequest& request) override;
    std::string name() const override { return "icl-scorer"; }

  private:
    Generator* generator_;
};

// Call-counting decorators; the run manifest reports these counts.

class CountingGenerator : public Generator {
  public:
    explicit CountingGenerator(Generator* inner) : inner_(inner) {}
    std::string generate(const std::string& prompt) override {
        calls_.fetch_add(1);
        return inner_->generate(prompt);
    }
    std::string name() const override { return inner_->name(); }
    std::uint64_t calls() const { return calls_.load(); }

  private:
    Generator* inner_;
    std::atomic<std::uint64_t> calls_{0};
};

class CountingScorer : public PairScorer {
  public:
    explicit CountingScorer(PairScorer* inner) : inner_(inner) {}
    PairLogits score(const ScoreRequest& request) override {
        calls_.fetch_add(1);
        return inner_->score(request);
    }
    std::string name() const override { return inner_->name(); }
    std::uint64_t calls() const { return calls_.load(); }

  private:
    PairScorer* inner_;
    std::atomic<std::uint64_t> calls_{0};
};

class CountingEmbedder : public Embedder {
  public:
    explicit CountingEmbedder(Embedder* inner) : inner_(inner) {}
    std::size_t dim() const override { return inner_->dim(); }
    EmbeddingVector embed(const std::string& text) override {
        calls_.fetch_add(1);
        return inner_->embed(text);
    }
    std::string name() const override { return inner_->name(); }
    std::uint64_t calls() const { return calls_.load(); }

  private:
    Embedder* inner_;
    std::atomic<std::uint64_t> calls_{0};
};

}  // namespace hcoref
