#pragma once

#include <string>

#include "hcoref/definitions.hpp"
#include "hcoref/pair_scoring.hpp"
#include "hcoref/retrieval.hpp"

namespace hcoref {

/// Shared settings for the JSON-over-HTTP backends. Auth material is read
/// from the environment variable named by `auth_env`, never from config.
struct HttpBackendConfig {
    std::string base_url;    // e.g. "http://localhost:8080"
    std::string model;       // model identifier forwarded to the service
    std::string auth_env;    // env var holding the bearer token; may be empty
    int timeout_seconds = 60;
};

/// POST /embed {"input": [text...], "model": m} -> {"vectors": [[...], ...]}
class HttpEmbedder : public Embedder {
  public:
    HttpEmbedder(HttpBackendConfig config, std::size_t dim);
    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) override;
    std::string name() const override { return "http-embedder:" + config_.model; }

  private:
    HttpBackendConfig config_;
    std::size_t dim_;
};

/// POST /rerank {"query": q, "passages": [text...]} -> {"scores": [...]}
class HttpReranker : public Reranker {
  public:
    explicit HttpReranker(HttpBackendConfig config);
    std::vector<ScoredPassage> rerank(const std::string& query,
                                      const std::vector<Passage>& passages) override;
    std::string name() const override { return "http-reranker:" + config_.model; }

  private:
    HttpBackendConfig config_;
};

/// POST /v1/chat/completions with a chat-completion payload; accepts either
/// an OpenAI-shaped response or a bare {"content": ...} / {"text": ...}.
class HttpGenerator : public Generator {
  public:
    HttpGenerator(HttpBackendConfig config, double temperature = 0.0);
    std::string generate(const std::string& prompt) override;
    std::string name() const override { return "http-generator:" + config_.model; }

  private:
    HttpBackendConfig config_;
    double temperature_;
};

/// POST /score {"input": serialized} -> {"logits": [l0, l1, l2, l3]}
class HttpScorer : public PairScorer {
  public:
    explicit HttpScorer(HttpBackendConfig config);
    PairLogits score(const ScoreRequest& request) override;
    std::string name() const override { return "http-scorer:" + config_.model; }

  private:
    HttpBackendConfig config_;
};

}  // namespace hcoref
