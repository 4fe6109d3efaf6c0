#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcoref/cascade.hpp"
#include "hcoref/retrieval.hpp"

namespace hcoref {

enum class DefinitionMode { None, Singleton, RelationalCascade };

std::string definition_mode_name(DefinitionMode mode);
DefinitionMode definition_mode_from_name(const std::string& name);

struct BackendChoice {
    std::string kind;      // embedder: hash|http; reranker: lexical|http;
                           // generator: echo|http; scorer: oracle|lexical|icl|http
    std::string base_url;
    std::string model;
    std::string auth_env;  // env var name holding the bearer token
    std::size_t dim = 16;  // embedder only
    double temperature = 0.0;  // generator only
};

struct PipelineConfig {
    std::string label = "run";

    // Data paths.
    std::string topics_path;
    std::string corpus_path;

    BackendChoice embedder{.kind = "hash"};
    BackendChoice reranker{.kind = "lexical"};
    BackendChoice generator{.kind = "echo"};
    BackendChoice scorer{.kind = "lexical"};

    RetrievalConfig retrieval;

    DefinitionMode definition_mode = DefinitionMode::None;
    std::string singleton_template_path;  // empty: built-in default
    std::string relational_template_path;
    std::size_t token_cap = 160;
    int generation_attempts = 3;
    int backoff_ms = 50;
    std::optional<std::size_t> context_window;  // nullopt: whole paragraph

    Serializer serializer = Serializer::Chatml;
    std::string fewshot_examples_path;
    bool fewshot_balanced = true;

    CascadeConfig cascade;

    double tau_c = 0.5;
    double tau_h = 0.5;

    std::vector<double> hard_fractions = {0.1, 0.2};
    double baseline_tau_c = 0.5;

    std::uint64_t seed = 0;
    std::size_t parallelism = 1;
    std::string cache_dir;
    std::string out_dir = "out";

    static PipelineConfig load(const std::string& path);
    static PipelineConfig from_json(const nlohmann::json& record);
    nlohmann::json to_json() const;

    /// Threshold ranges, parallelism >= 1, and existence of referenced paths.
    void validate() const;
};

}  // namespace hcoref
