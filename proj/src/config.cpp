#include "hcoref/config.hpp"

#include <filesystem>

#include "hcoref/errors.hpp"
#include "hcoref/util.hpp"

namespace hcoref {

std::string definition_mode_name(DefinitionMode mode) {
    switch (mode) {
        case DefinitionMode::None: return "none";
        case DefinitionMode::Singleton: return "singleton";
        case DefinitionMode::RelationalCascade: return "relational-cascade";
    }
    return "none";
}

DefinitionMode definition_mode_from_name(const std::string& name) {
    if (name == "none") return DefinitionMode::None;
    if (name == "singleton") return DefinitionMode::Singleton;
    if (name == "relational-cascade") return DefinitionMode::RelationalCascade;
    throw ConfigError("unknown definition mode: " + name);
}

namespace {

BackendChoice backend_from_json(const nlohmann::json& record, BackendChoice defaults) {
    BackendChoice out = std::move(defaults);
    if (record.contains("kind")) out.kind = record.at("kind").get<std::string>();
    if (record.contains("base_url")) out.base_url = record.at("base_url").get<std::string>();
    if (record.contains("model")) out.model = record.at("model").get<std::string>();
    if (record.contains("auth_env")) out.auth_env = record.at("auth_env").get<std::string>();
    if (record.contains("dim")) out.dim = record.at("dim").get<std::size_t>();
    if (record.contains("temperature"))
        out.temperature = record.at("temperature").get<double>();
    return out;
}

nlohmann::json backend_to_json(const BackendChoice& backend) {
    return {{"kind", backend.kind},       {"base_url", backend.base_url},
            {"model", backend.model},     {"auth_env", backend.auth_env},
            {"dim", backend.dim},         {"temperature", backend.temperature}};
}

void require_in_unit_interval(double value, const std::string& name) {
    if (value < 0.0 || value > 1.0)
        throw ConfigError(name + " must be in [0, 1], got " + std::to_string(value));
}

void require_file(const std::string& path, const std::string& name) {
    if (!path.empty() && !std::filesystem::exists(path))
        throw ConfigError(name + " path does not exist: " + path);
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
    nlohmann::json record;
    try {
        record = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
    return from_json(record);
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& record) {
    PipelineConfig config;
    try {
        if (record.contains("label")) config.label = record.at("label").get<std::string>();
        if (record.contains("data")) {
            const auto& data = record.at("data");
            if (data.contains("topics"))
                config.topics_path = data.at("topics").get<std::string>();
            if (data.contains("corpus") && !data.at("corpus").is_null())
                config.corpus_path = data.at("corpus").get<std::string>();
        }
        if (record.contains("backends")) {
            const auto& backends = record.at("backends");
            if (backends.contains("embedder"))
                config.embedder = backend_from_json(backends.at("embedder"), config.embedder);
            if (backends.contains("reranker"))
                config.reranker = backend_from_json(backends.at("reranker"), config.reranker);
            if (backends.contains("generator"))
                config.generator =
                    backend_from_json(backends.at("generator"), config.generator);
            if (backends.contains("scorer"))
                config.scorer = backend_from_json(backends.at("scorer"), config.scorer);
        }
        if (record.contains("retrieval")) {
            const auto& retrieval = record.at("retrieval");
            if (retrieval.contains("k"))
                config.retrieval.k = retrieval.at("k").get<std::size_t>();
            if (retrieval.contains("keep"))
                config.retrieval.keep = retrieval.at("keep").get<std::size_t>();
            if (retrieval.contains("min_score"))
                config.retrieval.min_score = retrieval.at("min_score").get<double>();
            if (retrieval.contains("on_rerank_failure")) {
                auto policy = retrieval.at("on_rerank_failure").get<std::string>();
                if (policy == "fail")
                    config.retrieval.on_rerank_failure = RerankFailurePolicy::Fail;
                else if (policy == "pass-through")
                    config.retrieval.on_rerank_failure = RerankFailurePolicy::PassThrough;
                else
                    throw ConfigError("unknown rerank failure policy: " + policy);
            }
        }
        if (record.contains("definition")) {
            const auto& definition = record.at("definition");
            if (definition.contains("mode"))
                config.definition_mode =
                    definition_mode_from_name(definition.at("mode").get<std::string>());
            if (definition.contains("singleton_template") &&
                !definition.at("singleton_template").is_null())
                config.singleton_template_path =
                    definition.at("singleton_template").get<std::string>();
            if (definition.contains("relational_template") &&
                !definition.at("relational_template").is_null())
                config.relational_template_path =
                    definition.at("relational_template").get<std::string>();
            if (definition.contains("token_cap"))
                config.token_cap = definition.at("token_cap").get<std::size_t>();
            if (definition.contains("retries"))
                config.generation_attempts = definition.at("retries").get<int>();
            if (definition.contains("backoff_ms"))
                config.backoff_ms = definition.at("backoff_ms").get<int>();
            if (definition.contains("context_window") &&
                !definition.at("context_window").is_null())
                config.context_window = definition.at("context_window").get<std::size_t>();
        }
        if (record.contains("serializer"))
            config.serializer =
                serializer_from_name(record.at("serializer").get<std::string>());
        if (record.contains("fewshot")) {
            const auto& fewshot = record.at("fewshot");
            if (fewshot.contains("examples") && !fewshot.at("examples").is_null())
                config.fewshot_examples_path = fewshot.at("examples").get<std::string>();
            if (fewshot.contains("balanced"))
                config.fewshot_balanced = fewshot.at("balanced").get<bool>();
        }
        if (record.contains("cascade")) {
            const auto& cascade = record.at("cascade");
            if (cascade.contains("theta"))
                config.cascade.theta = cascade.at("theta").get<double>();
            if (cascade.contains("top_k"))
                config.cascade.top_k = cascade.at("top_k").get<std::size_t>();
            if (cascade.contains("stage2_enabled"))
                config.cascade.stage2_enabled = cascade.at("stage2_enabled").get<bool>();
            if (cascade.contains("on_failure")) {
                auto policy = cascade.at("on_failure").get<std::string>();
                if (policy == "abort")
                    config.cascade.on_failure = Stage2FailurePolicy::Abort;
                else if (policy == "fall-back")
                    config.cascade.on_failure = Stage2FailurePolicy::FallBackToStage1;
                else
                    throw ConfigError("unknown cascade failure policy: " + policy);
            }
        }
        if (record.contains("clustering") && record.at("clustering").contains("tau_c"))
            config.tau_c = record.at("clustering").at("tau_c").get<double>();
        if (record.contains("hierarchy") && record.at("hierarchy").contains("tau_h"))
            config.tau_h = record.at("hierarchy").at("tau_h").get<double>();
        if (record.contains("evaluation")) {
            const auto& evaluation = record.at("evaluation");
            if (evaluation.contains("hard_fractions"))
                config.hard_fractions =
                    evaluation.at("hard_fractions").get<std::vector<double>>();
            if (evaluation.contains("baseline_tau_c"))
                config.baseline_tau_c = evaluation.at("baseline_tau_c").get<double>();
        }
        if (record.contains("run")) {
            const auto& run = record.at("run");
            if (run.contains("seed")) config.seed = run.at("seed").get<std::uint64_t>();
            if (run.contains("parallelism"))
                config.parallelism = run.at("parallelism").get<std::size_t>();
            if (run.contains("cache_dir"))
                config.cache_dir = run.at("cache_dir").get<std::string>();
            if (run.contains("out_dir")) config.out_dir = run.at("out_dir").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    config.validate();
    return config;
}

nlohmann::json PipelineConfig::to_json() const {
    return {
        {"label", label},
        {"data", {{"topics", topics_path}, {"corpus", corpus_path}}},
        {"backends",
         {{"embedder", backend_to_json(embedder)},
          {"reranker", backend_to_json(reranker)},
          {"generator", backend_to_json(generator)},
          {"scorer", backend_to_json(scorer)}}},
        {"retrieval",
         {{"k", retrieval.k},
          {"keep", retrieval.keep},
          {"min_score", retrieval.min_score},
          {"on_rerank_failure",
           retrieval.on_rerank_failure == RerankFailurePolicy::Fail ? "fail"
                                                                    : "pass-through"}}},
        {"definition",
         {{"mode", definition_mode_name(definition_mode)},
          {"singleton_template", singleton_template_path},
          {"relational_template", relational_template_path},
          {"token_cap", token_cap},
          {"retries", generation_attempts},
          {"backoff_ms", backoff_ms},
          {"context_window",
           context_window ? nlohmann::json(*context_window) : nlohmann::json(nullptr)}}},
        {"serializer", serializer_name(serializer)},
        {"fewshot", {{"examples", fewshot_examples_path}, {"balanced", fewshot_balanced}}},
        {"cascade",
         {{"theta", cascade.theta},
          {"top_k", cascade.top_k},
          {"stage2_enabled", cascade.stage2_enabled},
          {"on_failure",
           cascade.on_failure == Stage2FailurePolicy::Abort ? "abort" : "fall-back"}}},
        {"clustering", {{"tau_c", tau_c}}},
        {"hierarchy", {{"tau_h", tau_h}}},
        {"evaluation",
         {{"hard_fractions", hard_fractions}, {"baseline_tau_c", baseline_tau_c}}},
        {"run",
         {{"seed", seed},
          {"parallelism", parallelism},
          {"cache_dir", cache_dir},
          {"out_dir", out_dir}}},
    };
}

void PipelineConfig::validate() const {
    require_in_unit_interval(cascade.theta, "cascade.theta");
    require_in_unit_interval(tau_c, "clustering.tau_c");
    require_in_unit_interval(tau_h, "hierarchy.tau_h");
    require_in_unit_interval(baseline_tau_c, "evaluation.baseline_tau_c");
    for (double fraction : hard_fractions)
        if (fraction <= 0.0 || fraction > 1.0)
            throw ConfigError("evaluation.hard_fractions entries must be in (0, 1]");
    if (parallelism < 1) throw ConfigError("run.parallelism must be >= 1");
    if (generation_attempts < 1) throw ConfigError("definition.retries must be >= 1");
    if (retrieval.k < 1) throw ConfigError("retrieval.k must be >= 1");

    require_file(topics_path, "data.topics");
    require_file(corpus_path, "data.corpus");
    require_file(singleton_template_path, "definition.singleton_template");
    require_file(relational_template_path, "definition.relational_template");
    require_file(fewshot_examples_path, "fewshot.examples");

    auto known = [](const std::string& kind, std::initializer_list<const char*> allowed) {
        for (const char* candidate : allowed)
            if (kind == candidate) return true;
        return false;
    };
    if (!known(embedder.kind, {"hash", "http"}))
        throw ConfigError("unknown embedder kind: " + embedder.kind);
    if (!known(reranker.kind, {"lexical", "http"}))
        throw ConfigError("unknown reranker kind: " + reranker.kind);
    if (!known(generator.kind, {"echo", "http"}))
        throw ConfigError("unknown generator kind: " + generator.kind);
    if (!known(scorer.kind, {"oracle", "lexical", "icl", "http"}))
        throw ConfigError("unknown scorer kind: " + scorer.kind);
    for (const BackendChoice* backend : {&embedder, &reranker, &generator, &scorer})
        if (backend->kind == "http" && backend->base_url.empty())
            throw ConfigError("http backend requires base_url");
    if (scorer.kind == "icl" && serializer != Serializer::Fewshot)
        throw ConfigError("the icl scorer requires the fewshot serializer");
}

}  // namespace hcoref
