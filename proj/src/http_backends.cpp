#include "hcoref/http_backends.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "hcoref/errors.hpp"

namespace hcoref {

namespace {

// Splits "http://host:port/prefix" into client target and path prefix.
struct Endpoint {
    std::string host_port;
    std::string path_prefix;
};

Endpoint parse_base_url(const std::string& base_url) {
    std::string rest = base_url;
    auto scheme_pos = rest.find("://");
    if (scheme_pos != std::string::npos) {
        std::string scheme = rest.substr(0, scheme_pos);
        if (scheme != "http")
            throw ConfigError("unsupported URL scheme '" + scheme + "' (use http)");
        rest = rest.substr(scheme_pos + 3);
    }
    auto slash = rest.find('/');
    Endpoint out;
    if (slash == std::string::npos) {
        out.host_port = rest;
    } else {
        out.host_port = rest.substr(0, slash);
        out.path_prefix = rest.substr(slash);
        if (!out.path_prefix.empty() && out.path_prefix.back() == '/')
            out.path_prefix.pop_back();
    }
    if (out.host_port.empty()) throw ConfigError("empty host in base URL: " + base_url);
    return out;
}

nlohmann::json post_json(const HttpBackendConfig& config, const std::string& path,
                         const nlohmann::json& body) {
    auto endpoint = parse_base_url(config.base_url);
    httplib::Client client(("http://" + endpoint.host_port).c_str());
    client.set_read_timeout(config.timeout_seconds, 0);
    client.set_connection_timeout(config.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config.auth_env.empty()) {
        const char* token = std::getenv(config.auth_env.c_str());
        if (!token)
            throw ConfigError("auth env var " + config.auth_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    auto response =
        client.Post(endpoint.path_prefix + path, headers, body.dump(), "application/json");
    if (!response)
        throw BackendError("no response from " + config.base_url + path + ": " +
                           httplib::to_string(response.error()));
    if (response->status != 200)
        throw BackendError(config.base_url + path + " returned status " +
                           std::to_string(response->status) + ": " + response->body);
    try {
        return nlohmann::json::parse(response->body);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(config.base_url + path + " returned invalid JSON: " + e.what());
    }
}

}  // namespace

HttpEmbedder::HttpEmbedder(HttpBackendConfig config, std::size_t dim)
    : config_(std::move(config)), dim_(dim) {}

EmbeddingVector HttpEmbedder::embed(const std::string& text) {
    auto response = post_json(
        config_, "/embed",
        {{"input", std::vector<std::string>{text}}, {"model", config_.model}});
    auto vectors = response.at("vectors").get<std::vector<std::vector<float>>>();
    if (vectors.size() != 1)
        throw BackendError("embedding backend returned " + std::to_string(vectors.size()) +
                           " vectors for one input");
    EmbeddingVector vec{std::move(vectors.front())};
    if (vec.dim() != dim_)
        throw BackendError("embedding backend returned dim " + std::to_string(vec.dim()) +
                           ", expected " + std::to_string(dim_));
    return vec;
}

HttpReranker::HttpReranker(HttpBackendConfig config) : config_(std::move(config)) {}

std::vector<ScoredPassage> HttpReranker::rerank(const std::string& query,
                                                const std::vector<Passage>& passages) {
    std::vector<std::string> texts;
    texts.reserve(passages.size());
    for (const auto& p : passages) texts.push_back(p.text);
    auto response = post_json(config_, "/rerank", {{"query", query}, {"passages", texts}});
    auto scores = response.at("scores").get<std::vector<double>>();
    if (scores.size() != passages.size())
        throw BackendError("rerank backend returned " + std::to_string(scores.size()) +
                           " scores for " + std::to_string(passages.size()) + " passages");
    std::vector<ScoredPassage> out;
    out.reserve(passages.size());
    for (std::size_t i = 0; i < passages.size(); ++i)
        out.push_back({passages[i], scores[i]});
    return out;
}

HttpGenerator::HttpGenerator(HttpBackendConfig config, double temperature)
    : config_(std::move(config)), temperature_(temperature) {}

std::string HttpGenerator::generate(const std::string& prompt) {
    nlohmann::json body = {
        {"model", config_.model},
        {"messages", {{{"role", "user"}, {"content", prompt}}}},
        {"temperature", temperature_},
    };
    auto response = post_json(config_, "/v1/chat/completions", body);
    if (response.contains("choices") && !response["choices"].empty()) {
        const auto& choice = response["choices"].front();
        if (choice.contains("message"))
            return choice["message"].at("content").get<std::string>();
        if (choice.contains("text")) return choice["text"].get<std::string>();
    }
    if (response.contains("content")) return response["content"].get<std::string>();
    if (response.contains("text")) return response["text"].get<std::string>();
    throw BackendError("generation backend response has no text field");
}

HttpScorer::HttpScorer(HttpBackendConfig config) : config_(std::move(config)) {}

PairLogits HttpScorer::score(const ScoreRequest& request) {
    auto response = post_json(config_, "/score", {{"input", request.serialized}});
    auto logits = response.at("logits").get<std::vector<double>>();
    if (logits.size() != 4)
        throw BackendError("scorer backend returned " + std::to_string(logits.size()) +
                           " logits, expected 4");
    return {logits[0], logits[1], logits[2], logits[3]};
}

}  // namespace hcoref
