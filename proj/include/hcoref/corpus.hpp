#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace hcoref {

/// A document is an ordered list of pre-tokenized paragraphs.
struct Document {
    std::string doc_id;
    std::vector<std::vector<std::string>> paragraphs;
};

/// An annotated concept span. `surface` is derived from the token span.
struct Mention {
    std::string mention_id;
    std::string doc_id;
    std::size_t paragraph_index = 0;
    std::size_t start = 0;  // half-open [start, end) token indices
    std::size_t end = 0;
    std::string surface;
};

/// Gold coreference clusters plus directed parent -> child hierarchy edges.
struct GoldAnnotation {
    std::map<std::string, std::string> cluster_of;  // mention_id -> cluster_id
    std::set<std::pair<std::string, std::string>> hierarchy_edges;
};

struct Topic {
    std::string topic_id;
    std::vector<Document> documents;
    std::vector<Mention> mentions;
    std::optional<GoldAnnotation> gold;

    const Document& document(const std::string& doc_id) const;
    const Mention& mention(const std::string& mention_id) const;
};

/// One human-readable invariant violation; validation reports these as data.
struct Violation {
    std::string entity;
    std::string message;
};

std::vector<Topic> ingest_topics(const std::string& path);
Topic topic_from_json(const nlohmann::json& record, std::size_t line_number);
nlohmann::json topic_to_json(const Topic& topic);
void write_topics(const std::string& path, const std::vector<Topic>& topics);

std::vector<Violation> validate_topic(const Topic& topic);

/// The passage surrounding a mention: the span padded by `window` tokens on
/// each side, clamped to the paragraph. `window` of nullopt means the whole
/// containing paragraph.
std::string extract_local_context(const Mention& mention, const Topic& topic,
                                  std::optional<std::size_t> window);

}  // namespace hcoref
