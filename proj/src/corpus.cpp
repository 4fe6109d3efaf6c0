#include "hcoref/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hcoref/errors.hpp"
#include "hcoref/util.hpp"

namespace hcoref {

namespace {

std::string span_text(const std::vector<std::string>& paragraph,
                      std::size_t start, std::size_t end) {
    std::string out;
    for (std::size_t i = start; i < end && i < paragraph.size(); ++i) {
        if (i > start) out += ' ';
        out += paragraph[i];
    }
    return out;
}

// Kahn's algorithm; returns false when the edge set contains a cycle.
bool edges_acyclic(const std::set<std::pair<std::string, std::string>>& edges) {
    std::unordered_map<std::string, std::vector<std::string>> adj;
    std::unordered_map<std::string, int> indegree;
    for (const auto& [parent, child] : edges) {
        adj[parent].push_back(child);
        indegree[child]++;
        indegree.try_emplace(parent, 0);
    }
    std::queue<std::string> ready;
    for (const auto& [node, deg] : indegree)
        if (deg == 0) ready.push(node);
    std::size_t visited = 0;
    while (!ready.empty()) {
        auto node = ready.front();
        ready.pop();
        ++visited;
        for (const auto& next : adj[node])
            if (--indegree[next] == 0) ready.push(next);
    }
    return visited == indegree.size();
}

}  // namespace

const Document& Topic::document(const std::string& doc_id) const {
    for (const auto& doc : documents)
        if (doc.doc_id == doc_id) return doc;
    throw LookupError("topic " + topic_id + ": unknown doc_id " + doc_id);
}

const Mention& Topic::mention(const std::string& mention_id) const {
    for (const auto& m : mentions)
        if (m.mention_id == mention_id) return m;
    throw LookupError("topic " + topic_id + ": unknown mention_id " + mention_id);
}

Topic topic_from_json(const nlohmann::json& record, std::size_t line_number) {
    auto fail = [&](const std::string& what) -> ParseError {
        return ParseError("line " + std::to_string(line_number) + ": " + what);
    };
    if (!record.is_object()) throw fail("topic record is not an object");
    Topic topic;
    try {
        topic.topic_id = record.at("topic_id").get<std::string>();
        for (const auto& doc_json : record.at("documents")) {
            Document doc;
            doc.doc_id = doc_json.at("doc_id").get<std::string>();
            doc.paragraphs =
                doc_json.at("paragraphs").get<std::vector<std::vector<std::string>>>();
            topic.documents.push_back(std::move(doc));
        }
        for (const auto& m_json : record.at("mentions")) {
            Mention m;
            m.mention_id = m_json.at("mention_id").get<std::string>();
            m.doc_id = m_json.at("doc_id").get<std::string>();
            m.paragraph_index = m_json.at("paragraph").get<std::size_t>();
            m.start = m_json.at("start").get<std::size_t>();
            m.end = m_json.at("end").get<std::size_t>();
            topic.mentions.push_back(std::move(m));
        }
        if (record.contains("gold") && !record.at("gold").is_null()) {
            GoldAnnotation gold;
            const auto& gold_json = record.at("gold");
            gold.cluster_of =
                gold_json.at("clusters").get<std::map<std::string, std::string>>();
            for (const auto& edge : gold_json.at("edges")) {
                gold.hierarchy_edges.emplace(edge.at(0).get<std::string>(),
                                             edge.at(1).get<std::string>());
            }
            topic.gold = std::move(gold);
        }
    } catch (const nlohmann::json::exception& e) {
        throw fail(std::string("malformed topic record: ") + e.what());
    }

    // Derive surfaces; span arithmetic failures surface as validation errors.
    for (auto& m : topic.mentions) {
        for (const auto& doc : topic.documents) {
            if (doc.doc_id != m.doc_id) continue;
            if (m.paragraph_index < doc.paragraphs.size()) {
                const auto& para = doc.paragraphs[m.paragraph_index];
                if (m.start < m.end && m.end <= para.size())
                    m.surface = span_text(para, m.start, m.end);
            }
        }
    }

    auto violations = validate_topic(topic);
    if (!violations.empty()) {
        throw ValidationError("line " + std::to_string(line_number) + ", topic " +
                              topic.topic_id + ": " + violations.front().entity + ": " +
                              violations.front().message);
    }
    return topic;
}

std::vector<Topic> ingest_topics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open topics file: " + path);
    std::vector<Topic> topics;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(line_number) + ": invalid JSON: " +
                             e.what());
        }
        topics.push_back(topic_from_json(record, line_number));
    }
    return topics;
}

nlohmann::json topic_to_json(const Topic& topic) {
    nlohmann::json record;
    record["topic_id"] = topic.topic_id;
    record["documents"] = nlohmann::json::array();
    for (const auto& doc : topic.documents)
        record["documents"].push_back({{"doc_id", doc.doc_id}, {"paragraphs", doc.paragraphs}});
    record["mentions"] = nlohmann::json::array();
    for (const auto& m : topic.mentions) {
        record["mentions"].push_back({{"mention_id", m.mention_id},
                                      {"doc_id", m.doc_id},
                                      {"paragraph", m.paragraph_index},
                                      {"start", m.start},
                                      {"end", m.end}});
    }
    if (topic.gold) {
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& [parent, child] : topic.gold->hierarchy_edges)
            edges.push_back({parent, child});
        record["gold"] = {{"clusters", topic.gold->cluster_of}, {"edges", edges}};
    } else {
        record["gold"] = nullptr;
    }
    return record;
}

void write_topics(const std::string& path, const std::vector<Topic>& topics) {
    std::string out;
    for (const auto& topic : topics) {
        out += topic_to_json(topic).dump();
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<Violation> validate_topic(const Topic& topic) {
    std::vector<Violation> violations;
    auto violate = [&](const std::string& entity, const std::string& message) {
        violations.push_back({entity, message});
    };

    std::unordered_set<std::string> doc_ids;
    for (const auto& doc : topic.documents) {
        if (!doc_ids.insert(doc.doc_id).second)
            violate(doc.doc_id, "duplicate doc_id");
        for (std::size_t p = 0; p < doc.paragraphs.size(); ++p)
            if (doc.paragraphs[p].empty())
                violate(doc.doc_id, "empty paragraph " + std::to_string(p));
    }

    std::unordered_set<std::string> mention_ids;
    for (const auto& m : topic.mentions) {
        if (!mention_ids.insert(m.mention_id).second)
            violate(m.mention_id, "duplicate mention_id");
        if (!doc_ids.count(m.doc_id)) {
            violate(m.mention_id, "doc_id " + m.doc_id + " not in topic");
            continue;
        }
        const auto& doc = topic.document(m.doc_id);
        if (m.paragraph_index >= doc.paragraphs.size()) {
            violate(m.mention_id, "paragraph index out of range");
            continue;
        }
        const auto& para = doc.paragraphs[m.paragraph_index];
        if (m.start >= m.end || m.end > para.size()) {
            violate(m.mention_id, "token span [" + std::to_string(m.start) + ", " +
                                      std::to_string(m.end) + ") out of range");
            continue;
        }
        if (m.surface != span_text(para, m.start, m.end))
            violate(m.mention_id, "surface does not match its token span");
    }

    if (topic.gold) {
        const auto& gold = *topic.gold;
        for (const auto& m : topic.mentions)
            if (!gold.cluster_of.count(m.mention_id))
                violate(m.mention_id, "mention missing from gold clusters");
        std::unordered_set<std::string> cluster_ids;
        for (const auto& [mention_id, cluster_id] : gold.cluster_of) {
            cluster_ids.insert(cluster_id);
            if (!mention_ids.count(mention_id))
                violate(mention_id, "gold cluster entry for unknown mention");
        }
        for (const auto& [parent, child] : gold.hierarchy_edges) {
            if (!cluster_ids.count(parent) || !cluster_ids.count(child))
                violate(parent + "->" + child, "edge endpoint is not a cluster id");
            if (parent == child)
                violate(parent, "self-loop hierarchy edge");
        }
        if (!edges_acyclic(gold.hierarchy_edges))
            violate(topic.topic_id, "gold hierarchy edges contain a cycle");
    }
    return violations;
}

std::string extract_local_context(const Mention& mention, const Topic& topic,
                                  std::optional<std::size_t> window) {
    const Document* doc = nullptr;
    for (const auto& d : topic.documents)
        if (d.doc_id == mention.doc_id) doc = &d;
    if (!doc || mention.paragraph_index >= doc->paragraphs.size())
        throw LookupError("mention " + mention.mention_id + " does not resolve in topic " +
                          topic.topic_id);
    const auto& para = doc->paragraphs[mention.paragraph_index];
    if (mention.start >= mention.end || mention.end > para.size())
        throw LookupError("mention " + mention.mention_id + " span out of range");
    if (!window) return span_text(para, 0, para.size());
    std::size_t w = *window;
    std::size_t begin = mention.start > w ? mention.start - w : 0;
    std::size_t finish = std::min(para.size(), mention.end + w);
    return span_text(para, begin, finish);
}

}  // namespace hcoref
