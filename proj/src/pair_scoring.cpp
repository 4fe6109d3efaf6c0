#include "hcoref/pair_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hcoref/errors.hpp"
#include "hcoref/util.hpp"

namespace hcoref {

MentionPair MentionPair::canonical(std::string a, std::string b) {
    if (a == b) throw ValidationError("pair of identical mentions: " + a);
    if (b < a) std::swap(a, b);
    return MentionPair{std::move(a), std::move(b)};
}

PairDistribution softmax(const PairLogits& logits) {
    for (double l : logits)
        if (!std::isfinite(l)) throw ValidationError("non-finite logit");
    double max_logit = *std::max_element(logits.begin(), logits.end());
    PairDistribution out{};
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - max_logit);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

double pairwise_loss(const std::vector<PairDistribution>& predictions,
                     const std::vector<RelationClass>& golds) {
    if (predictions.size() != golds.size())
        throw ValidationError("pairwise_loss: prediction/gold length mismatch");
    if (predictions.empty()) throw ValidationError("pairwise_loss: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double p = predictions[i][static_cast<std::size_t>(golds[i])];
        if (p <= 0.0)
            throw ValidationError("pairwise_loss: gold class probability is zero at index " +
                                  std::to_string(i));
        total += -std::log(p);
    }
    return total / static_cast<double>(predictions.size());
}

std::string stage_name(Stage stage) {
    switch (stage) {
        case Stage::NoneDef: return "none-def";
        case Stage::Singleton: return "singleton";
        case Stage::Relational: return "relational";
    }
    return "none-def";
}

Stage stage_from_name(const std::string& name) {
    if (name == "none-def") return Stage::NoneDef;
    if (name == "singleton") return Stage::Singleton;
    if (name == "relational") return Stage::Relational;
    throw ParseError("unknown stage: " + name);
}

std::string serializer_name(Serializer serializer) {
    switch (serializer) {
        case Serializer::Chatml: return "chatml";
        case Serializer::Marker: return "marker";
        case Serializer::Fewshot: return "fewshot";
    }
    return "chatml";
}

Serializer serializer_from_name(const std::string& name) {
    if (name == "chatml") return Serializer::Chatml;
    if (name == "marker") return Serializer::Marker;
    if (name == "fewshot") return Serializer::Fewshot;
    throw ConfigError("unknown serializer: " + name);
}

RelationClass ScoredPair::argmax_class() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < distribution.size(); ++i)
        if (distribution[i] > distribution[best]) best = i;
    return static_cast<RelationClass>(best);
}

double ScoredPair::confidence() const {
    return distribution[static_cast<std::size_t>(argmax_class())];
}

std::vector<MentionPair> enumerate_pairs(const Topic& topic) {
    std::vector<std::string> ids;
    ids.reserve(topic.mentions.size());
    for (const auto& m : topic.mentions) ids.push_back(m.mention_id);
    std::sort(ids.begin(), ids.end());
    std::vector<MentionPair> pairs;
    pairs.reserve(ids.size() * (ids.size() ? ids.size() - 1 : 0) / 2);
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j)
            pairs.push_back(MentionPair{ids[i], ids[j]});
    return pairs;
}

MentionView mention_view(const Mention& mention, const Topic& topic,
                         std::optional<std::size_t> window) {
    MentionView view;
    view.mention_id = mention.mention_id;
    view.surface = mention.surface;
    view.local_context = extract_local_context(mention, topic, window);
    view.paragraph = topic.document(mention.doc_id).paragraphs[mention.paragraph_index];
    view.start = mention.start;
    view.end = mention.end;
    return view;
}

namespace {

constexpr const char* kChatmlSystem =
    "You classify the relation between two scientific concept mentions. "
    "Answer with exactly one label: 0 (no relation), 1 (coreference: both "
    "mentions refer to the same concept), 2 (the first concept is a parent "
    "of the second), 3 (the second concept is a parent of the first).";

void append_definitions(std::string& out, const PairDefinitions& defs) {
    if (defs.kind == Stage::Relational) {
        out += "Definition of mention 1 in relation to mention 2: " + defs.first_text + "\n";
        out += "Definition of mention 2 in relation to mention 1: " + defs.second_text + "\n";
    } else {
        out += "Definition 1: " + defs.first_text + "\n";
        out += "Definition 2: " + defs.second_text + "\n";
    }
}

std::string pair_block(const MentionView& first, const MentionView& second,
                       const std::optional<PairDefinitions>& definitions) {
    std::string out;
    out += "Mention 1: " + first.surface + "\n";
    out += "Context 1: " + first.local_context + "\n";
    out += "Mention 2: " + second.surface + "\n";
    out += "Context 2: " + second.local_context + "\n";
    if (definitions) append_definitions(out, *definitions);
    return out;
}

void require_definitions(const std::optional<PairDefinitions>& definitions) {
    if (definitions && (definitions->first_text.empty() || definitions->second_text.empty()))
        throw ValidationError("serialization requires one definition per mention");
}

}  // namespace

std::string serialize_chatml(const MentionView& first, const MentionView& second,
                             const std::optional<PairDefinitions>& definitions) {
    require_definitions(definitions);
    std::string out;
    out += "<|im_start|>system\n";
    out += kChatmlSystem;
    out += "<|im_end|>\n";
    out += "<|im_start|>user\n";
    out += pair_block(first, second, definitions);
    out += "<|im_end|>\n";
    return out;
}

namespace {

std::string marker_paragraph(const MentionView& view) {
    if (view.start >= view.end || view.end > view.paragraph.size())
        throw ValidationError("mention " + view.mention_id +
                              ": span not locatable in paragraph");
    std::string out;
    auto push = [&](const std::string& token) {
        if (!out.empty()) out += ' ';
        out += token;
    };
    for (std::size_t i = 0; i < view.paragraph.size(); ++i) {
        if (i == view.start) push("<m>");
        push(view.paragraph[i]);
        if (i + 1 == view.end) push("</m>");
    }
    return out;
}

std::string marker_block(const MentionView& view, const std::string& definition) {
    std::string out = "<s> " + marker_paragraph(view);
    if (!definition.empty()) out += " <def> " + definition + " </def>";
    out += " </s>";
    return out;
}

}  // namespace

std::string serialize_marker_format(const MentionView& first, const MentionView& second,
                                    const std::optional<PairDefinitions>& definitions) {
    require_definitions(definitions);
    std::string first_def = definitions ? definitions->first_text : "";
    std::string second_def = definitions ? definitions->second_text : "";
    return marker_block(first, first_def) + marker_block(second, second_def);
}

std::string build_fewshot_prompt(const std::vector<FewshotExample>& examples,
                                 const MentionView& target_first,
                                 const MentionView& target_second,
                                 const std::optional<PairDefinitions>& target_definitions,
                                 bool with_definitions, bool class_balanced) {
    if (class_balanced) {
        std::array<int, 4> counts{};
        for (const auto& ex : examples) counts[static_cast<std::size_t>(ex.gold)]++;
        for (int count : counts)
            if (count != 1)
                throw ValidationError(
                    "class-balanced few-shot prompt requires exactly one example per class");
    }
    std::string out;
    out += "You classify the relation between two scientific concept mentions.\n";
    out += "Labels: 0 = no relation, 1 = coreference, 2 = first is parent of second, "
           "3 = second is parent of first.\n";
    out += "Answer with a single line \"LABEL: <0|1|2|3>\" followed by your reasoning.\n\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        out += "Example " + std::to_string(i + 1) + ":\n";
        out += pair_block(ex.first, ex.second,
                          with_definitions ? ex.definitions : std::nullopt);
        out += "LABEL: " + std::to_string(static_cast<int>(ex.gold)) + "\n\n";
    }
    out += "Now classify:\n";
    out += pair_block(target_first, target_second,
                      with_definitions ? target_definitions : std::nullopt);
    return out;
}

std::optional<RelationClass> parse_icl_label(const std::string& response) {
    std::istringstream lines(response);
    std::string line;
    while (std::getline(lines, line)) {
        auto pos = line.find("LABEL:");
        if (pos == std::string::npos) continue;
        for (std::size_t i = pos + 6; i < line.size(); ++i) {
            char c = line[i];
            if (c == ' ' || c == '\t') continue;
            if (c >= '0' && c <= '3') return static_cast<RelationClass>(c - '0');
            break;
        }
    }
    return std::nullopt;
}

std::vector<ScoredPair> score_pairs(const std::vector<ScoreRequest>& requests,
                                    PairScorer& scorer, Stage stage,
                                    std::size_t parallelism) {
    std::vector<ScoredPair> out(requests.size());
    parallel_for(requests.size(), parallelism, [&](std::size_t i) {
        PairLogits logits;
        try {
            logits = scorer.score(requests[i]);
        } catch (const std::exception& e) {
            throw BackendError("scoring pair (" + requests[i].pair.first + ", " +
                               requests[i].pair.second + ") failed: " + e.what());
        }
        out[i].pair = requests[i].pair;
        out[i].distribution = softmax(logits);
        out[i].stage = stage;
    });
    return out;
}

RelationClass gold_relation(const MentionPair& pair, const GoldAnnotation& gold) {
    auto first_it = gold.cluster_of.find(pair.first);
    auto second_it = gold.cluster_of.find(pair.second);
    if (first_it == gold.cluster_of.end() || second_it == gold.cluster_of.end())
        throw LookupError("pair mention missing from gold clusters");
    const auto& c1 = first_it->second;
    const auto& c2 = second_it->second;
    if (c1 == c2) return RelationClass::Coref;
    if (gold.hierarchy_edges.count({c1, c2})) return RelationClass::FirstParent;
    if (gold.hierarchy_edges.count({c2, c1})) return RelationClass::SecondParent;
    return RelationClass::None;
}

nlohmann::json scored_pair_to_json(const ScoredPair& scored) {
    return {{"first", scored.pair.first},
            {"second", scored.pair.second},
            {"p", scored.distribution},
            {"stage", stage_name(scored.stage)}};
}

ScoredPair scored_pair_from_json(const nlohmann::json& record) {
    ScoredPair scored;
    scored.pair.first = record.at("first").get<std::string>();
    scored.pair.second = record.at("second").get<std::string>();
    auto probs = record.at("p").get<std::vector<double>>();
    if (probs.size() != 4) throw ParseError("scored pair needs 4 probabilities");
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (probs[i] < 0.0 || probs[i] > 1.0)
            throw ValidationError("scored pair probability out of [0,1]");
        scored.distribution[i] = probs[i];
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("scored pair probabilities do not sum to 1");
    for (double& p : scored.distribution) p /= sum;
    scored.stage = stage_from_name(record.at("stage").get<std::string>());
    return scored;
}

void write_scored_pairs(const std::string& path, const std::vector<ScoredPair>& pairs) {
    std::string out;
    for (const auto& scored : pairs) {
        out += scored_pair_to_json(scored).dump();
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<ScoredPair> read_scored_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scored pairs file: " + path);
    std::vector<ScoredPair> pairs;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            pairs.push_back(scored_pair_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + " line " + std::to_string(line_number) + ": " + e.what());
        }
    }
    return pairs;
}

}  // namespace hcoref
