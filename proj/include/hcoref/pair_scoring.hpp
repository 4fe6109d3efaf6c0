#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hcoref/corpus.hpp"

namespace hcoref {

/// Four-way relation between a canonical mention pair. Integer codes are part
/// of the wire format and must not change.
enum class RelationClass : int {
    None = 0,
    Coref = 1,
    FirstParent = 2,   // first -> second
    SecondParent = 3,  // second -> first
};

constexpr std::array<RelationClass, 4> kAllClasses = {
    RelationClass::None, RelationClass::Coref, RelationClass::FirstParent,
    RelationClass::SecondParent};

/// Canonically ordered pair: first < second by mention id.
struct MentionPair {
    std::string first;
    std::string second;

    static MentionPair canonical(std::string a, std::string b);
    bool operator==(const MentionPair&) const = default;
    bool operator<(const MentionPair& other) const {
        return first != other.first ? first < other.first : second < other.second;
    }
};

using PairLogits = std::array<double, 4>;
using PairDistribution = std::array<double, 4>;

PairDistribution softmax(const PairLogits& logits);

/// Mean negative log-probability of the gold class (diagnostic only).
double pairwise_loss(const std::vector<PairDistribution>& predictions,
                     const std::vector<RelationClass>& golds);

enum class Stage { NoneDef, Singleton, Relational };

std::string stage_name(Stage stage);
Stage stage_from_name(const std::string& name);

enum class Serializer { Chatml, Marker, Fewshot };

std::string serializer_name(Serializer serializer);
Serializer serializer_from_name(const std::string& name);

struct ScoredPair {
    MentionPair pair;
    PairDistribution distribution{};
    Stage stage = Stage::NoneDef;
    std::vector<std::string> definitions_used;

    RelationClass argmax_class() const;
    double confidence() const;  // probability of the argmax class
};

/// All unordered within-topic pairs, canonical, sorted lexicographically.
std::vector<MentionPair> enumerate_pairs(const Topic& topic);

// ---------------------------------------------------------------------------
// Scorer input serialization

/// Definitions attached to a pair before serialization. For Singleton, the
/// texts define each mention in isolation; for Relational, `first_text`
/// defines the first mention anchored on the second and vice versa.
struct PairDefinitions {
    Stage kind = Stage::Singleton;
    std::string first_text;
    std::string second_text;
};

/// Everything a serializer needs about one side of a pair.
struct MentionView {
    std::string mention_id;
    std::string surface;
    std::string local_context;
    std::vector<std::string> paragraph;  // tokens of the containing paragraph
    std::size_t start = 0;
    std::size_t end = 0;
};

MentionView mention_view(const Mention& mention, const Topic& topic,
                         std::optional<std::size_t> window);

std::string serialize_chatml(const MentionView& first, const MentionView& second,
                             const std::optional<PairDefinitions>& definitions);

std::string serialize_marker_format(const MentionView& first, const MentionView& second,
                                    const std::optional<PairDefinitions>& definitions);

struct FewshotExample {
    MentionView first;
    MentionView second;
    std::optional<PairDefinitions> definitions;
    RelationClass gold = RelationClass::None;
};

std::string build_fewshot_prompt(const std::vector<FewshotExample>& examples,
                                 const MentionView& target_first,
                                 const MentionView& target_second,
                                 const std::optional<PairDefinitions>& target_definitions,
                                 bool with_definitions, bool class_balanced);

/// Parses the structured ICL answer line "LABEL: <0|1|2|3>". Returns nullopt
/// for unparseable responses (callers map those to None with a warning).
std::optional<RelationClass> parse_icl_label(const std::string& response);

// ---------------------------------------------------------------------------
// Scoring

/// One scoring request. Remote backends consume only `serialized`; the
/// offline oracle and lexical scorers read the side-channel fields.
struct ScoreRequest {
    MentionPair pair;
    std::string serialized;
    std::string first_surface;
    std::string second_surface;
    std::optional<RelationClass> gold;
};

class PairScorer {
  public:
    virtual ~PairScorer() = default;
    virtual PairLogits score(const ScoreRequest& request) = 0;
    virtual std::string name() const = 0;
};

std::vector<ScoredPair> score_pairs(const std::vector<ScoreRequest>& requests,
                                    PairScorer& scorer, Stage stage,
                                    std::size_t parallelism = 1);

/// Gold class of a canonical pair under a topic's gold annotation.
RelationClass gold_relation(const MentionPair& pair, const GoldAnnotation& gold);

// ---------------------------------------------------------------------------
// Persistence

nlohmann::json scored_pair_to_json(const ScoredPair& scored);
ScoredPair scored_pair_from_json(const nlohmann::json& record);
void write_scored_pairs(const std::string& path, const std::vector<ScoredPair>& pairs);
std::vector<ScoredPair> read_scored_pairs(const std::string& path);

}  // namespace hcoref
