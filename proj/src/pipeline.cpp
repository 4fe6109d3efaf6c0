#include "hcoref/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "hcoref/errors.hpp"
#include "hcoref/metrics.hpp"
#include "hcoref/util.hpp"

namespace hcoref {

namespace fs = std::filesystem;

namespace {

constexpr const char* kTopicsFile = "topics.jsonl";
constexpr const char* kIndexFile = "index.jsonl";
constexpr const char* kSingletonDefsFile = "singleton_defs.jsonl";
constexpr const char* kScoredPairsFile = "scored_pairs.jsonl";
constexpr const char* kFinalPairsFile = "pairs_final.jsonl";
constexpr const char* kCascadeManifestFile = "cascade_manifest.json";
constexpr const char* kGraphsFile = "cluster_graphs.jsonl";
constexpr const char* kEvaluationFile = "evaluation.json";
constexpr const char* kReportTxtFile = "report.txt";
constexpr const char* kReportCsvFile = "report.csv";
constexpr const char* kManifestFile = "manifest.json";

class StageTimer {
  public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        auto now = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(now - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

std::string defs_key(const std::string& topic_id, const std::string& mention_id) {
    return topic_id + "\x1f" + mention_id;
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
    nlohmann::json stages_json = nlohmann::json::array();
    for (const auto& [name, record] : stages) {
        stages_json.push_back({{"stage", name},
                               {"wall_ms", record.wall_ms},
                               {"skipped", record.skipped},
                               {"counters", record.counters}});
    }
    return {{"config", config_snapshot},
            {"stages", stages_json},
            {"outputs", output_digests},
            {"failed_stage", failed_stage}};
}

std::uint64_t RunManifest::counter(const std::string& stage, const std::string& key) const {
    for (const auto& [name, record] : stages) {
        if (name != stage) continue;
        auto it = record.counters.find(key);
        return it == record.counters.end() ? 0 : it->second;
    }
    return 0;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
    fs::create_directories(config_.out_dir);
}

Pipeline::~Pipeline() = default;

std::string Pipeline::out_path(const std::string& name) const {
    return (fs::path(config_.out_dir) / name).string();
}

const std::vector<Topic>& Pipeline::topics() {
    if (!topics_) {
        std::string staged = out_path(kTopicsFile);
        if (fs::exists(staged))
            topics_ = ingest_topics(staged);
        else if (!config_.topics_path.empty())
            topics_ = ingest_topics(config_.topics_path);
        else
            throw ConfigError("no topics available: set data.topics or run ingest");
    }
    return *topics_;
}

Embedder& Pipeline::embedder() {
    if (!counting_embedder_) {
        if (config_.embedder.kind == "hash") {
            raw_embedder_ = std::make_unique<HashEmbedder>(config_.embedder.dim);
        } else {
            raw_embedder_ = std::make_unique<HttpEmbedder>(
                HttpBackendConfig{config_.embedder.base_url, config_.embedder.model,
                                  config_.embedder.auth_env},
                config_.embedder.dim);
        }
        counting_embedder_ = std::make_unique<CountingEmbedder>(raw_embedder_.get());
    }
    return *counting_embedder_;
}

Reranker& Pipeline::reranker() {
    if (!reranker_) {
        if (config_.reranker.kind == "lexical")
            reranker_ = std::make_unique<LexicalOverlapReranker>();
        else
            reranker_ = std::make_unique<HttpReranker>(HttpBackendConfig{
                config_.reranker.base_url, config_.reranker.model, config_.reranker.auth_env});
    }
    return *reranker_;
}

Generator& Pipeline::generator() {
    if (!counting_generator_) {
        if (config_.generator.kind == "echo")
            raw_generator_ = std::make_unique<EchoGenerator>();
        else
            raw_generator_ = std::make_unique<HttpGenerator>(
                HttpBackendConfig{config_.generator.base_url, config_.generator.model,
                                  config_.generator.auth_env},
                config_.generator.temperature);
        counting_generator_ = std::make_unique<CountingGenerator>(raw_generator_.get());
    }
    return *counting_generator_;
}

PairScorer& Pipeline::scorer() {
    if (!counting_scorer_) {
        if (config_.scorer.kind == "oracle")
            raw_scorer_ = std::make_unique<OracleScorer>();
        else if (config_.scorer.kind == "lexical")
            raw_scorer_ = std::make_unique<LexicalScorer>();
        else if (config_.scorer.kind == "icl")
            raw_scorer_ = std::make_unique<IclScorer>(&generator());
        else
            raw_scorer_ = std::make_unique<HttpScorer>(HttpBackendConfig{
                config_.scorer.base_url, config_.scorer.model, config_.scorer.auth_env});
        counting_scorer_ = std::make_unique<CountingScorer>(raw_scorer_.get());
    }
    return *counting_scorer_;
}

DefinitionCache& Pipeline::cache() {
    if (!cache_) cache_ = std::make_unique<DefinitionCache>(config_.cache_dir);
    return *cache_;
}

const RetrievalPipeline* Pipeline::retrieval_pipeline() {
    if (config_.corpus_path.empty() && !fs::exists(out_path(kIndexFile))) return nullptr;
    if (!retrieval_) {
        if (!index_) {
            std::string staged = out_path(kIndexFile);
            if (!fs::exists(staged)) index();
            std::vector<Passage> passages;
            std::vector<std::vector<float>> vectors;
            std::ifstream in(staged);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                auto record = nlohmann::json::parse(line);
                passages.push_back({record.at("passage_id").get<std::string>(),
                                    record.at("source_id").get<std::string>(),
                                    record.at("text").get<std::string>()});
                vectors.push_back(record.at("vector").get<std::vector<float>>());
            }
            index_ = std::make_unique<CorpusIndex>(
                CorpusIndex::from_parts(std::move(passages), std::move(vectors)));
        }
        retrieval_ = std::make_unique<RetrievalPipeline>(index_.get(), &embedder(),
                                                         &reranker(), config_.retrieval);
    }
    return retrieval_.get();
}

DefinitionService& Pipeline::definition_service() {
    if (!definition_service_) {
        auto singleton_tpl =
            config_.singleton_template_path.empty()
                ? default_singleton_template()
                : PromptTemplate::from_file(config_.singleton_template_path,
                                            kSingletonPlaceholders);
        auto relational_tpl =
            config_.relational_template_path.empty()
                ? default_relational_template()
                : PromptTemplate::from_file(config_.relational_template_path,
                                            kRelationalPlaceholders);
        GenerationPolicy policy;
        policy.attempts = config_.generation_attempts;
        policy.backoff = std::chrono::milliseconds(config_.backoff_ms);
        policy.token_cap = config_.token_cap;
        definition_service_ = std::make_unique<DefinitionService>(
            retrieval_pipeline(), &generator(), &cache(), std::move(singleton_tpl),
            std::move(relational_tpl), policy, config_.context_window);
    }
    return *definition_service_;
}

const std::vector<FewshotExample>& Pipeline::fewshot_examples() {
    if (!fewshot_examples_) {
        if (config_.fewshot_examples_path.empty())
            throw ConfigError("fewshot serializer requires fewshot.examples");
        auto pool_topics = ingest_topics(config_.fewshot_examples_path);
        struct Candidate {
            const Topic* topic;
            MentionPair pair;
            RelationClass gold;
        };
        std::vector<Candidate> pool;
        for (const auto& topic : pool_topics) {
            if (!topic.gold)
                throw ValidationError("fewshot pool topic " + topic.topic_id +
                                      " has no gold annotation");
            for (const auto& pair : enumerate_pairs(topic))
                pool.push_back({&topic, pair, gold_relation(pair, *topic.gold)});
        }
        std::mt19937_64 rng(config_.seed);
        std::vector<Candidate> chosen;
        if (config_.fewshot_balanced) {
            for (RelationClass cls : kAllClasses) {
                std::vector<const Candidate*> of_class;
                for (const auto& candidate : pool)
                    if (candidate.gold == cls) of_class.push_back(&candidate);
                if (of_class.empty())
                    throw ValidationError("fewshot pool has no pair of class " +
                                          std::to_string(static_cast<int>(cls)));
                std::uniform_int_distribution<std::size_t> pick(0, of_class.size() - 1);
                chosen.push_back(*of_class[pick(rng)]);
            }
        } else {
            std::vector<std::size_t> order(pool.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t i = 0; i < std::min<std::size_t>(4, order.size()); ++i)
                chosen.push_back(pool[order[i]]);
        }

        bool with_defs = config_.definition_mode != DefinitionMode::None;
        std::vector<FewshotExample> examples;
        for (const auto& candidate : chosen) {
            FewshotExample example;
            const Topic& topic = *candidate.topic;
            example.first = mention_view(topic.mention(candidate.pair.first), topic,
                                         config_.context_window);
            example.second = mention_view(topic.mention(candidate.pair.second), topic,
                                          config_.context_window);
            example.gold = candidate.gold;
            if (with_defs) {
                PairDefinitions defs;
                defs.kind = Stage::Singleton;
                defs.first_text =
                    definition_service().singleton(topic.mention(candidate.pair.first), topic).text;
                defs.second_text =
                    definition_service().singleton(topic.mention(candidate.pair.second), topic).text;
                example.definitions = std::move(defs);
            }
            examples.push_back(std::move(example));
        }
        fewshot_examples_ = std::move(examples);
    }
    return *fewshot_examples_;
}

std::string Pipeline::serialize_pair(const MentionView& first, const MentionView& second,
                                     const std::optional<PairDefinitions>& definitions) {
    switch (config_.serializer) {
        case Serializer::Chatml:
            return serialize_chatml(first, second, definitions);
        case Serializer::Marker:
            return serialize_marker_format(first, second, definitions);
        case Serializer::Fewshot:
            return build_fewshot_prompt(fewshot_examples(), first, second, definitions,
                                        config_.definition_mode != DefinitionMode::None,
                                        config_.fewshot_balanced);
    }
    throw ConfigError("unknown serializer");
}

ScoreRequest Pipeline::make_request(const Topic& topic, const MentionPair& pair,
                                    const std::optional<PairDefinitions>& definitions) {
    const Mention& first = topic.mention(pair.first);
    const Mention& second = topic.mention(pair.second);
    ScoreRequest request;
    request.pair = pair;
    request.first_surface = first.surface;
    request.second_surface = second.surface;
    request.serialized =
        serialize_pair(mention_view(first, topic, config_.context_window),
                       mention_view(second, topic, config_.context_window), definitions);
    if (topic.gold) request.gold = gold_relation(pair, *topic.gold);
    return request;
}

StageRecord Pipeline::ingest() {
    StageRecord record;
    StageTimer timer;
    std::string staged = out_path(kTopicsFile);
    if (fs::exists(staged) && !force_) {
        record.skipped = true;
        return record;
    }
    if (config_.topics_path.empty()) throw ConfigError("data.topics is not set");
    auto ingested = ingest_topics(config_.topics_path);
    write_topics(staged, ingested);
    topics_ = std::move(ingested);
    record.counters["topics"] = topics_->size();
    std::uint64_t mention_count = 0;
    for (const auto& topic : *topics_) mention_count += topic.mentions.size();
    record.counters["mentions"] = mention_count;
    record.wall_ms = timer.elapsed_ms();
    return record;
}

StageRecord Pipeline::index() {
    StageRecord record;
    StageTimer timer;
    if (config_.corpus_path.empty()) {
        record.skipped = true;
        return record;
    }
    std::string staged = out_path(kIndexFile);
    if (fs::exists(staged) && !force_) {
        record.skipped = true;
        return record;
    }
    std::uint64_t calls_before = embedder_calls();
    auto corpus = read_passages(config_.corpus_path);
    auto built = CorpusIndex::build(corpus, embedder(), config_.parallelism);
    std::string out;
    for (std::size_t i = 0; i < built.size(); ++i) {
        const auto& passage = built.passages()[i];
        out += nlohmann::json{{"passage_id", passage.passage_id},
                              {"source_id", passage.source_id},
                              {"text", passage.text},
                              {"vector", built.vector_of(i)}}
                   .dump();
        out += '\n';
    }
    write_text_file(staged, out);
    index_ = std::make_unique<CorpusIndex>(std::move(built));
    record.counters["passages"] = index_->size();
    record.counters["embedder_calls"] = embedder_calls() - calls_before;
    record.wall_ms = timer.elapsed_ms();
    return record;
}

StageRecord Pipeline::define_singleton() {
    StageRecord record;
    StageTimer timer;
    if (config_.definition_mode == DefinitionMode::None) {
        record.skipped = true;
        return record;
    }
    std::uint64_t calls_before = generator_calls();
    std::uint64_t requests = 0;

    std::string out;
    for (const auto& topic : topics()) {
        for (const auto& mention : topic.mentions) {
            auto def = definition_service().singleton(mention, topic);
            ++requests;
            out += nlohmann::json{{"topic_id", topic.topic_id},
                                  {"mention_id", def.mention_id},
                                  {"text", def.text},
                                  {"context_ids", def.context_ids},
                                  {"prompt_hash", def.meta.prompt_hash},
                                  {"backend", def.meta.backend_id}}
                       .dump();
            out += '\n';
        }
    }
    write_text_file(out_path(kSingletonDefsFile), out);

    std::uint64_t generated = generator_calls() - calls_before;
    record.counters["definitions_requested"] = requests;
    record.counters["generator_calls"] = generated;
    record.counters["cache_hits"] = requests >= generated ? requests - generated : 0;
    record.wall_ms = timer.elapsed_ms();
    return record;
}

std::map<std::string, std::string> Pipeline::load_singleton_texts() const {
    std::map<std::string, std::string> texts;
    std::ifstream in(out_path(kSingletonDefsFile));
    if (!in)
        throw ValidationError("missing " + std::string(kSingletonDefsFile) +
                              "; run define-singleton first");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto record = nlohmann::json::parse(line);
        texts[defs_key(record.at("topic_id").get<std::string>(),
                       record.at("mention_id").get<std::string>())] =
            record.at("text").get<std::string>();
    }
    return texts;
}

StageRecord Pipeline::score() {
    StageRecord record;
    StageTimer timer;
    std::string staged = out_path(kScoredPairsFile);
    if (fs::exists(staged) && !force_) {
        record.skipped = true;
        return record;
    }
    std::uint64_t calls_before = scorer_calls();

    std::map<std::string, std::string> singleton_texts;
    Stage stage = Stage::NoneDef;
    if (config_.definition_mode != DefinitionMode::None) {
        singleton_texts = load_singleton_texts();
        stage = Stage::Singleton;
    }

    std::string out;
    std::uint64_t pair_count = 0;
    for (const auto& topic : topics()) {
        auto pairs = enumerate_pairs(topic);
        std::vector<ScoreRequest> requests;
        requests.reserve(pairs.size());
        for (const auto& pair : pairs) {
            std::optional<PairDefinitions> defs;
            if (stage == Stage::Singleton) {
                auto first_it = singleton_texts.find(defs_key(topic.topic_id, pair.first));
                auto second_it = singleton_texts.find(defs_key(topic.topic_id, pair.second));
                if (first_it == singleton_texts.end() || second_it == singleton_texts.end())
                    throw ValidationError("missing singleton definition for pair (" +
                                          pair.first + ", " + pair.second + ") in topic " +
                                          topic.topic_id);
                defs = PairDefinitions{Stage::Singleton, first_it->second, second_it->second};
            }
            requests.push_back(make_request(topic, pair, defs));
        }
        auto scored = score_pairs(requests, scorer(), stage, config_.parallelism);
        for (const auto& entry : scored) {
            auto record_json = scored_pair_to_json(entry);
            record_json["topic_id"] = topic.topic_id;
            out += record_json.dump();
            out += '\n';
            ++pair_count;
        }
    }
    write_text_file(staged, out);
    record.counters["pairs_scored"] = pair_count;
    record.counters["scorer_calls"] = scorer_calls() - calls_before;
    record.wall_ms = timer.elapsed_ms();
    return record;
}

std::vector<std::pair<std::string, std::vector<ScoredPair>>> Pipeline::load_pairs_by_topic(
    const std::string& path) const {
    std::ifstream in(path);
    if (!in) throw ValidationError("missing " + path + "; run score first");
    std::vector<std::pair<std::string, std::vector<ScoredPair>>> by_topic;
    std::map<std::string, std::size_t> index_of;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto record = nlohmann::json::parse(line);
        std::string topic_id = record.at("topic_id").get<std::string>();
        auto scored = scored_pair_from_json(record);
        auto it = index_of.find(topic_id);
        if (it == index_of.end()) {
            index_of[topic_id] = by_topic.size();
            by_topic.push_back({topic_id, {}});
            it = index_of.find(topic_id);
        }
        by_topic[it->second].second.push_back(std::move(scored));
    }
    return by_topic;
}

StageRecord Pipeline::cascade_stage() {
    StageRecord record;
    StageTimer timer;
    bool applicable = config_.definition_mode == DefinitionMode::RelationalCascade &&
                      config_.cascade.stage2_enabled;
    if (!applicable) {
        record.skipped = true;
        return record;
    }
    std::string staged = out_path(kFinalPairsFile);
    if (fs::exists(staged) && !force_) {
        record.skipped = true;
        return record;
    }
    std::uint64_t generator_before = generator_calls();
    std::uint64_t scorer_before = scorer_calls();

    auto by_topic = load_pairs_by_topic(out_path(kScoredPairsFile));
    std::map<std::string, const Topic*> topic_of;
    for (const auto& topic : topics()) topic_of[topic.topic_id] = &topic;

    CascadeStats stats;
    stats.theta = config_.cascade.theta;
    stats.top_k = config_.cascade.top_k;

    auto serialize = [this](const MentionView& first, const MentionView& second,
                            const std::optional<PairDefinitions>& defs) {
        return serialize_pair(first, second, defs);
    };

    std::string out;
    for (const auto& [topic_id, stage1] : by_topic) {
        auto it = topic_of.find(topic_id);
        if (it == topic_of.end())
            throw ValidationError("scored pairs reference unknown topic " + topic_id);
        const Topic& topic = *it->second;

        auto candidates = stage1_filter_rank(stage1, config_.cascade);
        auto stage2 = stage2_rescore(candidates, topic, definition_service(), scorer(),
                                     serialize, config_.context_window,
                                     config_.cascade.on_failure, stage1);
        auto merged = merge_predictions(stage1, stage2);

        stats.stage1_pairs += stage1.size();
        stats.candidates += candidates.selected.size();
        for (const auto& entry : merged) {
            auto record_json = scored_pair_to_json(entry);
            record_json["topic_id"] = topic_id;
            out += record_json.dump();
            out += '\n';
        }
    }
    write_text_file(staged, out);

    stats.stage2_generator_calls = generator_calls() - generator_before;
    stats.stage2_scorer_calls = scorer_calls() - scorer_before;
    write_text_file(out_path(kCascadeManifestFile), cascade_stats_to_json(stats).dump(2) + "\n");

    record.counters["stage1_pairs"] = stats.stage1_pairs;
    record.counters["candidates"] = stats.candidates;
    record.counters["generator_calls"] = stats.stage2_generator_calls;
    record.counters["scorer_calls"] = stats.stage2_scorer_calls;
    record.wall_ms = timer.elapsed_ms();
    return record;
}

std::string Pipeline::final_pairs_path() const {
    std::string final_path = out_path(kFinalPairsFile);
    return fs::exists(final_path) ? final_path : out_path(kScoredPairsFile);
}

StageRecord Pipeline::cluster() {
    StageRecord record;
    StageTimer timer;
    std::string staged = out_path(kGraphsFile);
    if (fs::exists(staged) && !force_) {
        record.skipped = true;
        return record;
    }
    auto by_topic = load_pairs_by_topic(final_pairs_path());
    std::map<std::string, std::vector<ScoredPair>> pairs_of;
    for (auto& [topic_id, pairs] : by_topic) pairs_of[topic_id] = std::move(pairs);

    std::vector<std::pair<std::string, ClusterGraph>> graphs;
    for (const auto& topic : topics()) {
        std::vector<std::string> mention_ids;
        for (const auto& mention : topic.mentions) mention_ids.push_back(mention.mention_id);
        auto it = pairs_of.find(topic.topic_id);
        const std::vector<ScoredPair> empty;
        const auto& pairs = it == pairs_of.end() ? empty : it->second;

        ClusterGraph graph;
        graph.clusters = cluster_mentions(pairs, mention_ids, {config_.tau_c});
        graph = induce_hierarchy(graph.clusters, pairs, {config_.tau_h});
        validate_cluster_graph(graph, mention_ids);
        graphs.push_back({topic.topic_id, std::move(graph)});
        record.counters["clusters"] += graphs.back().second.clusters.size();
        record.counters["edges"] += graphs.back().second.edges.size();
    }
    write_cluster_graphs(staged, graphs);
    record.counters["topics"] = graphs.size();
    record.wall_ms = timer.elapsed_ms();
    return record;
}

StageRecord Pipeline::evaluate() {
    StageRecord record;
    StageTimer timer;
    auto predicted = read_cluster_graphs(out_path(kGraphsFile));

    std::vector<std::pair<std::string, ClusterGraph>> gold;
    for (const auto& topic : topics()) {
        if (!topic.gold)
            throw ValidationError("topic " + topic.topic_id +
                                  " has no gold annotation; cannot evaluate");
        gold.push_back({topic.topic_id, gold_cluster_graph(topic)});
    }

    auto bundle = evaluate_graphs(gold, predicted);

    // Eq.-style diagnostic loss of the final pair predictions vs gold.
    std::vector<PairDistribution> predictions;
    std::vector<RelationClass> golds;
    std::map<std::string, const Topic*> topic_of;
    for (const auto& topic : topics()) topic_of[topic.topic_id] = &topic;
    for (const auto& [topic_id, pairs] : load_pairs_by_topic(final_pairs_path())) {
        const Topic& topic = *topic_of.at(topic_id);
        for (const auto& scored : pairs) {
            predictions.push_back(scored.distribution);
            golds.push_back(gold_relation(scored.pair, *topic.gold));
        }
    }
    auto evaluation_json = evaluation_to_json(bundle);
    if (!predictions.empty())
        evaluation_json["pairwise_loss"] = pairwise_loss(predictions, golds);

    std::vector<EvalRow> rows;
    rows.push_back(to_eval_row(config_.label, bundle.macro));
    rows.push_back(to_eval_row(config_.label + " (micro)", bundle.micro));
    for (double fraction : config_.hard_fractions) {
        auto hard_ids =
            metrics::select_hard_subset(topics(), fraction, config_.baseline_tau_c);
        std::set<std::string> hard(hard_ids.begin(), hard_ids.end());
        if (hard.empty()) continue;
        TopicEvaluation mean;
        std::size_t count = 0;
        for (const auto& eval : bundle.per_topic) {
            if (!hard.count(eval.topic_id)) continue;
            mean.coref.conll_f1 += eval.coref.conll_f1;
            mean.hierarchy.hierarchy.f1 += eval.hierarchy.hierarchy.f1;
            mean.hierarchy.hierarchy_50.f1 += eval.hierarchy.hierarchy_50.f1;
            mean.hierarchy.path_ratio += eval.hierarchy.path_ratio;
            ++count;
        }
        if (count == 0) continue;
        mean.coref.conll_f1 /= static_cast<double>(count);
        mean.hierarchy.hierarchy.f1 /= static_cast<double>(count);
        mean.hierarchy.hierarchy_50.f1 /= static_cast<double>(count);
        mean.hierarchy.path_ratio /= static_cast<double>(count);
        char label[64];
        std::snprintf(label, sizeof(label), "%s (hard %g%%)", config_.label.c_str(),
                      fraction * 100.0);
        rows.push_back(to_eval_row(label, mean));
    }

    auto rendered = render_report(rows);
    write_text_file(out_path(kEvaluationFile), evaluation_json.dump(2) + "\n");
    write_text_file(out_path(kReportTxtFile), rendered.table);
    write_text_file(out_path(kReportCsvFile), rendered.csv);

    record.counters["topics_evaluated"] = bundle.per_topic.size();
    record.wall_ms = timer.elapsed_ms();
    return record;
}

RunManifest Pipeline::run() {
    RunManifest manifest;
    manifest.config_snapshot = config_.to_json();

    using StageFn = StageRecord (Pipeline::*)();
    const std::vector<std::pair<std::string, StageFn>> stages = {
        {"ingest", &Pipeline::ingest},
        {"index", &Pipeline::index},
        {"define-singleton", &Pipeline::define_singleton},
        {"score", &Pipeline::score},
        {"cascade", &Pipeline::cascade_stage},
        {"cluster", &Pipeline::cluster},
        {"evaluate", &Pipeline::evaluate},
    };

    auto finalize = [&]() {
        for (const auto& entry : fs::recursive_directory_iterator(config_.out_dir)) {
            if (!entry.is_regular_file()) continue;
            auto rel = fs::relative(entry.path(), config_.out_dir).string();
            if (rel == kManifestFile) continue;
            manifest.output_digests[rel] = file_digest(entry.path());
        }
        write_text_file(out_path(kManifestFile), manifest.to_json().dump(2) + "\n");
    };

    for (const auto& [name, fn] : stages) {
        try {
            manifest.stages.push_back({name, (this->*fn)()});
        } catch (...) {
            manifest.failed_stage = name;
            finalize();
            throw;
        }
    }
    finalize();
    return manifest;
}

void Pipeline::export_training(Serializer format, const std::string& export_path) {
    std::vector<const Topic*> sorted;
    for (const auto& topic : topics()) sorted.push_back(&topic);
    std::sort(sorted.begin(), sorted.end(),
              [](const Topic* a, const Topic* b) { return a->topic_id < b->topic_id; });

    auto previous = config_.serializer;
    config_.serializer = format;
    std::string out;
    try {
        for (const Topic* topic : sorted) {
            if (!topic->gold)
                throw ValidationError("topic " + topic->topic_id +
                                      " has no gold labels; cannot export training data");
            for (const auto& pair : enumerate_pairs(*topic)) {
                std::optional<PairDefinitions> defs;
                if (config_.definition_mode == DefinitionMode::Singleton) {
                    defs = PairDefinitions{
                        Stage::Singleton,
                        definition_service().singleton(topic->mention(pair.first), *topic).text,
                        definition_service().singleton(topic->mention(pair.second), *topic).text};
                } else if (config_.definition_mode == DefinitionMode::RelationalCascade) {
                    auto [first_def, second_def] = definition_service().relational(
                        topic->mention(pair.first), topic->mention(pair.second), *topic);
                    defs = PairDefinitions{Stage::Relational, first_def.text, second_def.text};
                }
                auto request = make_request(*topic, pair, defs);
                out += nlohmann::json{
                    {"topic_id", topic->topic_id},
                    {"first", pair.first},
                    {"second", pair.second},
                    {"input", request.serialized},
                    {"label", static_cast<int>(gold_relation(pair, *topic->gold))}}
                           .dump();
                out += '\n';
            }
        }
    } catch (...) {
        config_.serializer = previous;
        throw;
    }
    config_.serializer = previous;
    write_text_file(export_path, out);
}

RenderedReport Pipeline::render_from_evaluation() const {
    auto record = nlohmann::json::parse(read_text_file(out_path(kEvaluationFile)));
    auto bundle = evaluation_from_json(record);
    std::vector<EvalRow> rows;
    rows.push_back(to_eval_row(config_.label, bundle.macro));
    rows.push_back(to_eval_row(config_.label + " (micro)", bundle.micro));
    return render_report(rows);
}

std::vector<metrics::TopicScore> Pipeline::hard_subset_scores() {
    return metrics::baseline_topic_scores(topics(), config_.baseline_tau_c);
}

std::uint64_t Pipeline::generator_calls() const {
    return counting_generator_ ? counting_generator_->calls() : 0;
}

std::uint64_t Pipeline::scorer_calls() const {
    return counting_scorer_ ? counting_scorer_->calls() : 0;
}

std::uint64_t Pipeline::embedder_calls() const {
    return counting_embedder_ ? counting_embedder_->calls() : 0;
}

}  // namespace hcoref
