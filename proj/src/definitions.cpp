#include "hcoref/definitions.hpp"

#include <fstream>
#include <thread>

#include <json.hpp>

#include "hcoref/errors.hpp"
#include "hcoref/util.hpp"

namespace hcoref {

const std::vector<std::string> kSingletonPlaceholders = {"mention", "local_context",
                                                         "passages"};
const std::vector<std::string> kRelationalPlaceholders = {
    "anchor", "anchor_context", "anchor_passages", "other", "other_context",
    "other_passages"};

PromptTemplate PromptTemplate::from_string(std::string text,
                                           const std::vector<std::string>& required) {
    for (const auto& placeholder : required) {
        if (text.find("{{" + placeholder + "}}") == std::string::npos)
            throw TemplateError("template is missing placeholder {{" + placeholder + "}}");
    }
    return PromptTemplate(std::move(text));
}

PromptTemplate PromptTemplate::from_file(const std::string& path,
                                         const std::vector<std::string>& required) {
    return from_string(read_text_file(path), required);
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    std::string out = text_;
    for (const auto& [key, value] : values) {
        std::string slot = "{{" + key + "}}";
        std::size_t pos = 0;
        while ((pos = out.find(slot, pos)) != std::string::npos) {
            out.replace(pos, slot.size(), value);
            pos += value.size();
        }
    }
    return out;
}

namespace {

constexpr const char* kSingletonTemplateText =
    "You are given a concept mention from a scientific paper, the passage where it\n"
    "appears, and excerpts retrieved from related literature. Write a concise\n"
    "definition of the concept as it is used in this passage.\n"
    "\n"
    "Mention: {{mention}}\n"
    "Passage: {{local_context}}\n"
    "Retrieved excerpts:\n"
    "{{passages}}\n"
    "Definition:\n";

constexpr const char* kRelationalTemplateText =
    "You are given two concept mentions from scientific papers, each with the\n"
    "passage where it appears and excerpts retrieved from related literature.\n"
    "Write a concise definition of the first concept that makes explicit how it\n"
    "relates to or differs from the second concept.\n"
    "\n"
    "First concept (to define): {{anchor}}\n"
    "Passage: {{anchor_context}}\n"
    "Retrieved excerpts:\n"
    "{{anchor_passages}}\n"
    "\n"
    "Second concept: {{other}}\n"
    "Passage: {{other_context}}\n"
    "Retrieved excerpts:\n"
    "{{other_passages}}\n"
    "\n"
    "Definition of {{anchor}} in relation to {{other}}:\n";

std::string render_passages(const ContextSet& contexts) {
    std::string out;
    for (std::size_t i = 0; i < contexts.entries.size(); ++i) {
        out += "[" + std::to_string(i + 1) + "] " + contexts.entries[i].passage.text + "\n";
    }
    return out;
}

std::string singleton_key(const std::string& mention_id, const std::string& prompt_hash) {
    return mention_id + "\x1f" + prompt_hash;
}

std::string relational_key(const std::string& anchor_id, const std::string& other_id,
                           const std::string& prompt_hash) {
    return anchor_id + "\x1f" + other_id + "\x1f" + prompt_hash;
}

}  // namespace

PromptTemplate default_singleton_template() {
    return PromptTemplate::from_string(kSingletonTemplateText, kSingletonPlaceholders);
}

PromptTemplate default_relational_template() {
    return PromptTemplate::from_string(kRelationalTemplateText, kRelationalPlaceholders);
}

std::string build_singleton_prompt(const Mention& mention, const std::string& local_context,
                                   const ContextSet& contexts, const PromptTemplate& tpl) {
    return tpl.render({{"mention", mention.surface},
                       {"local_context", local_context},
                       {"passages", render_passages(contexts)}});
}

std::string build_relational_prompt(const Mention& anchor, const Mention& other,
                                    const std::string& anchor_context,
                                    const ContextSet& anchor_contexts,
                                    const std::string& other_context,
                                    const ContextSet& other_contexts,
                                    const PromptTemplate& tpl) {
    if (anchor.mention_id == other.mention_id)
        throw ValidationError("relational prompt requires two distinct mentions");
    return tpl.render({{"anchor", anchor.surface},
                       {"anchor_context", anchor_context},
                       {"anchor_passages", render_passages(anchor_contexts)},
                       {"other", other.surface},
                       {"other_context", other_context},
                       {"other_passages", render_passages(other_contexts)}});
}

DefinitionCache::DefinitionCache(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) {
        std::filesystem::create_directories(dir_);
        load();
    }
}

void DefinitionCache::load() {
    auto load_file = [&](const std::string& name, auto&& insert) {
        std::ifstream in(std::filesystem::path(dir_) / name);
        if (!in) return;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            insert(nlohmann::json::parse(line));
        }
    };
    load_file("singleton_cache.jsonl", [&](const nlohmann::json& record) {
        SingletonDefinition def;
        def.mention_id = record.at("mention_id").get<std::string>();
        def.text = record.at("text").get<std::string>();
        def.context_ids = record.at("context_ids").get<std::vector<std::string>>();
        def.meta.backend_id = record.at("backend").get<std::string>();
        def.meta.prompt_hash = record.at("prompt_hash").get<std::string>();
        singletons_.try_emplace(singleton_key(def.mention_id, def.meta.prompt_hash), def);
    });
    load_file("relational_cache.jsonl", [&](const nlohmann::json& record) {
        RelationalDefinition def;
        def.anchor_id = record.at("anchor_id").get<std::string>();
        def.other_id = record.at("other_id").get<std::string>();
        def.text = record.at("text").get<std::string>();
        def.context_ids = record.at("context_ids").get<std::vector<std::string>>();
        def.meta.backend_id = record.at("backend").get<std::string>();
        def.meta.prompt_hash = record.at("prompt_hash").get<std::string>();
        relationals_.try_emplace(
            relational_key(def.anchor_id, def.other_id, def.meta.prompt_hash), def);
    });
}

std::optional<SingletonDefinition> DefinitionCache::find_singleton(
    const std::string& mention_id, const std::string& prompt_hash) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = singletons_.find(singleton_key(mention_id, prompt_hash));
    if (it == singletons_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationalDefinition> DefinitionCache::find_relational(
    const std::string& anchor_id, const std::string& other_id,
    const std::string& prompt_hash) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = relationals_.find(relational_key(anchor_id, other_id, prompt_hash));
    if (it == relationals_.end()) return std::nullopt;
    return it->second;
}

SingletonDefinition DefinitionCache::put_singleton(SingletonDefinition definition) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = singletons_.try_emplace(
        singleton_key(definition.mention_id, definition.meta.prompt_hash), definition);
    if (inserted && !dir_.empty()) {
        std::ofstream out(std::filesystem::path(dir_) / "singleton_cache.jsonl",
                          std::ios::app);
        out << nlohmann::json{{"mention_id", definition.mention_id},
                              {"text", definition.text},
                              {"context_ids", definition.context_ids},
                              {"backend", definition.meta.backend_id},
                              {"prompt_hash", definition.meta.prompt_hash}}
                   .dump()
            << '\n';
    }
    return it->second;
}

RelationalDefinition DefinitionCache::put_relational(RelationalDefinition definition) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = relationals_.try_emplace(
        relational_key(definition.anchor_id, definition.other_id,
                       definition.meta.prompt_hash),
        definition);
    if (inserted && !dir_.empty()) {
        std::ofstream out(std::filesystem::path(dir_) / "relational_cache.jsonl",
                          std::ios::app);
        out << nlohmann::json{{"anchor_id", definition.anchor_id},
                              {"other_id", definition.other_id},
                              {"text", definition.text},
                              {"context_ids", definition.context_ids},
                              {"backend", definition.meta.backend_id},
                              {"prompt_hash", definition.meta.prompt_hash}}
                   .dump()
            << '\n';
    }
    return it->second;
}

std::size_t DefinitionCache::singleton_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return singletons_.size();
}

std::size_t DefinitionCache::relational_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return relationals_.size();
}

DefinitionService::DefinitionService(const RetrievalPipeline* retrieval, Generator* generator,
                                     DefinitionCache* cache, PromptTemplate singleton_template,
                                     PromptTemplate relational_template,
                                     GenerationPolicy policy,
                                     std::optional<std::size_t> context_window)
    : retrieval_(retrieval),
      generator_(generator),
      cache_(cache),
      singleton_template_(std::move(singleton_template)),
      relational_template_(std::move(relational_template)),
      policy_(policy),
      context_window_(context_window) {}

ContextSet DefinitionService::contexts_for(const Mention& mention,
                                           const std::string& local_context) const {
    if (!retrieval_) return ContextSet{mention.mention_id, {}};
    return retrieval_->contexts_for(mention.mention_id, local_context);
}

std::string DefinitionService::generate_with_retries(const std::string& prompt) const {
    auto backoff = policy_.backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            std::string text = generator_->generate(prompt);
            if (text.empty()) throw BackendError("generator returned empty text");
            return truncate_tokens(text, policy_.token_cap);
        } catch (const std::exception& e) {
            if (attempt >= policy_.attempts)
                throw BackendError("generation failed after " + std::to_string(attempt) +
                                   " attempts: " + e.what());
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
}

SingletonDefinition DefinitionService::singleton(const Mention& mention, const Topic& topic) {
    std::string local_context = extract_local_context(mention, topic, context_window_);
    ContextSet contexts = contexts_for(mention, local_context);
    std::string prompt =
        build_singleton_prompt(mention, local_context, contexts, singleton_template_);
    std::string prompt_hash = fnv1a64_hex(prompt);

    if (auto hit = cache_->find_singleton(mention.mention_id, prompt_hash)) return *hit;

    SingletonDefinition def;
    def.mention_id = mention.mention_id;
    def.text = generate_with_retries(prompt);
    def.context_ids = contexts.passage_ids();
    def.meta = {generator_->name(), prompt_hash};
    return cache_->put_singleton(std::move(def));
}

RelationalDefinition DefinitionService::relational_one_direction(
    const Mention& anchor, const Mention& other, const std::string& anchor_context,
    const ContextSet& anchor_contexts, const std::string& other_context,
    const ContextSet& other_contexts) {
    std::string prompt =
        build_relational_prompt(anchor, other, anchor_context, anchor_contexts,
                                other_context, other_contexts, relational_template_);
    std::string prompt_hash = fnv1a64_hex(prompt);

    if (auto hit = cache_->find_relational(anchor.mention_id, other.mention_id, prompt_hash))
        return *hit;

    RelationalDefinition def;
    def.anchor_id = anchor.mention_id;
    def.other_id = other.mention_id;
    def.text = generate_with_retries(prompt);
    def.context_ids = anchor_contexts.passage_ids();
    def.meta = {generator_->name(), prompt_hash};
    return cache_->put_relational(std::move(def));
}

std::pair<RelationalDefinition, RelationalDefinition> DefinitionService::relational(
    const Mention& first, const Mention& second, const Topic& topic) {
    if (first.mention_id == second.mention_id)
        throw ValidationError("relational definitions require two distinct mentions");
    std::string first_context = extract_local_context(first, topic, context_window_);
    std::string second_context = extract_local_context(second, topic, context_window_);
    ContextSet first_contexts = contexts_for(first, first_context);
    ContextSet second_contexts = contexts_for(second, second_context);

    auto first_anchored = relational_one_direction(first, second, first_context,
                                                   first_contexts, second_context,
                                                   second_contexts);
    auto second_anchored = relational_one_direction(second, first, second_context,
                                                    second_contexts, first_context,
                                                    first_contexts);
    return {std::move(first_anchored), std::move(second_anchored)};
}

}  // namespace hcoref
