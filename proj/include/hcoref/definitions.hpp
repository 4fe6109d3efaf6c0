#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcoref/corpus.hpp"
#include "hcoref/retrieval.hpp"

namespace hcoref {

/// Text template with {{placeholder}} slots. Construction validates that all
/// required placeholders are present.
class PromptTemplate {
  public:
    static PromptTemplate from_string(std::string text,
                                      const std::vector<std::string>& required);
    static PromptTemplate from_file(const std::string& path,
                                    const std::vector<std::string>& required);

    std::string render(const std::map<std::string, std::string>& values) const;
    const std::string& text() const { return text_; }

  private:
    explicit PromptTemplate(std::string text) : text_(std::move(text)) {}
    std::string text_;
};

PromptTemplate default_singleton_template();
PromptTemplate default_relational_template();

extern const std::vector<std::string> kSingletonPlaceholders;
extern const std::vector<std::string> kRelationalPlaceholders;

struct GeneratorMeta {
    std::string backend_id;
    std::string prompt_hash;
};

struct SingletonDefinition {
    std::string mention_id;
    std::string text;
    std::vector<std::string> context_ids;
    GeneratorMeta meta;
};

/// Directed definition of `anchor_id` phrased in relation to `other_id`.
struct RelationalDefinition {
    std::string anchor_id;
    std::string other_id;
    std::string text;
    std::vector<std::string> context_ids;
    GeneratorMeta meta;
};

class Generator {
  public:
    virtual ~Generator() = default;
    virtual std::string generate(const std::string& prompt) = 0;
    virtual std::string name() const = 0;
};

std::string build_singleton_prompt(const Mention& mention, const std::string& local_context,
                                   const ContextSet& contexts, const PromptTemplate& tpl);

std::string build_relational_prompt(const Mention& anchor, const Mention& other,
                                    const std::string& anchor_context,
                                    const ContextSet& anchor_contexts,
                                    const std::string& other_context,
                                    const ContextSet& other_contexts,
                                    const PromptTemplate& tpl);

/// Append-only persistent store, one JSONL file per definition kind. The
/// first committed value for a key wins; later writes for the same key are
/// dropped. Safe for concurrent read/write.
class DefinitionCache {
  public:
    /// In-memory-only cache when `dir` is empty.
    explicit DefinitionCache(std::string dir);

    std::optional<SingletonDefinition> find_singleton(const std::string& mention_id,
                                                      const std::string& prompt_hash) const;
    std::optional<RelationalDefinition> find_relational(const std::string& anchor_id,
                                                        const std::string& other_id,
                                                        const std::string& prompt_hash) const;

    /// Returns the stored entry: the argument on first commit, the previously
    /// committed value otherwise.
    SingletonDefinition put_singleton(SingletonDefinition definition);
    RelationalDefinition put_relational(RelationalDefinition definition);

    std::size_t singleton_count() const;
    std::size_t relational_count() const;

  private:
    void load();

    std::string dir_;
    mutable std::mutex mutex_;
    std::map<std::string, SingletonDefinition> singletons_;
    std::map<std::string, RelationalDefinition> relationals_;
};

struct GenerationPolicy {
    int attempts = 3;
    std::chrono::milliseconds backoff{50};  // doubled after each failure
    std::size_t token_cap = 160;            // generated text truncated to this
};

/// Orchestrates retrieval, prompt construction, generation, and caching.
/// `retrieval` may be null: the no-retrieval mode that generates from the
/// local context alone (empty ContextSet).
class DefinitionService {
  public:
    DefinitionService(const RetrievalPipeline* retrieval, Generator* generator,
                      DefinitionCache* cache, PromptTemplate singleton_template,
                      PromptTemplate relational_template, GenerationPolicy policy,
                      std::optional<std::size_t> context_window = std::nullopt);

    SingletonDefinition singleton(const Mention& mention, const Topic& topic);

    /// Both directed definitions for a pair, each cached under its own key.
    std::pair<RelationalDefinition, RelationalDefinition> relational(const Mention& first,
                                                                     const Mention& second,
                                                                     const Topic& topic);

  private:
    ContextSet contexts_for(const Mention& mention, const std::string& local_context) const;
    std::string generate_with_retries(const std::string& prompt) const;
    RelationalDefinition relational_one_direction(const Mention& anchor, const Mention& other,
                                                  const std::string& anchor_context,
                                                  const ContextSet& anchor_contexts,
                                                  const std::string& other_context,
                                                  const ContextSet& other_contexts);

    const RetrievalPipeline* retrieval_;
    Generator* generator_;
    DefinitionCache* cache_;
    PromptTemplate singleton_template_;
    PromptTemplate relational_template_;
    GenerationPolicy policy_;
    std::optional<std::size_t> context_window_;
};

}  // namespace hcoref
