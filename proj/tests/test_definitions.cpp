#include <doctest.h>

#include <random>

#include "hcoref/backends.hpp"
#include "hcoref/definitions.hpp"
#include "hcoref/errors.hpp"
#include "hcoref/util.hpp"
#include "test_support.hpp"

using namespace hcoref;
using namespace hcoref::testing;

namespace {

class EmptyGenerator : public Generator {
  public:
    std::string generate(const std::string&) override { return ""; }
    std::string name() const override { return "empty"; }
};

class FlakyGenerator : public Generator {
  public:
    explicit FlakyGenerator(int failures) : failures_left_(failures) {}
    std::string generate(const std::string& prompt) override {
        ++calls;
        if (failures_left_-- > 0) throw BackendError("transient");
        return "definition for: " + prompt.substr(0, 20);
    }
    std::string name() const override { return "flaky"; }
    int calls = 0;

  private:
    int failures_left_;
};

Mention make_mention(const std::string& id, const std::string& surface) {
    Mention m;
    m.mention_id = id;
    m.surface = surface;
    return m;
}

ContextSet contexts_with(const std::string& mention_id,
                         std::vector<std::pair<std::string, std::string>> id_texts) {
    ContextSet contexts;
    contexts.mention_id = mention_id;
    double score = 1.0;
    for (auto& [id, text] : id_texts) {
        contexts.entries.push_back({{id, "src", text}, score});
        score -= 0.1;
    }
    return contexts;
}

Topic tiny_topic() {
    Topic topic;
    topic.topic_id = "t";
    topic.documents.push_back(
        {"d", {{"graph", "embedding", "is", "useful"}, {"representation", "learning", "helps"}}});
    Mention m1;
    m1.mention_id = "m1";
    m1.doc_id = "d";
    m1.paragraph_index = 0;
    m1.start = 0;
    m1.end = 2;
    m1.surface = "graph embedding";
    Mention m2;
    m2.mention_id = "m2";
    m2.doc_id = "d";
    m2.paragraph_index = 1;
    m2.start = 0;
    m2.end = 2;
    m2.surface = "representation learning";
    topic.mentions = {m1, m2};
    return topic;
}

GenerationPolicy fast_policy() {
    GenerationPolicy policy;
    policy.backoff = std::chrono::milliseconds(1);
    return policy;
}

}  // namespace

TEST_CASE("singleton prompt instantiation is deterministic and ordered") {
    auto tpl = default_singleton_template();
    auto mention = make_mention("m1", "graph embedding");

    auto empty = build_singleton_prompt(mention, "local ctx", {"m1", {}}, tpl);
    CHECK(empty.find("graph embedding") != std::string::npos);
    CHECK(empty.find("local ctx") != std::string::npos);
    CHECK(empty.find("[1]") == std::string::npos);

    auto contexts = contexts_with("m1", {{"p1", "first passage"}, {"p2", "second passage"}});
    auto with_two = build_singleton_prompt(mention, "local ctx", contexts, tpl);
    auto first = with_two.find("[1] first passage");
    auto second = with_two.find("[2] second passage");
    REQUIRE(first != std::string::npos);
    REQUIRE(second != std::string::npos);
    CHECK(first < second);

    CHECK(with_two == build_singleton_prompt(mention, "local ctx", contexts, tpl));
}

TEST_CASE("templates reject missing placeholders") {
    CHECK_THROWS_AS(
        PromptTemplate::from_string("only {{mention}} here", kSingletonPlaceholders),
        TemplateError);
    CHECK_THROWS_AS(PromptTemplate::from_string("no anchors", kRelationalPlaceholders),
                    TemplateError);
}

TEST_CASE("relational prompt is anchored and asymmetric") {
    auto tpl = default_relational_template();
    auto anchor = make_mention("m1", "graph embedding");
    auto other = make_mention("m2", "representation learning");

    auto forward = build_relational_prompt(anchor, other, "ctx1", {"m1", {}}, "ctx2",
                                           {"m2", {}}, tpl);
    auto backward = build_relational_prompt(other, anchor, "ctx2", {"m2", {}}, "ctx1",
                                            {"m1", {}}, tpl);
    CHECK(forward != backward);
    CHECK(forward ==
          build_relational_prompt(anchor, other, "ctx1", {"m1", {}}, "ctx2", {"m2", {}}, tpl));

    // Anchor material precedes the other's.
    CHECK(forward.find("graph embedding") < forward.find("representation learning"));
    CHECK(backward.find("representation learning") < backward.find("graph embedding"));

    CHECK_THROWS_AS(
        build_relational_prompt(anchor, anchor, "c", {"m1", {}}, "c", {"m1", {}}, tpl),
        ValidationError);
}

TEST_CASE("singleton generation caches by prompt hash, across restarts") {
    TempDir dir("defs");
    auto topic = tiny_topic();

    EchoGenerator echo;
    CountingGenerator counting(&echo);
    {
        DefinitionCache cache(dir.file("cache"));
        DefinitionService service(nullptr, &counting, &cache, default_singleton_template(),
                                  default_relational_template(), fast_policy());
        auto first = service.singleton(topic.mentions[0], topic);
        CHECK_FALSE(first.text.empty());
        CHECK(first.text.find("graph embedding") != std::string::npos);  // echo of prompt
        CHECK(counting.calls() == 1);

        auto again = service.singleton(topic.mentions[0], topic);
        CHECK(again.text == first.text);
        CHECK(counting.calls() == 1);  // cache hit, no new backend call
    }
    {
        // New process, same cache directory: still no backend call.
        DefinitionCache cache(dir.file("cache"));
        DefinitionService service(nullptr, &counting, &cache, default_singleton_template(),
                                  default_relational_template(), fast_policy());
        auto warm = service.singleton(topic.mentions[0], topic);
        CHECK(counting.calls() == 1);
        CHECK(warm.text.find("graph embedding") != std::string::npos);
    }
}

TEST_CASE("empty generation is an error; retries recover transient failures") {
    TempDir dir("defs");
    auto topic = tiny_topic();
    DefinitionCache cache(dir.file("cache"));

    EmptyGenerator empty;
    DefinitionService empty_service(nullptr, &empty, &cache, default_singleton_template(),
                                    default_relational_template(), fast_policy());
    CHECK_THROWS_AS(empty_service.singleton(topic.mentions[0], topic), BackendError);

    FlakyGenerator flaky(2);
    DefinitionService flaky_service(nullptr, &flaky, &cache, default_singleton_template(),
                                    default_relational_template(), fast_policy());
    auto def = flaky_service.singleton(topic.mentions[0], topic);
    CHECK_FALSE(def.text.empty());
    CHECK(flaky.calls == 3);

    FlakyGenerator hopeless(10);
    DefinitionService hopeless_service(nullptr, &hopeless, &cache,
                                       default_singleton_template(),
                                       default_relational_template(), fast_policy());
    CHECK_THROWS_AS(hopeless_service.singleton(topic.mentions[1], topic), BackendError);
    CHECK(hopeless.calls == 3);  // attempts bound
}

TEST_CASE("relational generation produces both directions and caches each") {
    TempDir dir("defs");
    auto topic = tiny_topic();
    EchoGenerator echo;
    CountingGenerator counting(&echo);
    DefinitionCache cache(dir.file("cache"));
    DefinitionService service(nullptr, &counting, &cache, default_singleton_template(),
                              default_relational_template(), fast_policy());

    auto [forward, backward] = service.relational(topic.mentions[0], topic.mentions[1], topic);
    CHECK(counting.calls() == 2);
    CHECK(forward.anchor_id == "m1");
    CHECK(forward.other_id == "m2");
    CHECK(backward.anchor_id == "m2");
    CHECK(backward.other_id == "m1");
    // Echo generator: each text embeds its own anchor surface.
    CHECK(forward.text.find("graph embedding") != std::string::npos);
    CHECK(backward.text.find("representation learning") != std::string::npos);

    auto second_time = service.relational(topic.mentions[0], topic.mentions[1], topic);
    CHECK(counting.calls() == 2);  // full cache hit
    CHECK(second_time.first.text == forward.text);

    CHECK_THROWS_AS(service.relational(topic.mentions[0], topic.mentions[0], topic),
                    ValidationError);
}

TEST_CASE("only the missing direction triggers a backend call") {
    TempDir dir("defs");
    auto topic = tiny_topic();
    EchoGenerator echo;
    DefinitionCache cache(dir.file("cache"));

    // Seed exactly one direction (m1 anchored on m2) by hand, under the same
    // prompt hash the service will compute.
    auto ctx1 = extract_local_context(topic.mentions[0], topic, std::nullopt);
    auto ctx2 = extract_local_context(topic.mentions[1], topic, std::nullopt);
    auto forward_prompt = build_relational_prompt(topic.mentions[0], topic.mentions[1],
                                                  ctx1, {"m1", {}}, ctx2, {"m2", {}},
                                                  default_relational_template());
    RelationalDefinition seeded;
    seeded.anchor_id = "m1";
    seeded.other_id = "m2";
    seeded.text = "seeded definition";
    seeded.meta = {"seed", fnv1a64_hex(forward_prompt)};
    cache.put_relational(seeded);

    CountingGenerator counting(&echo);
    DefinitionService service(nullptr, &counting, &cache, default_singleton_template(),
                              default_relational_template(), fast_policy());
    auto [fwd, bwd] = service.relational(topic.mentions[0], topic.mentions[1], topic);
    CHECK(counting.calls() == 1);  // only the reverse direction was generated
    CHECK(fwd.text == "seeded definition");
    CHECK(bwd.anchor_id == "m2");
}

TEST_CASE("generated text is truncated to the token cap") {
    TempDir dir("defs");
    auto topic = tiny_topic();
    EchoGenerator echo(1000);
    DefinitionCache cache("");
    GenerationPolicy policy = fast_policy();
    policy.token_cap = 5;
    DefinitionService service(nullptr, &echo, &cache, default_singleton_template(),
                              default_relational_template(), policy);
    auto def = service.singleton(topic.mentions[0], topic);
    CHECK(split_tokens(def.text).size() <= 5);
}
