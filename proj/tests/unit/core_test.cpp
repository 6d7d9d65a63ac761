#include <gtest/gtest.h>

#include <map>

#include "permem/permem.hpp"
#include "support/fixtures.hpp"

using namespace permem;
using namespace permem::testing;

TEST(Text, FnvVectors) {
    EXPECT_EQ(text::fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(text::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(text::fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Text, NormalizeAndContainment) {
    EXPECT_EQ(text::normalize("  Hello \n\t World  "), "hello world");
    EXPECT_TRUE(text::contains_normalized("User prefers   DARK mode", "prefers dark mode"));
    EXPECT_FALSE(text::contains_normalized("anything", "   "));
    EXPECT_EQ(text::slugify("Recipe Advice & Meal Planning"), "recipe-advice-meal-planning");
    EXPECT_EQ(text::trim("  x "), "x");
}

TEST(Text, TruncateKeepsCodePoints) {
    const std::string s = "ab\xc3\xa9";  // "abé"
    EXPECT_EQ(text::truncate_utf8(s, 3), "ab");
    EXPECT_EQ(text::truncate_utf8(s, 4), s);
}

TEST(Rng, SplitMixReference) {
    SeededRng r(0);
    EXPECT_EQ(r.next(), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(r.next(), 0x6e789e6aa1b965f4ULL);
}

TEST(Rng, PersonaSeedIsFnvOverSeedThenUuid) {
    std::string bytes(8, '\0');
    const std::uint64_t seed = 0x0102030405060708ULL;
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((seed >> (8 * i)) & 0xff);
    EXPECT_EQ(derive_persona_seed(seed, "uuid-1"), text::fnv1a64(bytes + "uuid-1"));
    EXPECT_NE(derive_persona_seed(seed, "uuid-1"), derive_persona_seed(seed + 1, "uuid-1"));
}

TEST(Rng, BelowStaysInRange) {
    SeededRng r(9);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
    EXPECT_THROW(r.below(0), std::invalid_argument);
}

TEST(JsonExtract, FindsObjectInProse) {
    auto j = extract_json_object("Sure! Here it is: {\"a\": \"}\", \"b\": [1, 2]} done");
    ASSERT_TRUE(j);
    EXPECT_EQ((*j)["a"], "}");
    EXPECT_FALSE(extract_json_object("no json here"));
    auto a = extract_json_array("x [1,2,3] y");
    ASSERT_TRUE(a);
    EXPECT_EQ(a->size(), 3u);
}

TEST(Prompts, RenderAndMissingPlaceholder) {
    EXPECT_EQ(render_template("a {{x}} {\"k\": 1}", {{"x", "b"}}), "a b {\"k\": 1}");
    EXPECT_THROW(render_template("{{missing}}", {}), ConfigError);
    PromptSet p;
    EXPECT_THROW(p.get("nope"), ConfigError);
}

TEST(Prompts, ShippedFilesMatchDefaults) {
    PromptSet defaults;
    const auto dir = source_path("prompts");
    PromptSet loaded = PromptSet::from_directory(dir);
    for (const auto& [name, text] : defaults.all()) {
        EXPECT_TRUE(std::filesystem::exists(dir + "/" + name + ".txt")) << name;
        EXPECT_EQ(loaded.get(name), text) << name;
    }
}

TEST(MockBackend, RulesWalkResponsesAndRegexFormats) {
    auto mock = ScriptedMock::from_json(json::parse(R"J({"rules": [
        {"match": "hello", "responses": ["one", "two"]},
        {"regex": "name=(\\w+)", "response": "hi $1"},
        {"match": "boom", "error": "transport"}]})J"));
    EXPECT_EQ(mock->generate(GenerationRequest::single("", "hello")), "one");
    EXPECT_EQ(mock->generate(GenerationRequest::single("", "hello")), "two");
    EXPECT_EQ(mock->generate(GenerationRequest::single("", "hello")), "two");
    EXPECT_EQ(mock->generate(GenerationRequest::single("", "name=ada")), "hi ada");
    EXPECT_THROW(mock->generate(GenerationRequest::single("", "boom")), TransportError);
    EXPECT_THROW(mock->generate(GenerationRequest::single("", "other")), NoRuleError);
}

TEST(MockBackend, EmbeddingsAreDeterministicUnitVectors) {
    ScriptedMock m;
    const auto a = m.embed("Some Fact");
    EXPECT_EQ(a, m.embed("  some   fact "));
    EXPECT_NEAR(a.norm(), 1.0, 1e-12);
    EXPECT_NE(a, m.embed("another fact"));
    EXPECT_THROW(m.embed("   "), BackendError);
}

TEST(BackendConfig, RejectsBadKinds) {
    EXPECT_THROW(backend_config_from_json(json{{"kind", "carrier-pigeon"}}), ConfigError);
    EXPECT_THROW(backend_config_from_json(json{{"kind", "http"}}), ConfigError);
    EXPECT_EQ(backend_config_from_json(json{{"kind", "mock"}}).kind, BackendKind::mock);
}

TEST(Dataset, SampleRoundTripsByteIdentical) {
    const auto path = source_path("data/minimal_dataset.json");
    const auto ds = load_dataset(path);
    ASSERT_EQ(ds.users.size(), 2u);
    EXPECT_EQ(serialize_dataset(ds), read_file(path));
    EXPECT_EQ(parse_dataset(serialize_dataset(ds)), ds);
}

TEST(Dataset, ValidationCatchesBrokenRecords) {
    auto ds = load_dataset(source_path("data/minimal_dataset.json"));
    {
        auto bad = ds;
        bad.users[0].timeline[1].session_id = 7;
        EXPECT_THROW(validate_dataset(bad), ValidationError);
    }
    {
        auto bad = ds;
        bad.users[0].timeline[0].gt_memory_required = !bad.users[0].timeline[0].gt_memory_required;
        EXPECT_THROW(validate_dataset(bad), ValidationError);
    }
    {
        auto bad = ds;
        bad.users[1].persona.id = bad.users[0].persona.id;
        EXPECT_THROW(validate_dataset(bad), ValidationError);
    }
    {
        auto bad = ds;
        bad.users[0].references[0].t_target = 999;
        EXPECT_THROW(validate_dataset(bad), ValidationError);
    }
    EXPECT_THROW(parse_dataset("{\"variant\": \"static\""), ParseError);
}

TEST(Horizons, OngoingEndsWithProjectProfileWithTimeline) {
    UserRecord u;
    u.persona = {"u", "someone", {}};
    for (int i = 1; i <= 6; ++i) {
        Session s = make_session(i, "Language Learning", {"hi"});
        if (i <= 3) s.project = "p1";
        u.timeline.push_back(s);
    }
    ReferenceMemory a{"a", ReferenceKind::ongoing_state, "chose textbook", {}, {}, 1, {}, "p1", {}};
    ReferenceMemory b{"b", ReferenceKind::user_profile, "likes kanji", {}, {}, 2, {}, {}, "c"};
    ReferenceMemory c{"c", ReferenceKind::user_profile, "now likes kana", {}, {}, 5, {}, {}, {}};
    u.references = {a, b, c};
    compute_retention_horizons(u);
    EXPECT_EQ(u.references[0].target(), 3);
    EXPECT_EQ(u.references[1].target(), 4);
    EXPECT_EQ(u.references[2].target(), 6);
    auto again = u;
    compute_retention_horizons(again);
    EXPECT_EQ(again, u);

    u.references[2].superseded_by = "b";
    EXPECT_THROW(compute_retention_horizons(u), ValidationError);
}

TEST(Stats, SummaryOfSample) {
    const auto ds = load_dataset(source_path("data/minimal_dataset.json"));
    const auto j = to_json(dataset_stats(ds));
    EXPECT_TRUE(j.is_object());
    const auto s = summarize({1, 2, 3, 6});
    EXPECT_DOUBLE_EQ(s.min, 1);
    EXPECT_DOUBLE_EQ(s.max, 6);
    EXPECT_DOUBLE_EQ(s.avg, 3);
}
