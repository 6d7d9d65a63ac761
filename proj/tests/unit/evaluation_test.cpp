#include <gtest/gtest.h>

#include "permem/permem.hpp"
#include "support/fixtures.hpp"
#include "support/mini_benchmark.hpp"

using namespace permem;
using namespace permem::testing;

TEST(Checkpoints, ShortWindowsAreEnumerated) {
    EXPECT_EQ(sample_checkpoints(3, 7, 20), (std::vector<int>{3, 4, 5, 6, 7}));
    EXPECT_EQ(sample_checkpoints(5, 5, 20), (std::vector<int>{5}));
}

TEST(Checkpoints, EvenSpacingKeepsEnds) {
    // |S| = 9, K = 3: indices round(0), round(4), round(8)
    EXPECT_EQ(sample_checkpoints(1, 9, 3), (std::vector<int>{1, 5, 9}));
    // |S| = 40, K = 20: every index i*39/19 rounded
    const auto cps = sample_checkpoints(1, 40, 20);
    ASSERT_EQ(cps.size(), 20u);
    EXPECT_EQ(cps.front(), 1);
    EXPECT_EQ(cps.back(), 40);
    EXPECT_EQ(cps[1], 3);   // 1 + round(39/19 = 2.05)
    EXPECT_EQ(cps[10], 22);  // 1 + round(20.53)
    EXPECT_THROW(sample_checkpoints(4, 3, 20), ValidationError);
}

TEST(Retention, PresentAtOneThreeFiveOfFive) {
    const std::vector<RetentionWindow> w = {{"r", 1, 5}};
    const auto res = retention_rate(w, 20, [](std::size_t, int t) { return std::optional<bool>(t % 2 == 1); });
    EXPECT_DOUBLE_EQ(res.rr, 3.0 / 5.0);
    EXPECT_DOUBLE_EQ(res.numerator, 3.0);
    EXPECT_DOUBLE_EQ(res.denominator, 5.0);
}

TEST(Retention, PoolsWindowsByLength) {
    // window 10 fully present, window 5 absent: 10 / 15
    const std::vector<RetentionWindow> w = {{"a", 1, 10}, {"b", 6, 10}};
    const auto res = retention_rate(w, 20, [](std::size_t i, int) { return std::optional<bool>(i == 0); });
    EXPECT_NEAR(res.rr, 2.0 / 3.0, 1e-12);
}

TEST(Retention, JudgeFailuresShrinkKr) {
    const std::vector<RetentionWindow> w = {{"a", 1, 4}, {"b", 1, 4}};
    const auto res = retention_rate(w, 20, [](std::size_t i, int t) -> std::optional<bool> {
        if (i == 1) return std::nullopt;  // b never evaluable: excluded
        if (t == 2) return std::nullopt;
        return t != 4;
    });
    // a: evaluated {1,3,4}, present {1,3}: weighted 4/3*2
    EXPECT_NEAR(res.numerator, 8.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(res.denominator, 4.0);
    EXPECT_EQ(res.references[1].evaluated, 0u);
    EXPECT_TRUE(res.defined);
    const auto none = retention_rate(std::vector<RetentionWindow>{{"b", 1, 4}}, 20,
                                     [](std::size_t, int) -> std::optional<bool> { return std::nullopt; });
    EXPECT_FALSE(none.defined);
}

TEST(Indicator, TopTenCutoffHidesDistantFact) {
    ScriptedMock emb({}, 16);
    MemoryBank bank(emb, 100);
    const std::string fact = "user owns a red kayak";
    bank.insert(fact + " and paddles weekly", 1);
    // Decoys identical to the query embed at similarity 1 and outrank the fact entry.
    for (int i = 0; i < 10; ++i) bank.insert(fact, 1);
    const auto snap = bank.snapshot();
    SubstringJudge judge;
    EXPECT_TRUE(indicator(fact, emb.embed(fact), snap, judge, 10));
    // A judge that only accepts the long entry cannot see it within top 10.
    class LongOnly final : public PresenceJudge {
    public:
        bool judge(std::string_view, std::span<const ScoredEntry> r) override {
            for (const auto& e : r)
                if (e.entry.text.find("paddles") != std::string::npos) return true;
            return false;
        }
    } long_only;
    EXPECT_FALSE(indicator(fact, emb.embed(fact), snap, long_only, 10));
    EXPECT_TRUE(indicator(fact, emb.embed(fact), snap, long_only, 11));
}

TEST(Indicator, BackendJudgeRetriesThenFailsCheckpoint) {
    PromptSet prompts;
    ScriptedMock yes({{"", "Fact to find", MockRule::Scope::all, {"maybe", "YES."}}});
    BackendJudge j(yes, prompts, "m");
    MemoryEntry e;
    e.text = "x";
    std::vector<ScoredEntry> r = {{e, 1.0}};
    EXPECT_TRUE(j.judge("x", r));
    ScriptedMock junk({{"", "Fact to find", MockRule::Scope::all, {"perhaps"}}});
    BackendJudge k(junk, prompts, "m");
    EXPECT_THROW(k.judge("x", r), TransportError);
}

TEST(Retention, EvaluateUserNeedsSnapshots) {
    ScriptedMock emb;
    SubstringJudge judge;
    std::vector<ReferenceMemory> refs = {{"r", ReferenceKind::user_profile, "fact", {}, {}, 1, 3, {}, {}}};
    std::map<int, BankSnapshot> snaps;
    EXPECT_THROW(evaluate_user_retention(refs, snaps, emb, judge, {}), ValidationError);
    MemoryBank bank(emb, 5);
    bank.insert("the fact", 1);
    for (int t = 1; t <= 3; ++t) snaps[t] = bank.snapshot();
    EXPECT_DOUBLE_EQ(evaluate_user_retention(refs, snaps, emb, judge, {}).result.rr, 1.0);
    for (int t = 1; t <= 3; ++t) snaps[t].entries.clear();
    EXPECT_DOUBLE_EQ(evaluate_user_retention(refs, snaps, emb, judge, {}).result.rr, 0.0);
}

TEST(Metrics, WorkedExample) {
    // TP=3, FP=1, FN=1, TN=5
    std::vector<bool> pred = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    std::vector<bool> gold = {1, 1, 1, 0, 1, 0, 0, 0, 0, 0};
    const auto m = metrics_from_counts(confusion(pred, gold));
    EXPECT_DOUBLE_EQ(*m.f1, 0.75);
    EXPECT_DOUBLE_EQ(*m.fnr, 0.25);
    EXPECT_DOUBLE_EQ(*m.fpr, 1.0 / 6.0);
}

TEST(Metrics, UndefinedRatesAndAverages) {
    const auto all_pos = metrics_from_counts({2, 0, 0, 0});
    EXPECT_FALSE(all_pos.fpr);
    EXPECT_DOUBLE_EQ(*all_pos.f1, 1.0);
    const auto nothing = metrics_from_counts({0, 0, 0, 3});
    EXPECT_FALSE(nothing.f1);
    EXPECT_FALSE(nothing.fnr);
    std::vector<GatingMetrics> users = {all_pos, metrics_from_counts({1, 1, 1, 1})};
    const auto macro = macro_average(users);
    EXPECT_DOUBLE_EQ(*macro.fpr, 0.5);  // undefined value skipped
    const auto micro = micro_average(users);
    EXPECT_EQ(micro.counts.tp, 3u);
    EXPECT_DOUBLE_EQ(*micro.f1, 6.0 / 8.0);
    EXPECT_EQ(rate_json(std::nullopt), "undefined");
}

TEST(Metrics, GatingMetricsRequiresMatchingSessions) {
    EXPECT_THROW(gating_metrics({{1, true}}, {{2, true}}), ValidationError);
    EXPECT_THROW(gating_metrics({{1, true}}, {{1, true}, {2, false}}), ValidationError);
    EXPECT_EQ(gating_metrics({{1, true}, {2, false}}, {{1, true}, {2, true}}).counts.fn, 1u);
}

TEST(Jaccard, WorkedExample) {
    const std::string a = "Travel Planning", b = "Language Learning", c = "Writing Assistant";
    // {(a,1),(b,0)} vs {(a,1),(c,1)}: |∩|=1, |∪|=3
    const auto p1 = make_profile("1", {{a, active(Frequency::high, true)}, {b, active(Frequency::low, false)}}, {a, b});
    const auto p2 = make_profile("2", {{a, active(Frequency::high, true)}, {c, active(Frequency::low, true)}}, {a, c});
    EXPECT_NEAR(jaccard(profile_features(p1), profile_features(p2)), 1.0 / 3.0, 1e-12);
    const auto e = make_profile("3", {});
    const std::vector<AgentUseProfile> ps = {p1, p2, e, e};
    const auto an = profile_jaccard(ps);
    EXPECT_DOUBLE_EQ(an.matrix[2][3], 1.0);
    EXPECT_EQ(an.empty_pairs.size(), 1u);
    EXPECT_DOUBLE_EQ(an.matrix[0][0], 1.0);
    EXPECT_THROW(profile_jaccard(std::vector<AgentUseProfile>{p1}), ValidationError);
}

TEST(MiniBenchmark, OracleBeatsUniversalUnderTightBudget) {
    const auto ds = mini_benchmark();
    const auto o10 = mini_evaluate(ds, "oracle", 10), u10 = mini_evaluate(ds, "universal", 10);
    const auto o100 = mini_evaluate(ds, "oracle", 100), u100 = mini_evaluate(ds, "universal", 100);
    EXPECT_GT(o10.pooled.rr - u10.pooled.rr, 0.0);
    EXPECT_GT(o10.pooled.rr - u10.pooled.rr, o100.pooled.rr - u100.pooled.rr);
    EXPECT_DOUBLE_EQ(*o10.micro.f1, 1.0);
    EXPECT_DOUBLE_EQ(*o10.micro.fpr, 0.0);
}
