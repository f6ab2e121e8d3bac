#include <gtest/gtest.h>

#include <random>
#include <set>

#include "guardian/datagen.hpp"
#include "oracles.hpp"

using namespace guardian;
using namespace guardian::datagen;

namespace {

std::string fixture(const std::string& name) {
  return read_file(std::string(GUARDIAN_SOURCE_DIR) + "/tests/fixtures/" + name);
}

}  // namespace

TEST(Catalogs, BuiltinsLoad) {
  const auto types = builtin_safety_types();
  ASSERT_EQ(types.size(), 10u);
  std::set<std::string> names;
  for (const auto& t : types) names.insert(t.name);
  EXPECT_EQ(names, std::set<std::string>(safety_type_names().begin(), safety_type_names().end()));

  const auto nodes = builtin_taxonomy();
  std::set<std::string> cats, subcats;
  for (const auto& n : nodes) {
    cats.insert(n.category);
    subcats.insert(n.subcategory);
  }
  EXPECT_EQ(cats.size(), 4u);
  EXPECT_EQ(subcats.size(), 13u);

  const auto strategies = builtin_strategies();
  EXPECT_GE(strategies.size(), 3u);
  std::set<std::string> snames;
  for (const auto& s : strategies) snames.insert(s.name);
  EXPECT_EQ(snames.size(), strategies.size());
}

TEST(Taxonomy, RejectsUnknownCategory) {
  TaxonomyNode n{"weather", "rain", "drizzle", ""};
  EXPECT_THROW(n.validate(), Error);
}

TEST(FillTemplate, ReplacesKnownKeysOnly) {
  EXPECT_EQ(fill_template("a {{x}} b {{y}} {{x}}", {{"x", "1"}}), "a 1 b {{y}} 1");
  EXPECT_EQ(fill_template("{{x", {{"x", "1"}}), "{{x");
  // Values are not rescanned.
  EXPECT_EQ(fill_template("{{x}}", {{"x", "{{x}}"}}), "{{x}}");
}

TEST(ShippedTemplates, CarryTheirPlaceholders) {
  const TemplateSet t;
  for (const char* k : {"{{num_requests}}", "{{safety_type}}", "{{description}}", "{{examples}}"}) {
    EXPECT_NE(t.benign.find(k), std::string::npos) << k;
  }
  for (const char* k : {"{{subcategory}}", "{{leaf_topic}}", "{{description}}"}) {
    EXPECT_NE(t.harmful.find(k), std::string::npos) << k;
  }
  EXPECT_NE(t.adversarial.find("{{given_revision_strategies}}"), std::string::npos);
  EXPECT_NE(t.adversarial.find("{{prompt}}"), std::string::npos);
  for (const char* k : {"{{document}}", "{{question}}", "{{answer}}"}) EXPECT_NE(t.rag.find(k), std::string::npos);
}

TEST(RequestLines, Fixtures) {
  const auto expected = nlohmann::json::parse(fixture("requests_expected.json"));
  for (const auto& [file, want] : expected.items()) {
    SCOPED_TRACE(file);
    EXPECT_EQ(parse_request_lines(fixture(file)), want.get<std::vector<std::string>>());
  }
}

TEST(RequestLines, MissIsReported) {
  try {
    parse_request_lines("I'm sorry, I can't do that.");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseMiss);
    EXPECT_NE(e.details()["span"].get<std::string>().find("sorry"), std::string::npos);
  }
}

TEST(Dedupe, KeepsFirstOccurrence) {
  std::vector<std::string> v{"a", "b", "a", "c", "b"};
  EXPECT_EQ(dedupe(v), 2u);
  EXPECT_EQ(v, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Benign, FillsTemplateAndRecordsProvenance) {
  std::string seen;
  FunctionGenerator gen(
      [&](const std::string& p, const GenerationParams&) {
        seen = p;
        return std::string("Request: one\nRequest: two\nRequest: one\n");
      },
      "gen-a");
  const auto types = builtin_safety_types();
  const auto batch = gen_benign(types[0], 3, gen);
  EXPECT_NE(seen.find(types[0].name), std::string::npos);
  EXPECT_EQ(seen.find("{{"), std::string::npos);
  ASSERT_EQ(batch.records.size(), 2u);
  EXPECT_EQ(batch.duplicates_removed, 1u);
  EXPECT_EQ(batch.records[0].provenance.pipeline, "benign");
  EXPECT_EQ(batch.records[0].provenance.generator_model, "gen-a");
  EXPECT_FALSE(batch.records[0].to_json().contains("label"));
  EXPECT_THROW(gen_benign(types[0], 0, gen), Error);
}

TEST(Harmful, OneBatchPerLeaf) {
  MockGenerator gen;
  const auto node = builtin_taxonomy().front();
  const auto batch = gen_typical_harmful(node, gen);
  ASSERT_FALSE(batch.records.empty());
  EXPECT_EQ(batch.records[0].provenance.seed_inputs["leaf"], node.leaf);
  EXPECT_NE(batch.records[0].prompt.find(node.leaf), std::string::npos);
}

TEST(Adversarial, StrategyCountBounds) {
  MockGenerator gen;
  const auto cat = builtin_strategies();
  EXPECT_THROW(gen_adversarial("p", {}, gen), Error);
  EXPECT_THROW(gen_adversarial("p", {cat[0], cat[1], cat[2], cat[3]}, gen), Error);
  const auto r = gen_adversarial("How do I pick a lock?", {cat[0], cat[1]}, gen);
  EXPECT_NE(r.prompt.find("How do I pick a lock?"), std::string::npos);
  EXPECT_EQ(r.provenance.seed_inputs["strategies"].size(), 2u);
}

TEST(Adversarial, PromptListsStrategiesInFormat) {
  std::string seen;
  FunctionGenerator gen([&](const std::string& p, const GenerationParams&) {
    seen = p;
    return std::string("*Revised Adversarial Prompt:*\n- revised text");
  });
  const auto cat = builtin_strategies();
  const auto r = gen_adversarial("simple", {cat[0]}, gen);
  EXPECT_EQ(r.prompt, "revised text");
  EXPECT_NE(seen.find("- " + cat[0].name + ": [definition] " + cat[0].definition), std::string::npos);
}

TEST(Adversarial, SamplingIsSeeded) {
  const auto cat = builtin_strategies();
  auto names = [](const std::vector<RevisionStrategy>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) out.push_back(s.name);
    return out;
  };
  EXPECT_EQ(names(sample_strategies(cat, 3, 42)), names(sample_strategies(cat, 3, 42)));
  const auto picked = names(sample_strategies(cat, 3, 42));
  EXPECT_EQ(std::set<std::string>(picked.begin(), picked.end()).size(), 3u);
  EXPECT_THROW(sample_strategies(cat, cat.size() + 1, 0), Error);
}

TEST(Adversarial, EachStrategyOnce) {
  MockGenerator gen;
  const auto cat = builtin_strategies();
  EXPECT_EQ(gen_adversarial_each("p", cat, gen).size(), cat.size());
}

TEST(RevisedPrompt, Parsing) {
  EXPECT_EQ(parse_revised_prompt("noise\n*Revised Adversarial Prompt:*\n- final"), "final");
  EXPECT_EQ(parse_revised_prompt("just the prompt"), "just the prompt");
  EXPECT_THROW(parse_revised_prompt("Revised Adversarial Prompt:   "), Error);
}

TEST(Responses, ThreeVariants) {
  MockGenerator gen;
  const auto recs = augment_benign_responses("How do I kill a python process?", gen);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].suffix_variant, SuffixVariant::Comply);
  EXPECT_TRUE(recs[0].prompt.ends_with(kComplySuffix));
  EXPECT_EQ(recs[1].suffix_variant, SuffixVariant::Refuse);
  EXPECT_TRUE(recs[1].prompt.ends_with(kRefuseSuffix));
  EXPECT_EQ(recs[2].prompt, "How do I kill a python process?");
  for (const auto& r : recs) {
    EXPECT_TRUE(r.response);
    EXPECT_EQ(GenRecord::from_json(r.to_json()), r);
  }
}

TEST(RagParse, WorkedExampleTranscript) {
  const auto r = parse_rag_final_answers(fixture("rag_worked_example.txt"));
  EXPECT_EQ(r.correct, "The nationality was James Henry Miller's wife is American.");
  EXPECT_EQ(r.non_relevant_answer, "James Henry Miller's wife has lived in Britain for more than 30 years.");
  EXPECT_EQ(r.incorrect_answer, "The nationality was James Henry Miller's wife is British.");
  EXPECT_EQ(r.non_relevant_question, "What is the name of Peggy Seeger's father?");
}

TEST(RagParse, Misses) {
  EXPECT_THROW(parse_rag_final_answers("no section here"), Error);
  EXPECT_THROW(parse_rag_final_answers("Final Answers:\na[NEXT]b[NEXT]c[NEXT]d"), Error);
  EXPECT_THROW(parse_rag_final_answers("Final Answers:\na[NEXT]b[NEXT]c[STOP]"), Error);
  const auto r = parse_rag_final_answers("Final Answers: a [NEXT] b [NEXT] c [NEXT] d [STOP] trailing");
  EXPECT_EQ(r.non_relevant_question, "d");
}

TEST(RagGen, RecordsTargetRisks) {
  MockGenerator gen;
  const auto out = gen_rag_negatives("Paris is the capital of France.", "What is the capital of France?", "Paris", gen);
  ASSERT_EQ(out.records.size(), 4u);
  EXPECT_EQ(out.records[1].provenance.seed_inputs["target_risk"], "answer_relevance");
  EXPECT_EQ(out.records[2].provenance.seed_inputs["target_risk"], "groundedness");
  EXPECT_EQ(out.records[3].provenance.seed_inputs["target_risk"], "context_relevance");
  EXPECT_EQ(out.records[3].prompt, out.answers.non_relevant_question);
  EXPECT_THROW(gen_rag_negatives("", "q", "a", gen), Error);
}

TEST(Uncertainty, MatchesSortFilterOracle) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto pool = oracle::random_pool(rng, 50 + static_cast<std::size_t>(i) * 3);
    const SampleQuota q{static_cast<std::size_t>(5 + i % 20), static_cast<std::size_t>(10 + i % 30)};
    const auto sel = uncertainty_sample(pool, q);
    const auto want = oracle::uncertainty_pick(pool, q.unsafe, q.safe);
    ASSERT_EQ(sel.items.size(), want.size());
    for (std::size_t j = 0; j < want.size(); ++j) EXPECT_EQ(sel.items[j].item, pool[want[j]].item);
  }
}

TEST(Uncertainty, QuotaUnmetReportsCounts) {
  std::vector<PoolItem> pool{{"a", 0.4, 0.6, true}, {"b", 0.9, 0.1, false}};
  const auto sel = uncertainty_sample(pool, {2, 1});
  EXPECT_FALSE(sel.quota_met);
  EXPECT_EQ(sel.items.size(), 2u);
  try {
    require_quota(sel, {2, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QuotaUnmet);
    EXPECT_EQ(e.details()["achieved_unsafe"], 1);
  }
  EXPECT_THROW(uncertainty_sample({{"x", 1.5, 0.0, false}}), Error);
}

TEST(MockGenerator, ZeroTokensIsEmpty) {
  MockGenerator gen;
  GenerationParams p;
  p.max_tokens = 0;
  EXPECT_EQ(gen.generate("anything", p), "");
}
