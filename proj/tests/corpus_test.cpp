// Copyright 2026 The seqal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "seqal/corpus.hpp"

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "seqal/synthetic.hpp"

namespace seqal {
namespace {

const char* kTrump =
    "Trump\tB-PER\nwas\tO\nborn\tO\nin\tO\nthe\tB-LOC\nUnited\tI-LOC\nStates\tI-LOC\n";

TEST(TagTest, ParsesValidForms) {
  EXPECT_TRUE(Tag::parse("O")->is_outside());
  EXPECT_EQ(Tag::parse("B-PER")->type(), "PER");
  EXPECT_TRUE(Tag::parse("I-WORK_OF_ART")->is_inside());
  EXPECT_FALSE(Tag::parse("B-"));
  EXPECT_FALSE(Tag::parse("X-PER"));
  EXPECT_FALSE(Tag::parse("BPER"));
  EXPECT_FALSE(Tag::parse("o"));
}

TEST(ParseConllTest, SingleSentence) {
  auto d = parse_conll_string(kTrump);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.sentences[0].id, 0);
  EXPECT_EQ(d.sentences[0].size(), 7u);
  EXPECT_EQ(d.schema, (std::vector<std::string>{"PER", "LOC"}));
}

TEST(ParseConllTest, EmptyInput) {
  auto d = parse_conll_string("");
  EXPECT_TRUE(d.empty());
  EXPECT_TRUE(d.schema.empty());
}

TEST(ParseConllTest, OneColumnLineIsParseErrorAtLine1) {
  try {
    parse_conll_string("foo\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(ParseConllTest, ThreeColumnsRejected) {
  EXPECT_THROW(parse_conll_string("a\tO\n\nb\tO\tx\n"), ParseError);
}

TEST(ParseConllTest, InvalidTransitionNamesSentenceAndPosition) {
  try {
    parse_conll_string("a\tO\n\nb\tO\nc\tI-PER\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.sentence_id(), 1);
    EXPECT_EQ(e.position(), 1u);
  }
}

TEST(ParseConllTest, RepairMapsOrphanInsideToBegin) {
  ParseOptions opts;
  opts.repair = true;
  auto d = parse_conll_string("b\tO\nc\tI-PER\nd\tI-PER\ne\tI-LOC\n", opts);
  EXPECT_EQ(d.sentences[0].tags[1], Tag::begin("PER"));
  EXPECT_EQ(d.sentences[0].tags[2], Tag::inside("PER"));
  EXPECT_EQ(d.sentences[0].tags[3], Tag::begin("LOC"));
}

TEST(RepairTest, Idempotent) {
  std::mt19937_64 gen(3);
  const std::vector<Tag> alphabet{Tag::outside(), Tag::begin("A"), Tag::inside("A"), Tag::begin("B"),
                                  Tag::inside("B")};
  for (int trial = 0; trial < 200; ++trial) {
    TagSequence tags;
    for (int i = 0; i < 8; ++i) tags.push_back(alphabet[gen() % alphabet.size()]);
    auto once = repair_bio(tags);
    EXPECT_TRUE(is_valid_bio(once));
    EXPECT_EQ(repair_bio(once), once);
    if (is_valid_bio(tags)) {
      EXPECT_EQ(once, tags);
    }
  }
}

TEST(SerializeConllTest, RendersLinesAndTrailingBlank) {
  auto d = parse_conll_string(kTrump);
  EXPECT_EQ(serialize_conll(d), std::string(kTrump) + "\n");
  EXPECT_EQ(serialize_conll(Dataset{}), "");
}

TEST(SerializeConllTest, RoundTripOnRandomDatasets) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    SyntheticConfig cfg;
    cfg.n_sentences = 1 + gen() % 30;
    cfg.types = {{"A", 1.0 + gen() % 5}, {"B_C", 1.0}, {"x", 0.5}};
    cfg.seed = gen();
    cfg.max_entity_length = 1 + gen() % 4;
    auto d = generate_synthetic(cfg);
    EXPECT_EQ(parse_conll_string(serialize_conll(d)), d);
  }
}

TEST(ExtractEntitiesTest, VisitingSentenceTags) {
  auto d = parse_conll_string(kTrump);
  auto spans = extract_entities(d.sentences[0].tags);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0], (EntitySpan{"PER", 0, 0}));
  EXPECT_EQ(spans[1], (EntitySpan{"LOC", 4, 6}));
}

TEST(ExtractEntitiesTest, NoEntitiesAndAdjacentSpans) {
  EXPECT_TRUE(extract_entities(TagSequence(3, Tag::outside())).empty());
  auto spans = extract_entities(TagSequence{Tag::begin("PER"), Tag::begin("PER")});
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0], (EntitySpan{"PER", 0, 0}));
  EXPECT_EQ(spans[1], (EntitySpan{"PER", 1, 1}));
}

TEST(ExtractEntitiesTest, InvalidSequenceThrows) {
  EXPECT_THROW(extract_entities(TagSequence{Tag::outside(), Tag::inside("A")}), ValidationError);
}

TEST(ExtractEntitiesTest, SpansCoverExactlyNonOutsidePositions) {
  SyntheticConfig cfg;
  cfg.n_sentences = 300;
  cfg.types = {{"A", 3}, {"B", 1}};
  cfg.max_entity_length = 4;
  for (const auto& s : generate_synthetic(cfg).sentences) {
    auto spans = extract_entities(s.tags);
    std::vector<bool> covered(s.size(), false);
    std::size_t last_end = 0;
    for (std::size_t k = 0; k < spans.size(); ++k) {
      if (k) {
        EXPECT_GT(spans[k].start, last_end);
      }
      last_end = spans[k].end;
      for (auto i = spans[k].start; i <= spans[k].end; ++i) {
        EXPECT_FALSE(covered[i]);
        covered[i] = true;
      }
    }
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(covered[i], !s.tags[i].is_outside());
  }
}

TEST(DatasetStatsTest, HandCountedTwoSentences) {
  auto d = parse_conll_string(std::string(kTrump) + "\nx\tO\ny\tO\nz\tO\n");
  auto st = dataset_stats(d);
  EXPECT_EQ(st.n_sentences, 2u);
  EXPECT_EQ(st.n_tokens, 10u);
  EXPECT_EQ(st.n_entity_types, 2u);
  EXPECT_DOUBLE_EQ(st.avg_sentence_len, 5.0);
  EXPECT_DOUBLE_EQ(st.avg_entities_per_sentence, 1.0);
  EXPECT_DOUBLE_EQ(st.avg_entity_len, 2.0);
  EXPECT_DOUBLE_EQ(st.pct_positive_tokens, 0.4);
  EXPECT_DOUBLE_EQ(st.pct_sentences_with_entity, 0.5);
  EXPECT_DOUBLE_EQ(st.pct_sentences_with_2plus_entities, 0.5);
}

TEST(DatasetStatsTest, AllOutsideSentence) {
  auto st = dataset_stats(parse_conll_string("x\tO\ny\tO\n"));
  EXPECT_EQ(st.pct_positive_tokens, 0.0);
  EXPECT_EQ(st.pct_sentences_with_entity, 0.0);
  EXPECT_EQ(st.pct_sentences_with_2plus_entities, 0.0);
}

TEST(DatasetStatsTest, EmptyDatasetThrows) { EXPECT_THROW(dataset_stats(Dataset{}), Error); }

TEST(DatasetStatsTest, IdentitiesHoldOnGeneratedCorpora) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SyntheticConfig cfg;
    cfg.n_sentences = 200;
    cfg.types = {{"A", 2}, {"B", 1}, {"C", 0.3}};
    cfg.seed = seed;
    auto d = generate_synthetic(cfg);
    auto st = dataset_stats(d);
    std::size_t positive = 0;
    for (const auto& s : d.sentences)
      for (const auto& t : s.tags) positive += t.is_outside() ? 0 : 1;
    EXPECT_NEAR(st.avg_entities_per_sentence * static_cast<double>(st.n_sentences),
                static_cast<double>(st.n_entities), 1e-9);
    EXPECT_NEAR(st.avg_entity_len * static_cast<double>(st.n_entities), static_cast<double>(positive), 1e-9);
    EXPECT_LE(st.pct_sentences_with_2plus_entities, st.pct_sentences_with_entity);
  }
}

Dataset numbered(std::size_t n) {
  Dataset d;
  d.schema = {"A"};
  for (std::size_t i = 0; i < n; ++i) {
    d.sentences.push_back({static_cast<int>(i), {"w" + std::to_string(i)}, {Tag::outside()}});
  }
  return d;
}

std::set<int> ids_of(const Dataset& d) {
  std::set<int> out;
  for (const auto& s : d.sentences) out.insert(s.id);
  return out;
}

TEST(SplitTest, SizesAndDisjointness) {
  auto parts = split(numbered(100), 7, 10, 20);
  EXPECT_EQ(parts.labeled.size(), 10u);
  EXPECT_EQ(parts.pool.size(), 70u);
  EXPECT_EQ(parts.test.size(), 20u);
  std::set<int> all;
  for (auto* p : {&parts.labeled, &parts.pool, &parts.test}) {
    for (int id : ids_of(*p)) EXPECT_TRUE(all.insert(id).second);
  }
  EXPECT_EQ(all.size(), 100u);
}

TEST(SplitTest, DeterministicPerSeedAndSeedSensitive) {
  auto a = split(numbered(100), 7, 10, 20);
  auto b = split(numbered(100), 7, 10, 20);
  auto c = split(numbered(100), 8, 10, 20);
  EXPECT_EQ(a.labeled, b.labeled);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(ids_of(a.labeled), ids_of(c.labeled));
}

TEST(SplitTest, DisjointForManySeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto p = split(numbered(37), seed, 5, 9);
    std::set<int> all = ids_of(p.labeled);
    for (int id : ids_of(p.pool)) EXPECT_TRUE(all.insert(id).second);
    for (int id : ids_of(p.test)) EXPECT_TRUE(all.insert(id).second);
    EXPECT_EQ(all.size(), 37u);
  }
}

TEST(SplitTest, CountsExceedingCorpusThrow) { EXPECT_THROW(split(numbered(10), 1, 6, 5), Error); }

TEST(SyntheticTest, RealizedProportionTracksWeights) {
  SyntheticConfig cfg;
  cfg.n_sentences = 1000;
  cfg.types = {{"A", 0.8}, {"B", 0.2}};
  cfg.seed = 5;
  auto d = generate_synthetic(cfg);
  std::size_t a = 0, total = 0;
  for (const auto& s : d.sentences) {
    for (const auto& e : extract_entities(s.tags)) {
      ++total;
      a += e.type == "A";
    }
  }
  ASSERT_GT(total, 0u);
  EXPECT_NEAR(static_cast<double>(a) / static_cast<double>(total), 0.8, 0.03);
}

TEST(SyntheticTest, ZeroSentencesErrorsUnlessAllowed) {
  SyntheticConfig cfg;
  cfg.types = {{"A", 1}};
  cfg.n_sentences = 0;
  EXPECT_THROW(generate_synthetic(cfg), ConfigError);
  cfg.allow_empty = true;
  EXPECT_TRUE(generate_synthetic(cfg).empty());
}

TEST(SyntheticTest, SameSeedIsByteIdentical) {
  SyntheticConfig cfg;
  cfg.types = {{"A", 1}, {"B", 2}};
  cfg.n_sentences = 200;
  cfg.seed = 42;
  EXPECT_EQ(serialize_conll(generate_synthetic(cfg)), serialize_conll(generate_synthetic(cfg)));
  cfg.seed = 43;
  auto other = serialize_conll(generate_synthetic(cfg));
  cfg.seed = 42;
  EXPECT_NE(serialize_conll(generate_synthetic(cfg)), other);
}

TEST(SyntheticTest, RejectsBadConfig) {
  SyntheticConfig cfg;
  EXPECT_THROW(generate_synthetic(cfg), ConfigError);  // empty schema
  cfg.types = {{"A", 0.0}};
  EXPECT_THROW(generate_synthetic(cfg), ConfigError);
}

TEST(SyntheticTest, ConfigFileKeys) {
  auto kv = KeyValueConfig::from_string("n_sentences = 12\ntypes = A:3, B:1\nseed = 9\n");
  auto cfg = synthetic_config_from(kv);
  EXPECT_EQ(cfg.n_sentences, 12u);
  ASSERT_EQ(cfg.types.size(), 2u);
  EXPECT_EQ(cfg.types[1].name, "B");
  EXPECT_DOUBLE_EQ(cfg.types[0].weight, 3.0);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_NO_THROW(validate(generate_synthetic(cfg)));
}

}  // namespace
}  // namespace seqal
