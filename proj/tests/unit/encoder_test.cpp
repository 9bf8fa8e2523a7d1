// Copyright 2026 The evseg Authors.
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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "evseg/corpus_io.hpp"
#include "evseg/embedding.hpp"
#include "evseg/encoder.hpp"
#include "support/builders.hpp"

namespace evseg {
namespace {

namespace fs = std::filesystem;

fs::path fixture(const std::string& name) {
  const char* dir = std::getenv("EVSEG_FIXTURES");
  return fs::path(dir ? dir : "tests/fixtures") / name;
}

Document sample_doc() {
  Document doc = testing::make_doc(2, {{1, 0, 1}, {2, 1, 3}, {3, 1, 0}});
  doc.sentences[0].tokens[1] = {"Attacked", "VERB"};
  doc.sentences[1].tokens[3] = {"attacked", "VERB"};
  return doc;
}

TEST(PairEncoder, LayoutIsConcatProductDifference) {
  BuiltinEncoder enc({8, 1, 0});
  Eigen::VectorXd a(2), b(2);
  a << 1.0, -2.0;
  b << 3.0, 0.5;
  auto v = enc.encode_pair(a, b);
  ASSERT_EQ(v.size(), 8);
  Eigen::VectorXd expected(8);
  expected << 1.0, -2.0, 3.0, 0.5, 3.0, -1.0, -2.0, -2.5;
  EXPECT_EQ(v, expected);
}

TEST(BuiltinEncoder, DimensionsAndPos) {
  BuiltinEncoder enc({16, 2, 0});
  EXPECT_EQ(enc.event_dim(), 16u + kNumPosTags);
  EXPECT_EQ(enc.pair_dim(), 4 * (16u + kNumPosTags));
  auto doc = sample_doc();
  auto v = enc.event_vector(doc, 0);
  ASSERT_EQ(static_cast<std::size_t>(v.size()), enc.event_dim());
  auto verb = static_cast<Eigen::Index>(16 + *pos_index("VERB"));
  EXPECT_EQ(v[verb], 1.0);
  EXPECT_DOUBLE_EQ(v.tail(static_cast<Eigen::Index>(kNumPosTags)).sum(), 1.0);
}

TEST(BuiltinEncoder, BlocksAreUnitNorm) {
  BuiltinEncoder enc({32, 3, 7});
  auto doc = sample_doc();
  for (std::size_t i = 0; i < doc.events.size(); ++i) {
    auto v = enc.event_vector(doc, i);
    EXPECT_NEAR(v.head(16).norm(), 1.0, 1e-12);
    EXPECT_NEAR(v.segment(16, 16).norm(), 1.0, 1e-12);
  }
}

TEST(BuiltinEncoder, TriggerHashIgnoresCase) {
  BuiltinEncoder enc({32, 0, 0});
  auto doc = sample_doc();
  auto a = enc.event_vector(doc, 0);
  auto b = enc.event_vector(doc, testing::idx(doc, 2));
  EXPECT_EQ(a.head(16), b.head(16));
  // window 0 leaves the context block empty
  EXPECT_EQ(a.segment(16, 16).norm(), 0.0);
}

TEST(BuiltinEncoder, DeterministicPerSeed) {
  auto doc = sample_doc();
  BuiltinEncoder a({64, 3, 1}), b({64, 3, 1});
  EXPECT_EQ(a.event_vector(doc, 2), b.event_vector(doc, 2));
}

TEST(BuiltinEncoder, RejectsTinyHash) {
  try {
    BuiltinEncoder enc({1, 3, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(Embeddings, WriteReadRoundTrip) {
  EmbeddingTable t;
  t.dim = 3;
  t.vectors[{"d2", 5}] = {1.5f, -0.25f, 3.0f};
  t.vectors[{"d1", -1}] = {0.0f, 1e-7f, -2.0f};
  std::stringstream s;
  write_embeddings(s, t);
  auto back = read_embeddings(s);
  EXPECT_EQ(back.dim, 3u);
  EXPECT_EQ(back.vectors, t.vectors);
}

TEST(Embeddings, EmptyFile) {
  EmbeddingTable t;
  t.dim = 1024;
  std::stringstream s;
  write_embeddings(s, t);
  EXPECT_EQ(s.str().size(), 24u);
  auto back = read_embeddings(s);
  EXPECT_EQ(back.dim, 1024u);
  EXPECT_TRUE(back.vectors.empty());
}

TEST(Embeddings, SizeArithmetic) {
  EmbeddingTable t;
  t.dim = 1024;
  for (std::int64_t e = 1; e <= 3; ++e) t.vectors[{"doc", e}] = std::vector<float>(1024, 0.5f);
  std::stringstream s;
  write_embeddings(s, t);
  // header + 3 index entries of (4 + 3 + 8 + 8) bytes + 3 x 1024 floats
  EXPECT_EQ(s.str().size(), 24u + 3u * 23u + 3u * 1024u * 4u);
}

std::string valid_bytes() {
  EmbeddingTable t;
  t.dim = 2;
  t.vectors[{"d", 1}] = {1.0f, 2.0f};
  t.vectors[{"d", 2}] = {3.0f, 4.0f};
  std::stringstream s;
  write_embeddings(s, t);
  return s.str();
}

void expect_parse_error(const std::string& bytes) {
  std::stringstream s(bytes);
  try {
    read_embeddings(s);
    FAIL() << "accepted a malformed file";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
  }
}

TEST(Embeddings, RejectsMalformed) {
  auto good = valid_bytes();
  auto bad_magic = good;
  bad_magic[0] = 'X';
  expect_parse_error(bad_magic);
  auto bad_version = good;
  bad_version[8] = 2;
  expect_parse_error(bad_version);
  expect_parse_error(good.substr(0, good.size() - 1));
  expect_parse_error(good + "x");
  // second index entry: 24 header + 21 first entry + 4 + 1 + 8 -> offset field
  auto misaligned = good;
  misaligned[24 + 21 + 13] = 3;
  expect_parse_error(misaligned);
  auto duplicate = good;
  duplicate[24 + 21 + 5] = 1;  // event id 2 -> 1
  expect_parse_error(duplicate);
}

TEST(Embeddings, WriterRejectsWrongDimension) {
  EmbeddingTable t;
  t.dim = 2;
  t.vectors[{"d", 1}] = {1.0f};
  std::stringstream s;
  EXPECT_THROW(write_embeddings(s, t), Error);
}

TEST(Embeddings, LoadsCheckedInExport) {
  auto table = read_embeddings(fixture("two_docs.emb"));
  auto corpus = parse_corpus(fixture("two_docs.jsonl"));
  std::size_t events = 0;
  for (const auto& doc : corpus.documents) events += doc.events.size();
  EXPECT_EQ(table.dim, 4u);
  EXPECT_EQ(table.vectors.size(), events);
  // The fixture stores event e of document d as base(d) + e + [0, 1/8, 2/8, 3/8].
  const auto* v = table.find("beta", 11);
  ASSERT_NE(v, nullptr);
  EXPECT_EQ(*v, (std::vector<float>{21.0f, 21.125f, 21.25f, 21.375f}));
  v = table.find("alpha", 2);
  ASSERT_NE(v, nullptr);
  EXPECT_EQ(*v, (std::vector<float>{2.0f, 2.125f, 2.25f, 2.375f}));

  ExternalEncoder enc(table);
  EXPECT_NO_THROW(enc.check_coverage(corpus));
  const auto& alpha = corpus.documents[0];
  auto pair = enc.encode_pair(alpha, 0, 2);
  ASSERT_EQ(pair.size(), 16);
  EXPECT_EQ(pair[0], 1.0);
  EXPECT_EQ(pair[4], 3.0);
  EXPECT_EQ(pair[8], 3.0);
  EXPECT_EQ(pair[12], -2.0);

  std::stringstream s;
  write_embeddings(s, table);
  EXPECT_EQ(read_embeddings(s).vectors, table.vectors);
}

TEST(ExternalEncoder, MissingVectorIsLookupError) {
  EmbeddingTable t;
  t.dim = 2;
  t.vectors[{"doc", 1}] = {1.0f, 2.0f};
  ExternalEncoder enc(t);
  auto doc = testing::make_doc(1, {{1, 0, 0}, {2, 0, 2}});
  EXPECT_NO_THROW(enc.event_vector(doc, 0));
  try {
    enc.event_vector(doc, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLookup);
    EXPECT_NE(std::string(e.what()).find("event 2"), std::string::npos);
  }
  Corpus c;
  c.documents.push_back(doc);
  EXPECT_THROW(enc.check_coverage(c), Error);
}

}  // namespace
}  // namespace evseg
