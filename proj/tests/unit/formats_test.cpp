// Copyright 2026 The diarkit Authors
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

#include <cmath>
#include <filesystem>

#include "diarkit/error.hpp"
#include "diarkit/formats.hpp"
#include "diarkit/rng.hpp"
#include "oracles.hpp"

using namespace diarkit;

namespace {

const char* kLine = "SPEAKER rec1 1 0.50 2.00 <NA> <NA> spkA <NA> <NA>";

template <typename E, typename Fn>
std::string message_of(Fn&& fn) {
  try {
    fn();
  } catch (const E& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected exception";
  return {};
}

}  // namespace

TEST(Rttm, ParsesFieldsByPosition) {
  const auto set = parse_rttm(kLine);
  ASSERT_EQ(set.size(), 1u);
  const auto& a = set.at("rec1");
  ASSERT_EQ(a.turns.size(), 1u);
  EXPECT_EQ(a.turns[0], (Turn{"rec1", 0.5, 2.0, "spkA"}));
}

TEST(Rttm, EmptyInput) {
  EXPECT_TRUE(parse_rttm("").empty());
  EXPECT_TRUE(parse_rttm("\n\n  \n").empty());
  EXPECT_EQ(write_rttm({}), "");
}

TEST(Rttm, NegativeDurationIsValidationError) {
  EXPECT_THROW(parse_rttm("SPEAKER rec1 1 0.50 -1.0 <NA> <NA> spkA <NA> <NA>"),
               ValidationError);
  EXPECT_THROW(parse_rttm("SPEAKER rec1 1 0.50 0 <NA> <NA> spkA <NA> <NA>"),
               ValidationError);
}

TEST(Rttm, MalformedLinesNameTheLine) {
  const std::string text = std::string(kLine) + "\nSPEAKER rec1 1 0.5 2.0\n";
  const auto msg = message_of<ParseError>([&] { parse_rttm(text); });
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_THROW(parse_rttm("LEXEME rec1 1 0.50 2.00 <NA> <NA> spkA <NA> <NA>"),
               ParseError);
  EXPECT_THROW(parse_rttm("SPEAKER rec1 1 abc 2.00 <NA> <NA> spkA <NA> <NA>"),
               ParseError);
  EXPECT_THROW(parse_rttm("SPEAKER rec1 1 0.5 nan <NA> <NA> spkA <NA> <NA>"),
               UsageError);
}

TEST(Rttm, WriteUsesThreeDecimals) {
  AnnotationSet set;
  set["rec1"] = Annotation{"rec1", {{"rec1", 0.5, 2.0, "spkA"}}};
  EXPECT_EQ(write_rttm(set), "SPEAKER rec1 1 0.500 2.000 <NA> <NA> spkA <NA> <NA>\n");
}

TEST(Rttm, SortsAndGroupsRegardlessOfLineOrder) {
  const std::string text =
      "SPEAKER r2 1 3.0 1.0 <NA> <NA> b <NA> <NA>\n"
      "SPEAKER r1 1 5.0 1.0 <NA> <NA> b <NA> <NA>\n"
      "SPEAKER r1 1 1.0 1.0 <NA> <NA> b <NA> <NA>\n"
      "SPEAKER r1 1 1.0 2.0 <NA> <NA> a <NA> <NA>\n";
  const auto set = parse_rttm(text);
  ASSERT_EQ(set.size(), 2u);
  const auto& r1 = set.at("r1").turns;
  ASSERT_EQ(r1.size(), 3u);
  EXPECT_EQ(r1[0].speaker, "a");
  EXPECT_EQ(r1[1].speaker, "b");
  EXPECT_DOUBLE_EQ(r1[2].onset, 5.0);

  std::string reversed;
  std::vector<std::string> lines;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) reversed += *it + "\n";
  EXPECT_EQ(parse_rttm(reversed), set);
}

TEST(Rttm, RoundTripWithinOneMillisecond) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    AnnotationSet set;
    const std::size_t n_rec = 1 + rng.below(3);
    for (std::size_t r = 0; r < n_rec; ++r) {
      const std::string id = "rec" + std::to_string(r);
      Annotation a{id, {}};
      const std::size_t n = rng.below(8);
      for (std::size_t i = 0; i < n; ++i)
        a.turns.push_back({id, rng.uniform(0.0, 100.0), rng.uniform(0.001, 9.0),
                           "spk" + std::to_string(rng.below(4))});
      a.sort();
      if (!a.turns.empty()) set.emplace(id, std::move(a));
    }
    const auto back = parse_rttm(write_rttm(set));
    ASSERT_EQ(back.size(), set.size());
    for (const auto& [id, a] : set) {
      const auto& b = back.at(id);
      ASSERT_EQ(b.turns.size(), a.turns.size());
      for (std::size_t i = 0; i < a.turns.size(); ++i) {
        EXPECT_EQ(b.turns[i].speaker, a.turns[i].speaker);
        EXPECT_NEAR(b.turns[i].onset, a.turns[i].onset, 1e-3);
        EXPECT_NEAR(b.turns[i].duration, a.turns[i].duration, 1e-3);
      }
    }
  }
}

TEST(Uem, ParsesAndSorts) {
  const auto set = parse_uem("rec1 1 0.0 300.0\n");
  EXPECT_EQ(set.at("rec1").regions, (std::vector<Region>{{0.0, 300.0}}));
  const auto two = parse_uem("rec1 1 50 60\nrec1 1 0 10\n");
  EXPECT_EQ(two.at("rec1").regions, (std::vector<Region>{{0, 10}, {50, 60}}));
  EXPECT_DOUBLE_EQ(two.at("rec1").total(), 20.0);
}

TEST(Uem, RejectsBadRegions) {
  EXPECT_THROW(parse_uem("rec1 1 5.0 2.0"), ValidationError);
  EXPECT_THROW(parse_uem("rec1 1 0 10\nrec1 1 5 20\n"), ValidationError);
  EXPECT_THROW(parse_uem("rec1 1 0"), ParseError);
}

TEST(Uem, RoundTrip) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    RegionSet set;
    for (std::size_t r = 0; r < 1 + rng.below(3); ++r) {
      const std::string id = "r" + std::to_string(r);
      ScoringRegions regions = oracle::random_regions(rng, id, 30000);
      set.emplace(id, regions);
    }
    EXPECT_EQ(parse_uem(write_uem(set)), set);
  }
}

TEST(Embeddings, UtteranceForm) {
  const auto t = parse_utterance_embeddings("u1 1.0 0.0\nu2 0.0 1.0\n");
  EXPECT_EQ(t.dim, 2u);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1].utterance_id, "u2");
  EXPECT_EQ(t.rows[1].vector, (std::vector<double>{0.0, 1.0}));
}

TEST(Embeddings, SegmentForm) {
  const auto t = parse_segment_embeddings("rec1 0.0 1.5 0.3 0.4");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], (SegmentEmbedding{"rec1", 0.0, 1.5, {0.3, 0.4}}));
  const auto v = parse_embeddings("rec1 0.0 1.5 0.3 0.4", EmbeddingForm::segment);
  EXPECT_TRUE(std::holds_alternative<SegmentTable>(v));
}

TEST(Embeddings, CommentsAreSkipped) {
  const auto t = parse_utterance_embeddings("# header\nu1 1 2 # trailing\n\n");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.dim, 2u);
}

TEST(Embeddings, MixedDimensionIsFormatError) {
  EXPECT_THROW(parse_utterance_embeddings("u1 1 2\nu2 1 2 3\n"), FormatError);
  EXPECT_THROW(parse_utterance_embeddings("u1 1 inf\n"), FormatError);
  EXPECT_THROW(parse_utterance_embeddings("u1 1 nan\n"), FormatError);
  EXPECT_THROW(parse_segment_embeddings("r 2.0 1.0 0.5\n"), ValidationError);
}

TEST(Embeddings, RoundTripIsExact) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.below(6);
    UtteranceTable u;
    SegmentTable s;
    u.dim = s.dim = dim;
    for (std::size_t i = 0; i < 1 + rng.below(10); ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
      u.rows.push_back({"u" + std::to_string(i), std::nullopt, v});
      const double on = rng.uniform(0, 100);
      s.rows.push_back({"r" + std::to_string(i % 3), on, on + rng.uniform(0.01, 2), v});
    }
    EXPECT_EQ(parse_utterance_embeddings(write_embeddings(u)), u);
    EXPECT_EQ(parse_segment_embeddings(write_embeddings(s)), s);
  }
}

TEST(DomainMap, HeaderLocatesDomainColumn) {
  const auto m = parse_domain_map("recording_id,domain,n_speakers\nr1,court,2\nr2,clinical,3\n");
  EXPECT_EQ(m.at("r1"), "court");
  EXPECT_EQ(m.at("r2"), "clinical");
  EXPECT_EQ(parse_domain_map(write_domain_map(m)), m);
  EXPECT_THROW(parse_domain_map("id,label\nr1,x\n"), ParseError);
  EXPECT_THROW(parse_domain_map("id,domain\nr1,x\nr1,y\n"), ValidationError);
}

TEST(Profiles, BaselineEnergyExample) {
  const auto set = read_profiles(
      R"([{"domain":"court","ahc_threshold":0.1,"pca_energy":0.30}])");
  ASSERT_EQ(set.domains.size(), 1u);
  EXPECT_EQ(set.domains.at("court"), (DomainProfile{"court", 0.1, 0.30}));
  EXPECT_FALSE(set.fallback.has_value());
}

TEST(Profiles, Rejections) {
  EXPECT_THROW(read_profiles(R"([{"domain":"a","ahc_threshold":0,"pca_energy":1.2}])"),
               ValidationError);
  EXPECT_THROW(read_profiles(R"([{"domain":"a","ahc_threshold":0,"pca_energy":0}])"),
               ValidationError);
  EXPECT_THROW(read_profiles(R"([{"domain":"a","ahc_threshold":0,"pca_energy":0.3},
                                 {"domain":"a","ahc_threshold":1,"pca_energy":0.3}])"),
               ValidationError);
  EXPECT_THROW(read_profiles("{not json"), ParseError);
}

TEST(Profiles, RoundTripElevenDomains) {
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    ProfileSet set;
    for (int d = 0; d < 11; ++d) {
      const std::string name = "dom" + std::to_string(d);
      set.domains.emplace(name, DomainProfile{name, rng.uniform(-5, 5),
                                              1.0 - rng.uniform()});
    }
    if (trial % 2) set.fallback = DomainProfile{"*", rng.normal(), 0.3};
    EXPECT_EQ(read_profiles(write_profiles(set)), set);
  }
}

TEST(Files, MissingFileNamesPath) {
  const auto msg =
      message_of<UsageError>([] { read_text_file("/nonexistent/dir/x.txt"); });
  EXPECT_NE(msg.find("/nonexistent/dir/x.txt"), std::string::npos);
}

TEST(Files, AtomicWriteReplaces) {
  const auto dir = std::filesystem::temp_directory_path() / "diarkit_fmt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "a.txt";
  write_text_file_atomic(path, "one");
  write_text_file_atomic(path, "two");
  EXPECT_EQ(read_text_file(path), "two");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++n;
  EXPECT_EQ(n, 1u);
  std::filesystem::remove_all(dir);
}
