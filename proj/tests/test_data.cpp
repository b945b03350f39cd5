// tests/test_data.cpp

// Copyright 2026  Xpress Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "oracle_helpers.hpp"
#include "xpress/data.hpp"
#include "xpress/dsp.hpp"
#include "xpress/error.hpp"
#include "xpress/features.hpp"
#include "xpress/synth.hpp"

using namespace xpress;

namespace {

// Brute-force restatement of the agreement rules, written from the category
// definitions with explicit precedence.
ExprCategory category_oracle(const std::array<ExprVote, 4> &votes) {
  int yes = 0, no = 0, ns = 0;
  for (ExprVote v : votes) {
    if (v == ExprVote::Yes) ++yes;
    if (v == ExprVote::No) ++no;
    if (v == ExprVote::NotSure) ++ns;
  }
  bool rule_yes = yes >= 2;
  bool rule_no = no >= 2;
  bool rule_mild_yes = yes == 1 && ns >= 2;
  bool rule_mild_no = ns >= 2 && yes == 0;  // the rest voted No
  if (rule_yes) return ExprCategory::Yes;
  if (rule_no) return ExprCategory::No;
  if (rule_mild_yes) return ExprCategory::MildYes;
  if (rule_mild_no) return ExprCategory::MildNo;
  return ExprCategory::MildNo;
}

double grade_oracle(const std::array<ExprVote, 4> &votes) {
  double acc = 0.0;
  for (ExprVote v : votes)
    acc += v == ExprVote::Yes ? 2.0 : v == ExprVote::NotSure ? 1.0 : 0.0;
  return acc / 4.0;
}

GradedQuery make_query(const std::string &id, bool expressive) {
  GradedQuery q;
  q.id = id;
  q.audio_path = id + ".wav";
  q.transcript = "hello there";
  q.expr_votes = expressive
                     ? std::array<ExprVote, 4>{ExprVote::Yes, ExprVote::Yes,
                                               ExprVote::No, ExprVote::NotSure}
                     : std::array<ExprVote, 4>{ExprVote::No, ExprVote::No,
                                               ExprVote::NotSure, ExprVote::No};
  q.valence_votes = {1, 2, 2, 3};
  q.arousal_votes = {2, 2, 2, 2};
  return q;
}

}  // namespace

TEST_CASE("aggregate_expression worked examples") {
  ExprAggregate a = aggregate_expression(
      {ExprVote::Yes, ExprVote::Yes, ExprVote::No, ExprVote::NotSure});
  CHECK(a.category == ExprCategory::Yes);
  CHECK(a.numeric_grade == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(a.binary_expressive);

  a = aggregate_expression(
      {ExprVote::Yes, ExprVote::NotSure, ExprVote::NotSure, ExprVote::No});
  CHECK(a.category == ExprCategory::MildYes);
  CHECK(a.numeric_grade == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(!a.binary_expressive);

  a = aggregate_expression(
      {ExprVote::No, ExprVote::No, ExprVote::No, ExprVote::No});
  CHECK(a.category == ExprCategory::No);
  CHECK(a.numeric_grade == 0.0);
  CHECK(!a.binary_expressive);
}

TEST_CASE("aggregation passes exhaustive enumeration against the rule oracle") {
  const ExprVote domain[3] = {ExprVote::Yes, ExprVote::No, ExprVote::NotSure};
  int checked = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          std::array<ExprVote, 4> votes = {domain[a], domain[b], domain[c],
                                           domain[d]};
          ExprAggregate got = aggregate_expression(votes);
          CHECK(got.category == category_oracle(votes));
          CHECK(got.numeric_grade ==
                doctest::Approx(grade_oracle(votes)).epsilon(1e-15));
          CHECK(got.binary_expressive == (got.category == ExprCategory::Yes));
          // Grades live on the quarter grid of 4-vote means.
          double scaled = got.numeric_grade * 4.0;
          CHECK(scaled == std::floor(scaled));
          CHECK(got.numeric_grade >= 0.0);
          CHECK(got.numeric_grade <= 2.0);
          ++checked;
        }
  CHECK(checked == 81);
}

TEST_CASE("aggregation is permutation-invariant") {
  const ExprVote domain[3] = {ExprVote::Yes, ExprVote::No, ExprVote::NotSure};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          std::array<ExprVote, 4> votes = {domain[a], domain[b], domain[c],
                                           domain[d]};
          ExprAggregate base = aggregate_expression(votes);
          std::array<ExprVote, 4> perm = votes;
          std::sort(perm.begin(), perm.end());
          do {
            ExprAggregate got = aggregate_expression(perm);
            CHECK(got.category == base.category);
            CHECK(got.numeric_grade == base.numeric_grade);
          } while (std::next_permutation(perm.begin(), perm.end()));
        }
}

TEST_CASE("scale_emotion endpoints, affine map, and enumeration") {
  CHECK(scale_emotion({1, 1, 1, 1}) == 1.0);
  CHECK(scale_emotion({3, 3, 3, 3}) == 7.0);
  CHECK(scale_emotion({1, 2, 2, 3}) == doctest::Approx(4.0).epsilon(1e-15));

  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b)
      for (int c = 1; c <= 3; ++c)
        for (int d = 1; d <= 3; ++d) {
          double mean = (a + b + c + d) / 4.0;
          double want = 3.0 * mean - 2.0;
          double got = scale_emotion({a, b, c, d});
          CHECK(got == doctest::Approx(want).epsilon(1e-15));
          CHECK(got >= 1.0);
          CHECK(got <= 7.0);
        }

  // Monotone in each vote.
  CHECK(scale_emotion({2, 1, 1, 1}) > scale_emotion({1, 1, 1, 1}));
  CHECK(scale_emotion({3, 2, 2, 2}) > scale_emotion({2, 2, 2, 2}));

  try {
    scale_emotion({0, 1, 2, 3});
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::BadVoteValue);
  }
}

TEST_CASE("filter_all_not_sure removes exactly the all-NotSure queries") {
  GradedQuery all_ns = make_query("ns", false);
  all_ns.expr_votes = {ExprVote::NotSure, ExprVote::NotSure, ExprVote::NotSure,
                       ExprVote::NotSure};
  GradedQuery three_ns = make_query("3ns", false);
  three_ns.expr_votes = {ExprVote::NotSure, ExprVote::NotSure,
                         ExprVote::NotSure, ExprVote::No};
  std::vector<GradedQuery> in = {all_ns, three_ns, make_query("a", true)};
  auto out = filter_all_not_sure(in);
  REQUIRE(out.size() == 2);
  CHECK(out[0].id == "3ns");
  CHECK(out[1].id == "a");

  CHECK(filter_all_not_sure({}).empty());
}

TEST_CASE("make_splits balances, is deterministic, and keeps sets disjoint") {
  std::vector<GradedQuery> queries;
  for (int i = 0; i < 1000; ++i)
    queries.push_back(make_query("q" + std::to_string(i), i % 10 < 3));

  SplitRatios ratios;  // 60/30/4/3
  DatasetSplit s1 = make_splits(queries, ratios, 99);
  DatasetSplit s2 = make_splits(queries, ratios, 99);
  CHECK(s1.pretrain == s2.pretrain);
  CHECK(s1.balanced_train == s2.balanced_train);
  CHECK(s1.dev == s2.dev);
  CHECK(s1.eval == s2.eval);

  // Balanced set: equal positive and negative counts within 1.
  std::map<std::string, bool> expressive;
  for (const GradedQuery &q : queries)
    expressive[q.id] = aggregate_expression(q.expr_votes).binary_expressive;
  int pos = 0, neg = 0;
  for (const std::string &id : s1.balanced_train)
    (expressive[id] ? pos : neg) += 1;
  CHECK(std::abs(pos - neg) <= 1);
  CHECK(pos + neg > 0);

  // Disjointness by brute-force set intersection.
  std::set<std::string> sets[4] = {
      {s1.pretrain.begin(), s1.pretrain.end()},
      {s1.balanced_train.begin(), s1.balanced_train.end()},
      {s1.dev.begin(), s1.dev.end()},
      {s1.eval.begin(), s1.eval.end()}};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      std::vector<std::string> overlap;
      std::set_intersection(sets[i].begin(), sets[i].end(), sets[j].begin(),
                            sets[j].end(), std::back_inserter(overlap));
      CHECK(overlap.empty());
    }
  size_t total =
      sets[0].size() + sets[1].size() + sets[2].size() + sets[3].size();
  CHECK(total <= queries.size());

  // One-class pools are rejected.
  std::vector<GradedQuery> one_class;
  for (int i = 0; i < 50; ++i)
    one_class.push_back(make_query("n" + std::to_string(i), false));
  try {
    make_splits(one_class, ratios, 1);
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }
}

TEST_CASE("manifest and split files round-trip") {
  namespace fs = std::filesystem;
  std::string mpath = (fs::temp_directory_path() / "xpress_man.jsonl").string();
  std::vector<GradedQuery> queries = {make_query("q1", true),
                                      make_query("q2", false)};
  queries[0].intent_type = "resource";
  save_manifest(mpath, queries);
  auto loaded = load_manifest(mpath);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "q1");
  CHECK(loaded[0].transcript == "hello there");
  CHECK(loaded[0].expr_votes == queries[0].expr_votes);
  CHECK(loaded[0].valence_votes == queries[0].valence_votes);
  CHECK(loaded[0].intent_type == "resource");
  CHECK(loaded[1].intent_type.empty());

  std::string spath = (fs::temp_directory_path() / "xpress_split.json").string();
  DatasetSplit split;
  split.pretrain = {"q1"};
  split.eval = {"q2"};
  save_split(spath, split);
  DatasetSplit sloaded = load_split(spath);
  CHECK(sloaded.pretrain == split.pretrain);
  CHECK(sloaded.eval == split.eval);
  CHECK(sloaded.dev.empty());
}

TEST_CASE("synthetic corpus: pitch spread, lexical independence, determinism") {
  namespace fs = std::filesystem;
  SynthConfig cfg;
  cfg.n = 120;
  cfg.seed = 2024;
  cfg.out_dir = (fs::temp_directory_path() / "xpress_synth_a").string();
  SynthResult res = synth_corpus(cfg);
  REQUIRE(res.queries.size() == 120);

  // Measured f0 spread (via the f0v extractor) should be much larger for the
  // expressive class.
  FrameSpec spec;
  double expr_spread = 0.0, calm_spread = 0.0;
  int n_expr = 0, n_calm = 0;
  std::map<std::string, int> token_counts[2];
  for (const GradedQuery &q : res.queries) {
    AudioBuffer audio =
        load_wav(resolve_audio_path(res.manifest_path, q.audio_path));
    FeatureMatrix f = f0v(audio, spec);
    double mean = 0.0;
    for (int t = 0; t < f.data.rows; ++t) mean += f.data.at(t, 0);
    mean /= f.data.rows;
    double var = 0.0;
    for (int t = 0; t < f.data.rows; ++t) {
      double d = f.data.at(t, 0) - mean;
      var += d * d;
    }
    double sd = std::sqrt(var / f.data.rows);

    bool expressive = aggregate_expression(q.expr_votes).binary_expressive;
    if (expressive) {
      expr_spread += sd;
      ++n_expr;
    } else {
      calm_spread += sd;
      ++n_calm;
    }
    std::stringstream ss(q.transcript);
    std::string tok;
    while (ss >> tok) token_counts[expressive ? 1 : 0][tok] += 1;
  }
  REQUIRE(n_expr > 5);
  REQUIRE(n_calm > 5);
  expr_spread /= n_expr;
  calm_spread /= n_calm;
  CHECK(expr_spread > 2.0 * calm_spread);

  // Chi-square independence of token counts vs class.
  std::set<std::string> all_tokens;
  for (int c = 0; c < 2; ++c)
    for (const auto &[tok, count] : token_counts[c]) all_tokens.insert(tok);
  double n0 = 0.0, n1 = 0.0;
  for (const auto &[tok, count] : token_counts[0]) n0 += count;
  for (const auto &[tok, count] : token_counts[1]) n1 += count;
  double stat = 0.0;
  int dof = 0;
  for (const std::string &tok : all_tokens) {
    double c0 = token_counts[0].count(tok) ? token_counts[0][tok] : 0.0;
    double c1 = token_counts[1].count(tok) ? token_counts[1][tok] : 0.0;
    double row = c0 + c1;
    double e0 = row * n0 / (n0 + n1);
    double e1 = row * n1 / (n0 + n1);
    if (e0 < 5.0 || e1 < 5.0) continue;  // standard cell-count guard
    stat += (c0 - e0) * (c0 - e0) / e0 + (c1 - e1) * (c1 - e1) / e1;
    ++dof;
  }
  REQUIRE(dof > 3);
  double p = oracle::chi2_sf(stat, dof - 1);
  CHECK(p > 0.01);

  // Bitwise determinism of manifest and audio.
  SynthConfig cfg2 = cfg;
  cfg2.out_dir = (fs::temp_directory_path() / "xpress_synth_b").string();
  SynthResult res2 = synth_corpus(cfg2);
  auto slurp = [](const std::string &p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(slurp(res.manifest_path) == slurp(res2.manifest_path));
  for (int i : {0, 17, 64, 119}) {
    std::string rel = res.queries[i].audio_path;
    CHECK(slurp(cfg.out_dir + "/" + rel) == slurp(cfg2.out_dir + "/" + rel));
  }

  // n below the supported scale is rejected.
  SynthConfig tiny = cfg;
  tiny.n = 50;
  try {
    synth_corpus(tiny);
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::BadConfig);
  }
}
