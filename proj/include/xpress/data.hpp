// include/xpress/data.hpp

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

#ifndef XPRESS_DATA_HPP
#define XPRESS_DATA_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace xpress {

enum class ExprVote { Yes, No, NotSure };

enum class ExprCategory { Yes, MildYes, MildNo, No };

const char *expr_vote_name(ExprVote v);
ExprVote expr_vote_from_name(const std::string &name);
const char *expr_category_name(ExprCategory c);

// One graded query: four expression votes plus four 3-level valence and
// arousal votes.
struct GradedQuery {
  std::string id;
  std::string audio_path;
  std::string transcript;
  std::array<ExprVote, 4> expr_votes{};
  std::array<int, 4> valence_votes{};  // 1..3
  std::array<int, 4> arousal_votes{};  // 1..3
  std::string intent_type;  // optional pass-through, unused by the models
};

struct ExprAggregate {
  ExprCategory category = ExprCategory::No;
  double numeric_grade = 0.0;  // mean of Yes->2, NotSure->1, No->0
  bool binary_expressive = false;
};

// Agreement categorization: Yes when two or more voted Yes; No when two or
// more voted No; Mild-Yes when exactly one Yes and two or more NotSure;
// Mild-No when two or more NotSure and the rest No. Overlaps resolve with
// precedence Yes > No > MildYes > MildNo.
ExprAggregate aggregate_expression(const std::array<ExprVote, 4> &votes);

// Mean of the four 1..3 votes mapped affinely onto [1, 7] (3a - 2).
double scale_emotion(const std::array<int, 4> &votes);

struct QueryLabel {
  ExprCategory category = ExprCategory::No;
  double numeric_grade = 0.0;
  bool binary_expressive = false;
  double valence = 0.0;  // 1..7
  double arousal = 0.0;  // 1..7
};

QueryLabel label_query(const GradedQuery &q);

// Drops queries where all four expression votes are NotSure.
std::vector<GradedQuery> filter_all_not_sure(
    const std::vector<GradedQuery> &queries);

struct SplitRatios {
  double pretrain = 60.0;
  double balanced = 30.0;
  double dev = 4.0;
  double eval = 3.0;
};

struct DatasetSplit {
  std::vector<std::string> pretrain;
  std::vector<std::string> balanced_train;
  std::vector<std::string> dev;
  std::vector<std::string> eval;
};

// Seeded shuffle; dev and eval held out first, then balanced_train by
// down-sampling the majority class within its allocation; pretrain gets the
// remaining pool. The four lists are pairwise disjoint.
DatasetSplit make_splits(const std::vector<GradedQuery> &queries,
                         const SplitRatios &ratios, uint64_t seed);

// JSONL manifest, one object per query: id, audio, transcript, expr_votes,
// valence_votes, arousal_votes, optional intent_type.
void save_manifest(const std::string &path,
                   const std::vector<GradedQuery> &queries);
std::vector<GradedQuery> load_manifest(const std::string &path);

// Split file: JSON object with the four id arrays.
void save_split(const std::string &path, const DatasetSplit &split);
DatasetSplit load_split(const std::string &path);

}  // namespace xpress

#endif  // XPRESS_DATA_HPP
