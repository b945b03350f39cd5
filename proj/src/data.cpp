// src/data.cpp

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
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "xpress/data.hpp"
#include "xpress/error.hpp"

namespace xpress {

const char *expr_vote_name(ExprVote v) {
  switch (v) {
    case ExprVote::Yes: return "yes";
    case ExprVote::No: return "no";
    case ExprVote::NotSure: return "not_sure";
  }
  return "not_sure";
}

ExprVote expr_vote_from_name(const std::string &name) {
  if (name == "yes") return ExprVote::Yes;
  if (name == "no") return ExprVote::No;
  if (name == "not_sure") return ExprVote::NotSure;
  Throw(ErrorCode::BadVoteValue, "unknown expression vote '" + name + "'");
}

const char *expr_category_name(ExprCategory c) {
  switch (c) {
    case ExprCategory::Yes: return "yes";
    case ExprCategory::MildYes: return "mild_yes";
    case ExprCategory::MildNo: return "mild_no";
    case ExprCategory::No: return "no";
  }
  return "no";
}

ExprAggregate aggregate_expression(const std::array<ExprVote, 4> &votes) {
  int n_yes = 0, n_no = 0, n_ns = 0;
  double grade = 0.0;
  for (ExprVote v : votes) {
    switch (v) {
      case ExprVote::Yes:
        ++n_yes;
        grade += 2.0;
        break;
      case ExprVote::NotSure:
        ++n_ns;
        grade += 1.0;
        break;
      case ExprVote::No:
        ++n_no;
        break;
    }
  }
  grade /= 4.0;

  ExprAggregate out;
  out.numeric_grade = grade;
  if (n_yes >= 2)
    out.category = ExprCategory::Yes;
  else if (n_no >= 2)
    out.category = ExprCategory::No;
  else if (n_yes == 1 && n_ns >= 2)
    out.category = ExprCategory::MildYes;
  else
    out.category = ExprCategory::MildNo;  // >= 2 NotSure, rest No
  out.binary_expressive = out.category == ExprCategory::Yes;
  return out;
}

double scale_emotion(const std::array<int, 4> &votes) {
  double mean = 0.0;
  for (int v : votes) {
    if (v < 1 || v > 3)
      Throw(ErrorCode::BadVoteValue,
            "emotion vote must be in {1,2,3}, got " + std::to_string(v));
    mean += v;
  }
  mean /= 4.0;
  return 3.0 * mean - 2.0;
}

QueryLabel label_query(const GradedQuery &q) {
  ExprAggregate agg = aggregate_expression(q.expr_votes);
  QueryLabel out;
  out.category = agg.category;
  out.numeric_grade = agg.numeric_grade;
  out.binary_expressive = agg.binary_expressive;
  out.valence = scale_emotion(q.valence_votes);
  out.arousal = scale_emotion(q.arousal_votes);
  return out;
}

std::vector<GradedQuery> filter_all_not_sure(
    const std::vector<GradedQuery> &queries) {
  std::vector<GradedQuery> out;
  out.reserve(queries.size());
  for (const GradedQuery &q : queries) {
    bool all_ns = true;
    for (ExprVote v : q.expr_votes)
      if (v != ExprVote::NotSure) all_ns = false;
    if (!all_ns) out.push_back(q);
  }
  return out;
}

DatasetSplit make_splits(const std::vector<GradedQuery> &queries,
                         const SplitRatios &ratios, uint64_t seed) {
  size_t n = queries.size();
  if (n == 0) Throw(ErrorCode::InsufficientData, "no queries to split");
  double total = ratios.pretrain + ratios.balanced + ratios.dev + ratios.eval;
  if (total <= 0.0) Throw(ErrorCode::BadConfig, "split ratios sum to zero");

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto count_for = [&](double ratio) {
    return static_cast<size_t>(std::lround(n * ratio / total));
  };
  size_t n_dev = count_for(ratios.dev);
  size_t n_eval = count_for(ratios.eval);
  size_t n_bal = count_for(ratios.balanced);
  if (n_dev + n_eval >= n)
    Throw(ErrorCode::InsufficientData, "held-out sets exhaust the corpus");

  DatasetSplit split;
  size_t pos = 0;
  for (size_t i = 0; i < n_dev; ++i) split.dev.push_back(queries[order[pos++]].id);
  for (size_t i = 0; i < n_eval; ++i)
    split.eval.push_back(queries[order[pos++]].id);

  // Remaining pool in shuffle order; balanced set takes equal counts of the
  // binary classes, pretrain keeps the rest (all grades, imbalanced).
  std::vector<size_t> pool(order.begin() + pos, order.end());
  std::vector<size_t> pos_ids, neg_ids;
  for (size_t idx : pool) {
    if (aggregate_expression(queries[idx].expr_votes).binary_expressive)
      pos_ids.push_back(idx);
    else
      neg_ids.push_back(idx);
  }
  if (pos_ids.empty() || neg_ids.empty())
    Throw(ErrorCode::InsufficientData,
          "both classes required to build the balanced training set");
  size_t per_class = std::min({n_bal / 2, pos_ids.size(), neg_ids.size()});
  std::vector<bool> taken(n, false);
  for (size_t i = 0; i < per_class; ++i) {
    taken[pos_ids[i]] = true;
    taken[neg_ids[i]] = true;
  }
  // Preserve shuffle order inside the balanced list.
  for (size_t idx : pool)
    if (taken[idx]) split.balanced_train.push_back(queries[idx].id);
  for (size_t idx : pool)
    if (!taken[idx]) split.pretrain.push_back(queries[idx].id);
  return split;
}

void save_manifest(const std::string &path,
                   const std::vector<GradedQuery> &queries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Throw(ErrorCode::IoError, "cannot write " + path);
  for (const GradedQuery &q : queries) {
    nlohmann::json j;
    j["id"] = q.id;
    j["audio"] = q.audio_path;
    j["transcript"] = q.transcript;
    nlohmann::json votes = nlohmann::json::array();
    for (ExprVote v : q.expr_votes) votes.push_back(expr_vote_name(v));
    j["expr_votes"] = votes;
    j["valence_votes"] = q.valence_votes;
    j["arousal_votes"] = q.arousal_votes;
    if (!q.intent_type.empty()) j["intent_type"] = q.intent_type;
    os << j.dump() << "\n";
  }
  if (!os) Throw(ErrorCode::IoError, "short write to " + path);
}

std::vector<GradedQuery> load_manifest(const std::string &path) {
  std::ifstream is(path);
  if (!is) Throw(ErrorCode::IoError, "cannot open " + path);
  std::vector<GradedQuery> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    GradedQuery q;
    q.id = j.at("id").get<std::string>();
    q.audio_path = j.at("audio").get<std::string>();
    q.transcript = j.at("transcript").get<std::string>();
    auto votes = j.at("expr_votes");
    if (votes.size() != 4)
      Throw(ErrorCode::BadVoteCount,
            "expected 4 expression votes at line " + std::to_string(line_no));
    for (size_t i = 0; i < 4; ++i)
      q.expr_votes[i] = expr_vote_from_name(votes[i].get<std::string>());
    auto val = j.at("valence_votes");
    auto aro = j.at("arousal_votes");
    if (val.size() != 4 || aro.size() != 4)
      Throw(ErrorCode::BadVoteCount,
            "expected 4 emotion votes at line " + std::to_string(line_no));
    for (size_t i = 0; i < 4; ++i) {
      q.valence_votes[i] = val[i].get<int>();
      q.arousal_votes[i] = aro[i].get<int>();
    }
    if (j.contains("intent_type"))
      q.intent_type = j.at("intent_type").get<std::string>();
    out.push_back(std::move(q));
  }
  return out;
}

void save_split(const std::string &path, const DatasetSplit &split) {
  nlohmann::json j = {{"pretrain", split.pretrain},
                      {"balanced_train", split.balanced_train},
                      {"dev", split.dev},
                      {"eval", split.eval}};
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Throw(ErrorCode::IoError, "cannot write " + path);
  os << j.dump(2) << "\n";
}

DatasetSplit load_split(const std::string &path) {
  std::ifstream is(path);
  if (!is) Throw(ErrorCode::IoError, "cannot open " + path);
  nlohmann::json j;
  is >> j;
  DatasetSplit split;
  split.pretrain = j.at("pretrain").get<std::vector<std::string>>();
  split.balanced_train = j.at("balanced_train").get<std::vector<std::string>>();
  split.dev = j.at("dev").get<std::vector<std::string>>();
  split.eval = j.at("eval").get<std::vector<std::string>>();
  return split;
}

}  // namespace xpress
