// include/xpress/metrics.hpp

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

#ifndef XPRESS_METRICS_HPP
#define XPRESS_METRICS_HPP

#include <string>
#include <vector>

namespace xpress {

// Detection scores with binary labels (true = positive class).
struct ScoredSet {
  std::vector<double> scores;
  std::vector<bool> labels;
};

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;  // false accepts / negatives
  double frr = 0.0;  // false rejects / positives
};

// Operating points at thresholds = sorted unique scores plus -inf/+inf
// sentinels, decision rule score >= t. FAR is non-increasing and FRR
// non-decreasing in the threshold.
std::vector<RocPoint> roc_curve(const ScoredSet &s);

// FAR = FRR crossing of the ROC, linearly interpolated between the adjacent
// operating points where FAR - FRR changes sign.
double eer(const ScoredSet &s);

// Threshold at the EER operating point (interpolated), for turning scores
// into hard decisions.
double eer_threshold(const ScoredSet &s);

struct ClassifierStats {
  double wa = 0.0;       // overall accuracy
  double uwa = 0.0;      // mean per-class recall
  double f_score = 0.0;  // harmonic precision/recall on positives
};

ClassifierStats wa_uwa_f(const std::vector<bool> &predictions,
                         const std::vector<bool> &labels);

// Concordance correlation, population (1/n) moments; 0 when the denominator
// vanishes.
double ccc(const std::vector<double> &x, const std::vector<double> &y);

// Product-moment correlation; throws DegenerateVariance if either variance
// is zero.
double pearson(const std::vector<double> &x, const std::vector<double> &y);

struct EvalReport {
  double eer = 0.0;
  double threshold = 0.0;  // EER operating point
  ClassifierStats at_eer_threshold;
  ClassifierStats at_half;  // fixed 0.5 threshold, for reference
  bool has_ccc = false;
  double ccc_valence = 0.0;
  double ccc_arousal = 0.0;
  std::vector<RocPoint> roc;
};

EvalReport evaluate_scores(const ScoredSet &s);

std::string to_json(const EvalReport &report, bool include_roc = false);

// CSV with header "threshold,far,frr".
std::string roc_to_csv(const std::vector<RocPoint> &roc);

}  // namespace xpress

#endif  // XPRESS_METRICS_HPP
