// src/metrics.cpp

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
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "xpress/error.hpp"
#include "xpress/metrics.hpp"

namespace xpress {

namespace {

void check_two_classes(const ScoredSet &s) {
  if (s.scores.size() != s.labels.size())
    Throw(ErrorCode::LengthMismatch, "scores/labels length mismatch");
  size_t n_pos = 0;
  for (bool b : s.labels) n_pos += b ? 1 : 0;
  if (n_pos == 0 || n_pos == s.labels.size())
    Throw(ErrorCode::OneClassOnly, "need both classes for threshold metrics");
  for (double v : s.scores)
    if (!std::isfinite(v))
      Throw(ErrorCode::NumericalDivergence, "non-finite score");
}

// Finds the FAR == FRR crossing along the curve; returns {eer, threshold}.
std::pair<double, double> eer_point(const std::vector<RocPoint> &roc) {
  // diff = FAR - FRR starts at +1 (accept all) and ends at -1 (reject all).
  for (size_t i = 0; i + 1 < roc.size(); ++i) {
    double d0 = roc[i].far - roc[i].frr;
    double d1 = roc[i + 1].far - roc[i + 1].frr;
    if (d0 == 0.0) return {roc[i].far, roc[i].threshold};
    if (d0 > 0.0 && d1 <= 0.0) {
      if (d1 == 0.0) return {roc[i + 1].far, roc[i + 1].threshold};
      double s = d0 / (d0 - d1);
      double eer = roc[i].far + s * (roc[i + 1].far - roc[i].far);
      // Sentinel segments have no finite interpolated threshold; report the
      // finite endpoint instead.
      double t0 = roc[i].threshold, t1 = roc[i + 1].threshold;
      double thr;
      if (std::isfinite(t0) && std::isfinite(t1))
        thr = t0 + s * (t1 - t0);
      else
        thr = std::isfinite(t1) ? t1 : t0;
      return {eer, thr};
    }
  }
  const RocPoint &last = roc.back();
  return {last.far, last.threshold};
}

}  // namespace

std::vector<RocPoint> roc_curve(const ScoredSet &s) {
  check_two_classes(s);
  size_t n = s.scores.size();
  size_t n_pos = 0;
  for (bool b : s.labels) n_pos += b ? 1 : 0;
  size_t n_neg = n - n_pos;

  // Sort by score ascending; sweep thresholds upward. At threshold t the
  // positives are those with score >= t.
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return s.scores[a] < s.scores[b]; });

  std::vector<RocPoint> roc;
  double inf = std::numeric_limits<double>::infinity();
  size_t rejected_pos = 0, rejected_neg = 0;
  // -inf sentinel: everything accepted.
  roc.push_back({-inf, 1.0, 0.0});
  size_t i = 0;
  while (i < n) {
    double t = s.scores[idx[i]];
    // Accepting score >= t: samples strictly below t are rejected.
    roc.push_back({t, static_cast<double>(n_neg - rejected_neg) / n_neg,
                   static_cast<double>(rejected_pos) / n_pos});
    // Consume all samples with this score; they fall below any higher t.
    while (i < n && s.scores[idx[i]] == t) {
      if (s.labels[idx[i]])
        ++rejected_pos;
      else
        ++rejected_neg;
      ++i;
    }
  }
  // +inf sentinel: everything rejected.
  roc.push_back({inf, 0.0, 1.0});
  return roc;
}

double eer(const ScoredSet &s) { return eer_point(roc_curve(s)).first; }

double eer_threshold(const ScoredSet &s) {
  return eer_point(roc_curve(s)).second;
}

ClassifierStats wa_uwa_f(const std::vector<bool> &predictions,
                         const std::vector<bool> &labels) {
  if (predictions.size() != labels.size())
    Throw(ErrorCode::LengthMismatch, "predictions/labels length mismatch");
  if (labels.empty()) Throw(ErrorCode::LengthMismatch, "empty inputs");
  size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] && predictions[i]) ++tp;
    else if (!labels[i] && predictions[i]) ++fp;
    else if (labels[i] && !predictions[i]) ++fn;
    else ++tn;
  }
  if (tp + fn == 0 || tn + fp == 0)
    Throw(ErrorCode::OneClassOnly, "need both classes in labels for UWA");
  ClassifierStats out;
  out.wa = static_cast<double>(tp + tn) / static_cast<double>(labels.size());
  double recall_pos = static_cast<double>(tp) / static_cast<double>(tp + fn);
  double recall_neg = static_cast<double>(tn) / static_cast<double>(tn + fp);
  out.uwa = 0.5 * (recall_pos + recall_neg);
  double precision =
      tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  out.f_score = precision + recall_pos > 0.0
                    ? 2.0 * precision * recall_pos / (precision + recall_pos)
                    : 0.0;
  return out;
}

double ccc(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size())
    Throw(ErrorCode::LengthMismatch, "ccc length mismatch");
  if (x.size() < 2) Throw(ErrorCode::TooShort, "ccc needs length >= 2");
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  vx /= n;
  vy /= n;
  cov /= n;
  double denom = vx + vy + (mx - my) * (mx - my);
  return denom > 0.0 ? 2.0 * cov / denom : 0.0;
}

double pearson(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size())
    Throw(ErrorCode::LengthMismatch, "pearson length mismatch");
  if (x.size() < 3) Throw(ErrorCode::TooShort, "pearson needs length >= 3");
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  if (vx <= 0.0 || vy <= 0.0)
    Throw(ErrorCode::DegenerateVariance, "zero variance in pearson input");
  return cov / std::sqrt(vx * vy);
}

EvalReport evaluate_scores(const ScoredSet &s) {
  EvalReport report;
  report.roc = roc_curve(s);
  auto [e, thr] = eer_point(report.roc);
  report.eer = e;
  report.threshold = thr;

  auto decide = [&](double threshold) {
    std::vector<bool> pred(s.scores.size());
    for (size_t i = 0; i < s.scores.size(); ++i)
      pred[i] = s.scores[i] >= threshold;
    return wa_uwa_f(pred, s.labels);
  };
  report.at_eer_threshold = decide(thr);
  report.at_half = decide(0.5);
  return report;
}

std::string to_json(const EvalReport &report, bool include_roc) {
  nlohmann::json j = {
      {"eer", report.eer},
      {"threshold", report.threshold},
      {"wa", report.at_eer_threshold.wa},
      {"uwa", report.at_eer_threshold.uwa},
      {"f_score", report.at_eer_threshold.f_score},
      {"at_threshold_0.5",
       {{"wa", report.at_half.wa},
        {"uwa", report.at_half.uwa},
        {"f_score", report.at_half.f_score}}},
  };
  if (report.has_ccc) {
    j["ccc_valence"] = report.ccc_valence;
    j["ccc_arousal"] = report.ccc_arousal;
  }
  if (include_roc) {
    nlohmann::json roc = nlohmann::json::array();
    for (const RocPoint &p : report.roc)
      roc.push_back({{"threshold", p.threshold}, {"far", p.far}, {"frr", p.frr}});
    j["roc"] = roc;
  }
  return j.dump(2);
}

std::string roc_to_csv(const std::vector<RocPoint> &roc) {
  std::ostringstream os;
  os.precision(17);
  os << "threshold,far,frr\n";
  for (const RocPoint &p : roc)
    os << p.threshold << "," << p.far << "," << p.frr << "\n";
  return os.str();
}

}  // namespace xpress
