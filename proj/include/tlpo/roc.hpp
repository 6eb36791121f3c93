#pragma once

// ROC analysis over real-valued predictions: pair comparison (Heaviside),
// the Wilcoxon-Mann-Whitney AUC, threshold classification and the ROC
// curve with trapezoid AUC.
//
// Raw scores are compared with exact equality: a tie is a defined outcome
// worth one half, not a rounding accident.

#include "tlpo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

namespace tlpo {

/// 1 for a > 0, 0.5 for a == 0, 0 for a < 0.
inline double heaviside(double a) {
  if (std::isnan(a)) throw Error("heaviside: NaN argument");
  if (a > 0.0) return 1.0;
  if (a < 0.0) return 0.0;
  return 0.5;
}

/// Pair comparison of two scores, H(a - b), without forming the difference
/// (so that distinct scores never compare as tied through cancellation).
inline double compare_scores(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) throw Error("compare_scores: NaN argument");
  if (a > b) return 1.0;
  if (a < b) return 0.0;
  return 0.5;
}

struct ScoredSample {
  std::vector<double> scores;
  std::vector<Label> labels;

  std::size_t size() const noexcept { return scores.size(); }
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

namespace detail {

inline void check_scored(std::span<const double> scores, std::span<const Label> labels, const char* what) {
  if (scores.size() != labels.size()) throw Error(std::string(what) + ": scores and labels differ in length");
  for (double s : scores)
    if (!std::isfinite(s)) throw Error(std::string(what) + ": non-finite score");
}

inline ClassCounts count_labels(std::span<const Label> labels) {
  ClassCounts c;
  for (Label l : labels) (is_positive(l) ? c.n_pos : c.n_neg)++;
  return c;
}

inline ClassCounts require_both_classes(std::span<const Label> labels, const char* what) {
  const auto c = count_labels(labels);
  if (c.n_pos == 0 || c.n_neg == 0)
    throw Error(std::string(what) + ": both classes required (positives=" + std::to_string(c.n_pos) +
                ", negatives=" + std::to_string(c.n_neg) + ")");
  return c;
}

}  // namespace detail

/// Mann-Whitney U in half-units: twice the number of (positive, negative)
/// pairs won by the positive, ties counting once. Integral, so the final
/// AUC is a single exact division.
inline double wmw_twice_u(std::span<const double> scores, std::span<const Label> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // For each tie group: positives beat every negative strictly below and
  // half-beat the negatives inside the group.
  double twice_u = 0.0;
  std::size_t neg_below = 0;
  for (std::size_t g = 0; g < order.size();) {
    std::size_t h = g;
    std::size_t pos_in = 0, neg_in = 0;
    while (h < order.size() && scores[order[h]] == scores[order[g]]) {
      (is_positive(labels[order[h]]) ? pos_in : neg_in)++;
      ++h;
    }
    twice_u += static_cast<double>(pos_in) * static_cast<double>(2 * neg_below + neg_in);
    neg_below += neg_in;
    g = h;
  }
  return twice_u;
}

/// AUC as the Wilcoxon-Mann-Whitney statistic: the mean of H(s_i - s_j)
/// over positive i and negative j. O(m log m) via sorting.
inline double wmw_auc(std::span<const double> scores, std::span<const Label> labels) {
  detail::check_scored(scores, labels, "wmw_auc");
  const auto c = detail::require_both_classes(labels, "wmw_auc");
  return wmw_twice_u(scores, labels) / (2.0 * static_cast<double>(c.n_pos) * static_cast<double>(c.n_neg));
}

inline double wmw_auc(const ScoredSample& s) { return wmw_auc(s.scores, s.labels); }

/// Unit i is predicted positive iff score_i >= t.
inline ConfusionCounts classify_at(std::span<const double> scores, std::span<const Label> labels, double t) {
  if (std::isnan(t)) throw Error("classify_at: NaN threshold");
  detail::check_scored(scores, labels, "classify_at");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_pos = scores[i] >= t;
    if (is_positive(labels[i]))
      (predicted_pos ? c.tp : c.fn)++;
    else
      (predicted_pos ? c.fp : c.tn)++;
  }
  return c;
}

inline ConfusionCounts classify_at(const ScoredSample& s, double t) { return classify_at(s.scores, s.labels, t); }

/// ROC curve from a descending threshold sweep over the distinct scores.
/// All units sharing a score cross the threshold together, so ties become
/// diagonal segments and the trapezoid area equals the WMW AUC exactly.
/// The leading (0,0) point carries threshold +inf; every other point's
/// threshold is the score at which it is reached.
inline RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels) {
  detail::check_scored(scores, labels, "roc_curve");
  const auto c = detail::require_both_classes(labels, "roc_curve");
  const double P = static_cast<double>(c.n_pos);
  const double N = static_cast<double>(c.n_neg);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  // Area accumulated in count units (fp steps x tp heights, doubled) to stay
  // integral until the final division.
  double twice_area = 0.0;
  for (std::size_t g = 0; g < order.size();) {
    const double t = scores[order[g]];
    std::size_t h = g, dtp = 0, dfp = 0;
    while (h < order.size() && scores[order[h]] == t) {
      (is_positive(labels[order[h]]) ? dtp : dfp)++;
      ++h;
    }
    twice_area += static_cast<double>(dfp) * static_cast<double>(2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    curve.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P, t});
    g = h;
  }
  // The last group is the minimum score, where fp == N and tp == P: (1,1).
  curve.auc = twice_area / (2.0 * P * N);
  return curve;
}

inline RocCurve roc_curve(const ScoredSample& s) { return roc_curve(s.scores, s.labels); }

/// Trapezoid rule over an arbitrary (fpr, tpr) polyline, in plain floating
/// point. Used to cross-check RocCurve::auc.
inline double trapezoid_auc(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k)
    area += (points[k].fpr - points[k - 1].fpr) * (points[k].tpr + points[k - 1].tpr) / 2.0;
  return area;
}

/// CSV with header fpr,tpr,threshold. The +inf threshold is written "inf".
inline void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "fpr,tpr,threshold\n";
  for (const auto& p : curve.points) {
    out << detail::format_double(p.fpr) << ',' << detail::format_double(p.tpr) << ',';
    if (std::isinf(p.threshold))
      out << (p.threshold > 0 ? "inf" : "-inf");
    else
      out << detail::format_double(p.threshold);
    out << '\n';
  }
}

}  // namespace tlpo
