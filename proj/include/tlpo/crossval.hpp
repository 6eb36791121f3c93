#pragma once

// Cross-validation AUC estimators: pooled and averaged K-fold, leave-one-out,
// leave-pair-out, and the complete pairwise pass that feeds the tournament.
//
// Every round trains on the complement of its held-out set and is seeded by
// round_seed(seed, held-out units), so results never depend on execution
// order or on the `jobs` count.

#include "tlpo/dataset.hpp"
#include "tlpo/learners.hpp"
#include "tlpo/parallel.hpp"
#include "tlpo/rng.hpp"
#include "tlpo/roc.hpp"
#include "tlpo/stats.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

namespace tlpo {

/// Seed of the round that holds out `units` (any order).
inline Seed round_seed(Seed seed, std::span<const std::size_t> units) {
  std::vector<std::size_t> sorted(units.begin(), units.end());
  std::sort(sorted.begin(), sorted.end());
  return mix_seed_span(mix_seed(seed, tag::cv_rounds), sorted);
}

/// Scores for one held-out set, with the round's own seed.
inline std::vector<double> score_round(const HeldOutScorer& scorer, Seed seed, std::span<const std::size_t> held_out) {
  return scorer.held_out_scores(held_out, round_seed(seed, held_out));
}

/// One unit's score from a cross-validation round.
struct CvPrediction {
  std::size_t unit = 0;
  double score = 0.0;
  std::size_t round = 0;
};

// ------------------------------------------------------------ K-fold ----

/// fold[u] for every unit u. Units are shuffled with the run seed and dealt
/// round-robin; the stratified variant deals positives first, then
/// negatives continuing from the next fold.
inline std::vector<std::size_t> assign_folds(const Dataset& ds, std::size_t k, Seed seed, bool stratified) {
  const std::size_t m = ds.size();
  if (k < 2 || k > m) throw Error("kfold: need 2 <= k <= m (k=" + std::to_string(k) + ", m=" + std::to_string(m) + ")");
  Stream stream(mix_seed(seed, tag::fold_shuffle));
  std::vector<std::size_t> fold(m);
  std::size_t next = 0;
  auto deal = [&](std::vector<std::size_t> units) {
    stream.shuffle(std::span<std::size_t>(units));
    for (std::size_t u : units) fold[u] = next++ % k;
  };
  if (stratified) {
    deal(ds.positives());
    deal(ds.negatives());
  } else {
    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), std::size_t{0});
    deal(std::move(all));
  }
  return fold;
}

inline std::vector<std::vector<std::size_t>> fold_members(std::span<const std::size_t> fold, std::size_t k) {
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t u = 0; u < fold.size(); ++u) members[fold[u]].push_back(u);
  return members;
}

/// Held-out predictions of every unit, tagged with the fold that made them.
inline std::vector<CvPrediction> kfold_predictions(const HeldOutScorer& scorer, std::span<const std::size_t> fold,
                                                   std::size_t k, Seed seed, std::size_t jobs = 1) {
  const auto members = fold_members(fold, k);
  std::vector<std::vector<double>> scores(k);
  parallel_for(k, jobs, [&](std::size_t f) {
    if (!members[f].empty()) scores[f] = score_round(scorer, seed, members[f]);
  });
  std::vector<CvPrediction> out(fold.size());
  for (std::size_t f = 0; f < k; ++f)
    for (std::size_t r = 0; r < members[f].size(); ++r) out[members[f][r]] = {members[f][r], scores[f][r], f};
  return out;
}

/// Pooled K-fold: one AUC over all held-out predictions together.
inline double kfold_pooled_auc(const Dataset& ds, const HeldOutScorer& scorer, std::size_t k, Seed seed,
                               bool stratified = false, std::size_t jobs = 1) {
  const auto fold = assign_folds(ds, k, seed, stratified);
  const auto pred = kfold_predictions(scorer, fold, k, seed, jobs);
  std::vector<double> pooled(ds.size());
  for (const auto& p : pred) pooled[p.unit] = p.score;
  return wmw_auc(pooled, ds.labels());
}

inline double kfold_pooled_auc(const Dataset& ds, const Learner& learner, std::size_t k, Seed seed,
                               bool stratified = false, std::size_t jobs = 1) {
  return kfold_pooled_auc(ds, *learner.prepare(ds), k, seed, stratified, jobs);
}

struct AveragedAuc {
  double auc = 0.0;
  std::size_t usable_folds = 0;
};

/// Averaged K-fold: mean of per-fold AUCs over folds holding both classes.
inline AveragedAuc kfold_averaged_auc(const Dataset& ds, const HeldOutScorer& scorer, std::size_t k, Seed seed,
                                      bool stratified = false, std::size_t jobs = 1) {
  const auto fold = assign_folds(ds, k, seed, stratified);
  const auto pred = kfold_predictions(scorer, fold, k, seed, jobs);
  std::vector<std::vector<double>> scores(k);
  std::vector<std::vector<Label>> labels(k);
  for (const auto& p : pred) {
    scores[p.round].push_back(p.score);
    labels[p.round].push_back(ds.labels()[p.unit]);
  }
  CompensatedSum sum;
  AveragedAuc out;
  for (std::size_t f = 0; f < k; ++f) {
    const auto c = detail::count_labels(labels[f]);
    if (c.n_pos == 0 || c.n_neg == 0) continue;
    sum.add(wmw_auc(scores[f], labels[f]));
    ++out.usable_folds;
  }
  if (out.usable_folds == 0) throw Error("kfold averaged: no fold contains both classes");
  out.auc = sum.value() / static_cast<double>(out.usable_folds);
  return out;
}

inline AveragedAuc kfold_averaged_auc(const Dataset& ds, const Learner& learner, std::size_t k, Seed seed,
                                      bool stratified = false, std::size_t jobs = 1) {
  return kfold_averaged_auc(ds, *learner.prepare(ds), k, seed, stratified, jobs);
}

// --------------------------------------------------------------- LOO ----

/// f_{I\{i}}(i) for every unit i.
inline std::vector<double> loo_predictions(const Dataset& ds, const HeldOutScorer& scorer, Seed seed,
                                           std::size_t jobs = 1) {
  if (ds.size() < 2) throw Error("loo: need m >= 2");
  std::vector<double> pred(ds.size());
  parallel_for(ds.size(), jobs, [&](std::size_t i) {
    const std::size_t unit[1] = {i};
    pred[i] = score_round(scorer, seed, unit)[0];
  });
  return pred;
}

inline std::vector<double> loo_predictions(const Dataset& ds, const Learner& learner, Seed seed, std::size_t jobs = 1) {
  return loo_predictions(ds, *learner.prepare(ds), seed, jobs);
}

/// Pooled leave-one-out AUC.
inline double loo_auc(const Dataset& ds, const HeldOutScorer& scorer, Seed seed, std::size_t jobs = 1) {
  detail::require_both_classes(ds.labels(), "loo");
  return wmw_auc(loo_predictions(ds, scorer, seed, jobs), ds.labels());
}

inline double loo_auc(const Dataset& ds, const Learner& learner, Seed seed, std::size_t jobs = 1) {
  return loo_auc(ds, *learner.prepare(ds), seed, jobs);
}

// ------------------------------------------------------ pair tables ----

/// Scores of both units of every held-out pair {i, j}, i < j, stored in
/// lexicographic pair order. Both scores of an entry come from one model.
class PairPredictionTable {
 public:
  struct Entry {
    double score_i = 0.0;  // f_{I\{i,j}}(i), i the smaller index
    double score_j = 0.0;  // f_{I\{i,j}}(j)
  };

  PairPredictionTable() = default;
  explicit PairPredictionTable(std::size_t m) : m_(m), entries_(m < 2 ? 0 : m * (m - 1) / 2) {}

  std::size_t units() const noexcept { return m_; }
  std::size_t size() const noexcept { return entries_.size(); }

  static std::size_t pair_index(std::size_t m, std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return i * (2 * m - i - 1) / 2 + (j - i - 1);
  }

  Entry& entry(std::size_t i, std::size_t j) { return entries_[checked_index(i, j)]; }
  const Entry& entry(std::size_t i, std::size_t j) const { return entries_[checked_index(i, j)]; }

  /// (f(i), f(j)) from the round holding out {i, j}, oriented as asked.
  std::pair<double, double> scores(std::size_t i, std::size_t j) const {
    const auto& e = entry(i, j);
    return i < j ? std::pair{e.score_i, e.score_j} : std::pair{e.score_j, e.score_i};
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  std::size_t checked_index(std::size_t i, std::size_t j) const {
    if (i == j || i >= m_ || j >= m_) throw Error("pair table: invalid pair");
    return pair_index(m_, i, j);
  }

  std::size_t m_ = 0;
  std::vector<Entry> entries_;
};

inline std::vector<IndexPair> all_pairs(std::size_t m) {
  std::vector<IndexPair> pairs;
  pairs.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) pairs.push_back({i, j});
  return pairs;
}

/// Runs the given held-out pairs (i < j) into `table`.
inline void fill_pairs(PairPredictionTable& table, const HeldOutScorer& scorer, Seed seed,
                       std::span<const IndexPair> pairs, std::size_t jobs) {
  std::vector<PairPredictionTable::Entry> results(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t p) {
    const std::size_t held[2] = {std::min(pairs[p].i, pairs[p].j), std::max(pairs[p].i, pairs[p].j)};
    const auto s = score_round(scorer, seed, held);
    results[p] = {s[0], s[1]};
  });
  for (std::size_t p = 0; p < pairs.size(); ++p) table.entry(pairs[p].i, pairs[p].j) = results[p];
}

/// Complete leave-pair-out: every one of the m(m-1)/2 pairs, same-class
/// pairs included.
inline PairPredictionTable complete_pair_predictions(const Dataset& ds, const HeldOutScorer& scorer, Seed seed,
                                                     std::size_t jobs = 1) {
  if (ds.size() < 3) throw Error("complete pair predictions: need m >= 3");
  PairPredictionTable table(ds.size());
  const auto pairs = all_pairs(ds.size());
  fill_pairs(table, scorer, seed, pairs, jobs);
  return table;
}

inline PairPredictionTable complete_pair_predictions(const Dataset& ds, const Learner& learner, Seed seed,
                                                     std::size_t jobs = 1) {
  return complete_pair_predictions(ds, *learner.prepare(ds), seed, jobs);
}

// --------------------------------------------------------------- LPO ----

/// Mean of H(f(i) - f(j)) over positive i, negative j, read from a table
/// that holds at least those pairs.
inline double lpo_auc_from_table(const PairPredictionTable& table, std::span<const Label> labels) {
  if (labels.size() != table.units()) throw Error("lpo: label count does not match table");
  const auto c = detail::require_both_classes(labels, "lpo");
  CompensatedSum sum;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!is_positive(labels[i])) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (is_positive(labels[j])) continue;
      const auto [fi, fj] = table.scores(i, j);
      sum.add(compare_scores(fi, fj));
    }
  }
  return sum.value() / (static_cast<double>(c.n_pos) * static_cast<double>(c.n_neg));
}

/// Leave-pair-out AUC: |I+| |I-| rounds, each comparing its own two units.
inline double lpo_auc(const Dataset& ds, const HeldOutScorer& scorer, Seed seed, std::size_t jobs = 1) {
  if (ds.size() < 3) throw Error("lpo: need m >= 3");
  detail::require_both_classes(ds.labels(), "lpo");
  std::vector<IndexPair> pairs;
  for (std::size_t i : ds.positives())
    for (std::size_t j : ds.negatives()) pairs.push_back({std::min(i, j), std::max(i, j)});
  PairPredictionTable table(ds.size());
  fill_pairs(table, scorer, seed, pairs, jobs);
  return lpo_auc_from_table(table, ds.labels());
}

inline double lpo_auc(const Dataset& ds, const Learner& learner, Seed seed, std::size_t jobs = 1) {
  return lpo_auc(ds, *learner.prepare(ds), seed, jobs);
}

}  // namespace tlpo
