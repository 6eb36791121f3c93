#pragma once

// Round-robin tournament over sample units built from complete pairwise
// held-out predictions. Unit i beats unit j when the model trained without
// both predicts higher for i. Out-degree scores rank the data and give the
// tournament AUC; circular triads measure how inconsistent the learner is.

#include "tlpo/crossval.hpp"
#include "tlpo/roc.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <vector>

namespace tlpo {

enum class Outcome : std::uint8_t { first_wins, second_wins, tie };

/// One outcome per unordered pair {i, j}, i < j, in lexicographic pair
/// order; "first" is the smaller index.
class TournamentGraph {
 public:
  TournamentGraph() = default;
  TournamentGraph(std::size_t m, std::vector<Outcome> outcomes) : m_(m), outcomes_(std::move(outcomes)) {
    if (outcomes_.size() != m_ * (m_ == 0 ? 0 : m_ - 1) / 2) throw Error("tournament: outcome count must be m(m-1)/2");
  }

  std::size_t units() const noexcept { return m_; }
  const std::vector<Outcome>& outcomes() const noexcept { return outcomes_; }

  /// Outcome of the pair oriented from i's side: first_wins means i beat j.
  Outcome outcome(std::size_t i, std::size_t j) const {
    if (i == j || i >= m_ || j >= m_) throw Error("tournament: invalid pair");
    const Outcome o = outcomes_[PairPredictionTable::pair_index(m_, i, j)];
    if (i < j || o == Outcome::tie) return o;
    return o == Outcome::first_wins ? Outcome::second_wins : Outcome::first_wins;
  }

  bool beats(std::size_t i, std::size_t j) const { return outcome(i, j) == Outcome::first_wins; }

  std::size_t tie_count() const {
    return static_cast<std::size_t>(std::count(outcomes_.begin(), outcomes_.end(), Outcome::tie));
  }

 private:
  std::size_t m_ = 0;
  std::vector<Outcome> outcomes_;
};

inline TournamentGraph build_tournament(const PairPredictionTable& table) {
  std::vector<Outcome> out;
  out.reserve(table.size());
  for (const auto& e : table.entries()) {
    const double h = compare_scores(e.score_i, e.score_j);
    out.push_back(h == 1.0 ? Outcome::first_wins : h == 0.0 ? Outcome::second_wins : Outcome::tie);
  }
  return TournamentGraph(table.units(), std::move(out));
}

/// S(i) = wins + 0.5 * ties.
struct TournamentScores {
  std::vector<double> s;
};

inline TournamentScores tournament_scores(const TournamentGraph& g) {
  const std::size_t m = g.units();
  // Half-points counted as integers, halved once at the end.
  std::vector<std::size_t> twice(m, 0);
  std::size_t p = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j, ++p) {
      switch (g.outcomes()[p]) {
        case Outcome::first_wins: twice[i] += 2; break;
        case Outcome::second_wins: twice[j] += 2; break;
        case Outcome::tie: ++twice[i]; ++twice[j]; break;
      }
    }
  TournamentScores out;
  out.s.reserve(m);
  for (std::size_t t : twice) out.s.push_back(static_cast<double>(t) / 2.0);
  return out;
}

/// The tournament AUC: the WMW statistic with S as the prediction.
inline double tlpo_auc(const TournamentScores& scores, std::span<const Label> labels) {
  if (labels.size() != scores.s.size()) throw Error("tlpo: label count does not match scores");
  return wmw_auc(scores.s, labels);
}

/// Units by score, highest first; equal scores keep ascending index.
inline std::vector<std::size_t> ranking(const TournamentScores& scores) {
  std::vector<std::size_t> order(scores.s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores.s[a] > scores.s[b]; });
  return order;
}

// -------------------------------------------------------- consistency ----

enum class TieBreak {
  lower_index,  // the lower unit index wins a tied pair
  seeded,       // a coin flip per tied pair from the tie seed
};

struct ConsistencyReport {
  std::int64_t c = 0;      // circular triads
  std::int64_t c_max = 0;  // maximum possible for m units
  double xi = 1.0;         // 1 - c / c_max
  std::size_t ties_broken = 0;
};

/// Most circular triads a tournament on m units can hold.
constexpr std::int64_t max_circular_triads(std::int64_t m) noexcept {
  if (m < 3) return 0;
  return m % 2 ? (m * m * m - m) / 24 : (m * m * m - 4 * m) / 24;
}

/// Replaces ties by strict outcomes.
inline TournamentGraph resolve_ties(const TournamentGraph& g, TieBreak rule = TieBreak::lower_index,
                                    Seed tie_seed = 0) {
  std::vector<Outcome> out = g.outcomes();
  Stream coin(mix_seed(tie_seed, tag::tournament));
  for (auto& o : out) {
    if (o != Outcome::tie) continue;
    o = rule == TieBreak::lower_index || coin.below(2) == 0 ? Outcome::first_wins : Outcome::second_wins;
  }
  return TournamentGraph(g.units(), std::move(out));
}

/// Circular triad count of a strict tournament from its integer scores:
/// c = m(m-1)(2m-1)/12 - (1/2) sum S(i)^2, evaluated in integers as
/// (m(m-1)(2m-1)/6 - sum S(i)^2) / 2.
inline std::int64_t circular_triads_strict(const TournamentGraph& strict) {
  const auto m = static_cast<std::int64_t>(strict.units());
  if (strict.tie_count() != 0) throw Error("circular triads: tournament has ties");
  std::vector<std::int64_t> wins(static_cast<std::size_t>(m), 0);
  std::size_t p = 0;
  for (std::size_t i = 0; i < strict.units(); ++i)
    for (std::size_t j = i + 1; j < strict.units(); ++j, ++p)
      ++wins[strict.outcomes()[p] == Outcome::first_wins ? i : j];
  std::int64_t sum_sq = 0;
  for (auto w : wins) sum_sq += w * w;
  return (m * (m - 1) * (2 * m - 1) / 6 - sum_sq) / 2;
}

/// Kendall-Babington Smith consistency. Ties are resolved first (and
/// counted in ties_broken) because the triad formula needs a strict
/// tournament.
inline ConsistencyReport consistency(const TournamentGraph& g, Seed tie_seed = 0,
                                     TieBreak rule = TieBreak::lower_index) {
  ConsistencyReport r;
  r.ties_broken = g.tie_count();
  const auto strict = r.ties_broken ? resolve_ties(g, rule, tie_seed) : g;
  r.c = circular_triads_strict(strict);
  r.c_max = max_circular_triads(static_cast<std::int64_t>(g.units()));
  r.xi = r.c_max == 0 ? 1.0 : 1.0 - static_cast<double>(r.c) / static_cast<double>(r.c_max);
  return r;
}

// ----------------------------------------------------------- bundle ----

/// Everything the tournament pass produces for one dataset.
struct TournamentResult {
  PairPredictionTable table;
  TournamentGraph graph;
  TournamentScores scores;
  double auc = 0.0;
  ConsistencyReport consistency;
};

inline TournamentResult run_tournament(const Dataset& ds, const Learner& learner, Seed seed, std::size_t jobs = 1) {
  detail::require_both_classes(ds.labels(), "tlpo");
  TournamentResult r;
  r.table = complete_pair_predictions(ds, learner, seed, jobs);
  r.graph = build_tournament(r.table);
  r.scores = tournament_scores(r.graph);
  r.auc = tlpo_auc(r.scores, ds.labels());
  r.consistency = consistency(r.graph, seed);
  return r;
}

// ----------------------------------------------------------- export ----

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::first_wins: return "i_wins";
    case Outcome::second_wins: return "j_wins";
    case Outcome::tie: return "tie";
  }
  return "?";
}

/// Adjacency list, one row per pair with i < j.
inline void write_tournament_csv(std::ostream& out, const TournamentGraph& g) {
  out << "i,j,outcome\n";
  std::size_t p = 0;
  for (std::size_t i = 0; i < g.units(); ++i)
    for (std::size_t j = i + 1; j < g.units(); ++j, ++p) out << i << ',' << j << ',' << outcome_name(g.outcomes()[p]) << '\n';
}

/// unit,score,label with label written as 1 / 0.
inline void write_scores_csv(std::ostream& out, const TournamentScores& scores, std::span<const Label> labels) {
  out << "unit,score,label\n";
  for (std::size_t i = 0; i < scores.s.size(); ++i)
    out << i << ',' << detail::format_double(scores.s[i]) << ',' << (is_positive(labels[i]) ? 1 : 0) << '\n';
}

}  // namespace tlpo
