#pragma once

// Monte-Carlo driver: repeats training draws over a grid of designs, runs
// the requested cross-validation estimators for each learner, and
// aggregates AUC and delta-AUC (estimate minus ground truth) statistics.
//
// Repetitions are the unit of parallel work. Each repetition writes to its
// own slot; slots are folded into the running statistics in repetition
// order, so reports are identical for any worker count.

#include "tlpo/crossval.hpp"
#include "tlpo/learners.hpp"
#include "tlpo/parallel.hpp"
#include "tlpo/stats.hpp"
#include "tlpo/synth.hpp"
#include "tlpo/tournament.hpp"

#include <json.hpp>

#include <bit>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tlpo {

enum class Estimator { loo, lpo, tlpo, kfold_pooled, kfold_averaged };

inline const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::loo: return "loo";
    case Estimator::lpo: return "lpo";
    case Estimator::tlpo: return "tlpo";
    case Estimator::kfold_pooled: return "kfold-pooled";
    case Estimator::kfold_averaged: return "kfold-averaged";
  }
  return "?";
}

inline Estimator parse_estimator(std::string_view s) {
  for (auto e : {Estimator::loo, Estimator::lpo, Estimator::tlpo, Estimator::kfold_pooled, Estimator::kfold_averaged})
    if (s == estimator_name(e)) return e;
  throw Error("unknown estimator '" + std::string(s) + "'");
}

inline std::vector<Estimator> parse_estimators(std::string_view list) {
  std::vector<Estimator> out;
  for (auto cell : detail::split_commas(list)) {
    const auto e = parse_estimator(detail::trim(cell));
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  }
  if (out.empty()) throw Error("estimator list is empty");
  return out;
}

/// Learner settings for simulation runs. Ridge shrinks the intercept along
/// with the weights (constant kernel term 1); with a free intercept the
/// pooled LOO estimate stays strongly biased even at d >> m.
inline LearnerOptions experiment_learner_options() {
  LearnerOptions o;
  o.ridge.intercept = Intercept::penalized;
  return o;
}

/// Settings shared by every cell of an experiment.
struct RunSettings {
  std::vector<std::string> learners{"ridge", "knn"};
  LearnerOptions learner_options = experiment_learner_options();
  std::vector<Estimator> estimators{Estimator::loo, Estimator::lpo, Estimator::tlpo};
  std::size_t repetitions = 1000;
  std::size_t n_test = 10000;
  std::size_t kfolds = 5;
  bool stratified = false;
  std::size_t jobs = 1;
};

struct ExperimentConfig {
  std::vector<SynthSpec> grid;  // per-spec seeds are ignored; derived from master_seed
  RunSettings settings;
  Seed master_seed = 0;
};

/// Identifies a cell in reports. `signal` is empty for subsampled real data.
struct CellKey {
  std::string source = "synthetic";
  std::size_t m = 0;
  double pos_fraction = 0.0;
  std::size_t d = 0;
  std::optional<std::size_t> signal;
  std::optional<double> mu;
};

/// Aggregates for one (cell, learner, estimator).
struct EstimateRow {
  CellKey cell;
  std::string learner;
  Estimator estimator = Estimator::loo;
  RunningStats auc;
  RunningStats delta;
  RunningStats xi;           // tlpo only
  RunningStats ties_broken;  // tlpo only
  RunningStats truth;
  RunningStats usable_folds;  // kfold-averaged only
};

struct EstimateReport {
  CellKey cell;
  Seed seed = 0;
  std::vector<EstimateRow> rows;
  std::string error;  // non-empty when the cell failed
};

namespace detail {

struct EstimateSample {
  double auc = 0.0;
  double xi = 0.0;
  double ties = 0.0;
  double usable = 0.0;
};

/// Results of one repetition: [learner][estimator] plus the truth per learner.
struct RepetitionResult {
  std::vector<std::vector<EstimateSample>> est;
  std::vector<double> truth;
};

/// Ground truth for models trained on the full training draw, one per learner.
using TruthFn = std::function<std::vector<double>(std::span<const TrainedModel* const>)>;

inline RepetitionResult evaluate_repetition(const Dataset& train, const std::vector<LearnerPtr>& learners,
                                            const RunSettings& st, Seed cv_seed, const TruthFn* truth_fn) {
  RepetitionResult res;
  for (const auto& learner : learners) {
    const auto scorer = learner->prepare(train);
    std::vector<EstimateSample> row(st.estimators.size());
    std::optional<TournamentResult> tour;
    const bool want_tlpo =
        std::find(st.estimators.begin(), st.estimators.end(), Estimator::tlpo) != st.estimators.end();
    if (want_tlpo) {
      TournamentResult t;
      t.table = complete_pair_predictions(train, *scorer, cv_seed);
      t.graph = build_tournament(t.table);
      t.scores = tournament_scores(t.graph);
      t.auc = tlpo_auc(t.scores, train.labels());
      t.consistency = consistency(t.graph, cv_seed);
      tour = std::move(t);
    }
    for (std::size_t e = 0; e < st.estimators.size(); ++e) {
      auto& out = row[e];
      switch (st.estimators[e]) {
        case Estimator::loo: out.auc = loo_auc(train, *scorer, cv_seed); break;
        case Estimator::lpo:
          // Same per-round seeds as the direct estimator, so this is exact.
          out.auc = tour ? lpo_auc_from_table(tour->table, train.labels()) : lpo_auc(train, *scorer, cv_seed);
          break;
        case Estimator::tlpo:
          out.auc = tour->auc;
          out.xi = tour->consistency.xi;
          out.ties = static_cast<double>(tour->consistency.ties_broken);
          break;
        case Estimator::kfold_pooled:
          out.auc = kfold_pooled_auc(train, *scorer, st.kfolds, cv_seed, st.stratified);
          break;
        case Estimator::kfold_averaged: {
          const auto a = kfold_averaged_auc(train, *scorer, st.kfolds, cv_seed, st.stratified);
          out.auc = a.auc;
          out.usable = static_cast<double>(a.usable_folds);
          break;
        }
      }
    }
    res.est.push_back(std::move(row));
  }
  if (truth_fn) {
    std::vector<ModelPtr> models;
    std::vector<const TrainedModel*> view;
    for (const auto& learner : learners) {
      models.push_back(learner->fit(train, mix_seed(cv_seed, 0x66696e616cULL)));
      view.push_back(models.back().get());
    }
    res.truth = (*truth_fn)(view);
  } else {
    res.truth.assign(learners.size(), 0.5);
  }
  return res;
}

inline std::vector<LearnerPtr> make_learners(const RunSettings& st) {
  if (st.learners.empty()) throw Error("no learners requested");
  if (st.estimators.empty()) throw Error("no estimators requested");
  if (st.repetitions < 1) throw Error("repetitions must be >= 1");
  std::vector<LearnerPtr> out;
  for (const auto& name : st.learners) out.push_back(make_learner(name, st.learner_options));
  return out;
}

inline EstimateReport aggregate(const CellKey& key, Seed seed, const RunSettings& st,
                                const std::vector<RepetitionResult>& reps) {
  EstimateReport rep;
  rep.cell = key;
  rep.seed = seed;
  for (std::size_t l = 0; l < st.learners.size(); ++l)
    for (std::size_t e = 0; e < st.estimators.size(); ++e) {
      EstimateRow row;
      row.cell = key;
      row.learner = st.learners[l];
      row.estimator = st.estimators[e];
      for (const auto& r : reps) {
        const auto& s = r.est[l][e];
        row.auc.push(s.auc);
        row.delta.push(s.auc - r.truth[l]);
        row.truth.push(r.truth[l]);
        if (row.estimator == Estimator::tlpo) {
          row.xi.push(s.xi);
          row.ties_broken.push(s.ties);
        }
        if (row.estimator == Estimator::kfold_averaged) row.usable_folds.push(s.usable);
      }
      rep.rows.push_back(std::move(row));
    }
  return rep;
}

}  // namespace detail

/// Seed of repetition `rep` within a cell.
inline Seed repetition_seed(Seed cell_seed, std::size_t rep) { return mix_seed(cell_seed, 0x726570ULL, rep); }

/// One design, many repetitions. Truth is exactly 0.5 for non-signal
/// designs; otherwise the WMW AUC of the full-data model on an independent
/// n_test draw.
inline EstimateReport run_cell(const SynthSpec& spec, const RunSettings& st, Seed seed) {
  validate(spec);
  const auto learners = detail::make_learners(st);
  std::vector<detail::RepetitionResult> reps(st.repetitions);
  parallel_for(st.repetitions, st.jobs, [&](std::size_t r) {
    SynthSpec s = spec;
    s.seed = repetition_seed(seed, r);
    const auto train = generate(s);
    const Seed cv_seed = mix_seed(s.seed, tag::cv_rounds);
    if (spec.signal_features == 0) {
      reps[r] = detail::evaluate_repetition(train, learners, st, cv_seed, nullptr);
    } else {
      const detail::TruthFn truth = [&](std::span<const TrainedModel* const> models) {
        return test_set_aucs(s, st.n_test, models);
      };
      reps[r] = detail::evaluate_repetition(train, learners, st, cv_seed, &truth);
    }
  });
  CellKey key{"synthetic", spec.m, spec.pos_fraction, spec.d, spec.signal_features, spec.mu};
  return detail::aggregate(key, seed, st, reps);
}

/// Draws `take` units without replacement (round(fraction * take) of them
/// positive) and returns {drawn, remainder}, each in ascending index order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> draw_subsample(const Dataset& pool,
                                                                                    std::size_t take,
                                                                                    double fraction, Seed seed) {
  const auto n_pos = positive_count(fraction, take);
  if (n_pos == 0 || n_pos >= take) throw Error("subsample: fraction leaves a class empty");
  auto pos = pool.positives();
  auto neg = pool.negatives();
  if (pos.size() < n_pos + 1 || neg.size() < take - n_pos + 1)
    throw Error("subsample: pool too small for take=" + std::to_string(take) +
                " at fraction=" + std::to_string(fraction));
  Stream stream(mix_seed(seed, tag::subsample));
  stream.shuffle(std::span<std::size_t>(pos));
  stream.shuffle(std::span<std::size_t>(neg));
  std::vector<char> in(pool.size(), 0);
  for (std::size_t a = 0; a < n_pos; ++a) in[pos[a]] = 1;
  for (std::size_t a = 0; a < take - n_pos; ++a) in[neg[a]] = 1;
  std::vector<std::size_t> drawn, rest;
  for (std::size_t i = 0; i < pool.size(); ++i) (in[i] ? drawn : rest).push_back(i);
  return {std::move(drawn), std::move(rest)};
}

/// Real-data protocol: each repetition trains/cross-validates on a
/// subsample of `take` units and scores the full-sample model on all units
/// not drawn.
inline EstimateReport run_subsample_cell(const Dataset& pool, std::size_t take, double fraction, const RunSettings& st,
                                         Seed seed) {
  if (take < 3 || take >= pool.size()) throw Error("subsample: need 3 <= take < pool size");
  const auto learners = detail::make_learners(st);
  std::vector<detail::RepetitionResult> reps(st.repetitions);
  parallel_for(st.repetitions, st.jobs, [&](std::size_t r) {
    const Seed rs = repetition_seed(seed, r);
    const auto [drawn, rest] = draw_subsample(pool, take, fraction, rs);
    const auto train = select_rows(pool, drawn);
    const detail::TruthFn truth = [&](std::span<const TrainedModel* const> models) {
      std::vector<Label> labels;
      for (std::size_t u : rest) labels.push_back(pool.labels()[u]);
      std::vector<double> out;
      for (const auto* model : models) {
        std::vector<double> scores;
        scores.reserve(rest.size());
        for (std::size_t u : rest) scores.push_back(model->predict(pool.row(u)));
        out.push_back(wmw_auc(scores, labels));
      }
      return out;
    };
    reps[r] = detail::evaluate_repetition(train, learners, st, mix_seed(rs, tag::cv_rounds), &truth);
  });
  CellKey key{"subsample", take, fraction, pool.dims(), std::nullopt, std::nullopt};
  return detail::aggregate(key, seed, st, reps);
}

/// Cell seed from the master seed and the design itself, so adding or
/// reordering cells leaves other cells' streams alone.
inline Seed cell_seed(Seed master, const SynthSpec& s) {
  return mix_seed(master, s.m, std::bit_cast<std::uint64_t>(s.pos_fraction), s.d, s.signal_features,
                  std::bit_cast<std::uint64_t>(s.mu));
}

inline Seed subsample_cell_seed(Seed master, std::size_t take, double fraction) {
  return mix_seed(master, tag::subsample, take, std::bit_cast<std::uint64_t>(fraction));
}

/// Runs every cell; a failing cell is reported and the rest continue.
inline std::vector<EstimateReport> run_grid(const ExperimentConfig& cfg,
                                            const std::function<void(const EstimateReport&)>& on_cell = {}) {
  std::vector<EstimateReport> out;
  for (const auto& spec : cfg.grid) {
    const Seed seed = cell_seed(cfg.master_seed, spec);
    EstimateReport rep;
    try {
      rep = run_cell(spec, cfg.settings, seed);
    } catch (const std::exception& ex) {
      rep.cell = {"synthetic", spec.m, spec.pos_fraction, spec.d, spec.signal_features, spec.mu};
      rep.seed = seed;
      rep.error = ex.what();
    }
    if (on_cell) on_cell(rep);
    out.push_back(std::move(rep));
  }
  return out;
}

/// Class fractions 10%..50% in steps of 10%.
inline std::vector<double> default_fractions() { return {0.1, 0.2, 0.3, 0.4, 0.5}; }

/// 5 fractions x {(d=10,s=0), (d=1000,s=0), (d=10,s=1), (d=1000,s=10)}, m = 30.
inline std::vector<SynthSpec> synthetic_preset_grid() {
  const std::pair<std::size_t, std::size_t> designs[] = {{10, 0}, {1000, 0}, {10, 1}, {1000, 10}};
  std::vector<SynthSpec> grid;
  for (const auto& [d, s] : designs)
    for (double f : default_fractions()) grid.push_back({30, f, d, s, 0.5, 0});
  return grid;
}

// ------------------------------------------------------------ output ----

inline constexpr const char* kReportHeader =
    "source,m,pos_fraction,d,signal,mu,learner,estimator,mean_auc,var_auc,mean_delta,var_delta,mean_xi,"
    "mean_ties_broken,reps";

/// One line per (cell, learner, estimator); failed cells produce no rows.
inline std::string render_report_csv(const std::vector<EstimateReport>& reports) {
  using detail::format_double;
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& rep : reports)
    for (const auto& row : rep.rows) {
      const auto& c = row.cell;
      out << c.source << ',' << c.m << ',' << format_double(c.pos_fraction) << ',' << c.d << ','
          << (c.signal ? std::to_string(*c.signal) : std::string()) << ','
          << (c.mu ? format_double(*c.mu) : std::string()) << ',' << row.learner << ','
          << estimator_name(row.estimator) << ',' << format_double(row.auc.mean()) << ','
          << format_double(row.auc.variance()) << ',' << format_double(row.delta.mean()) << ','
          << format_double(row.delta.variance()) << ',';
      if (row.xi.count())
        out << format_double(row.xi.mean()) << ',' << format_double(row.ties_broken.mean());
      else
        out << ',';
      out << ',' << row.auc.count() << '\n';
    }
  return out.str();
}

inline const char* tool_version() { return "1.0.0"; }

/// Config echo, per-cell seeds and errors, and the hash of report.csv.
inline nlohmann::json render_manifest(const ExperimentConfig& cfg, const std::vector<EstimateReport>& reports,
                                      const std::string& mode, const std::string& report_hash) {
  nlohmann::json j;
  j["tool"] = "tlpo";
  j["version"] = tool_version();
  j["mode"] = mode;
  j["master_seed"] = cfg.master_seed;
  const auto& st = cfg.settings;
  j["repetitions"] = st.repetitions;
  j["n_test"] = st.n_test;
  j["kfolds"] = st.kfolds;
  j["stratified"] = st.stratified;
  j["learners"] = st.learners;
  j["ridge_lambda"] = st.learner_options.ridge.lambda;
  j["ridge_intercept"] = st.learner_options.ridge.intercept == Intercept::centered ? "centered" : "penalized";
  j["ridge_bias"] = st.learner_options.ridge.bias;
  j["knn_k"] = st.learner_options.knn.k;
  j["knn_epsilon"] = st.learner_options.knn.epsilon;
  j["variance"] = "population (divide by repetitions)";
  j["ground_truth"] = mode == "subsample" ? "WMW AUC of the full-subsample model on the units not drawn"
                                          : "0.5 for non-signal designs; test-set WMW AUC otherwise";
  auto& est = j["estimators"] = nlohmann::json::array();
  for (auto e : st.estimators) est.push_back(estimator_name(e));
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json c;
    c["source"] = r.cell.source;
    c["m"] = r.cell.m;
    c["pos_fraction"] = r.cell.pos_fraction;
    c["d"] = r.cell.d;
    if (r.cell.signal) c["signal"] = *r.cell.signal;
    if (r.cell.mu) c["mu"] = *r.cell.mu;
    c["seed"] = r.seed;
    if (!r.error.empty()) c["error"] = r.error;
    cells.push_back(std::move(c));
  }
  j["report_sha1"] = report_hash;
  return j;
}

}  // namespace tlpo
