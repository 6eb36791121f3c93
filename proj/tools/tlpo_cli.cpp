// tlpo: data generation, single-dataset evaluation, ROC export and
// Monte-Carlo experiments.

#include "tlpo/tlpo.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace tlpo;

namespace {

struct Globals {
  Seed seed = 0;
  std::size_t jobs = 1;
  std::string output;
};

struct LearnerFlags {
  double lambda = 1.0;
  std::string intercept = "penalized";
  std::size_t knn_k = 3;
  double constant_value = 0.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lambda", lambda, "ridge regularization")->capture_default_str();
    cmd->add_option("--intercept", intercept, "ridge intercept: penalized or centered")
        ->check(CLI::IsMember({"penalized", "centered"}))
        ->capture_default_str();
    cmd->add_option("--knn-k", knn_k, "neighbors for knn")->capture_default_str();
    cmd->add_option("--constant-value", constant_value, "prediction of the constant learner")->capture_default_str();
  }

  LearnerOptions options(Seed seed) const {
    LearnerOptions o = experiment_learner_options();
    o.ridge.lambda = lambda;
    o.ridge.intercept = intercept == "centered" ? Intercept::centered : Intercept::penalized;
    o.knn.k = knn_k;
    o.constant_value = constant_value;
    o.random_seed = seed;
    return o;
  }
};

double finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(std::string("internal error: non-finite ") + what);
  return v;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  return f;
}

void write_file(const fs::path& p, const std::string& text) {
  auto f = open_out(p);
  f << text;
  if (!f.flush()) throw Error("write failed for '" + p.string() + "'");
}

/// Git blob id: sha1("blob <len>\0" + content).
std::string git_blob_sha1(const std::string& content) {
  const std::string head = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || !EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) || !EVP_DigestUpdate(ctx, head.data(), head.size()) ||
      !EVP_DigestUpdate(ctx, content.data(), content.size()) || !EVP_DigestFinal_ex(ctx, md, &len)) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha1 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (auto cell : detail::split_commas(s)) {
    double v = 0.0;
    if (!detail::parse_double(detail::trim(cell), v)) throw Error("not a number: '" + std::string(cell) + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error("empty list '" + s + "'");
  return out;
}

std::vector<std::size_t> parse_count_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(s)) {
    if (!(v >= 0) || v != std::floor(v)) throw Error("expected non-negative integers in '" + s + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<std::string> parse_name_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto cell : detail::split_commas(s)) out.emplace_back(detail::trim(cell));
  if (out.empty()) throw Error("empty list '" + s + "'");
  return out;
}

// ------------------------------------------------------------ synth ----

struct SynthFlags {
  SynthSpec spec;
  std::size_t test_set = 0;
};

int cmd_synth(const Globals& g, SynthFlags f) {
  f.spec.seed = g.seed;
  const Dataset ds = f.test_set ? generate_test_set(f.spec, f.test_set) : generate(f.spec);
  if (g.output.empty() || g.output == "-") {
    write_csv(std::cout, ds);
  } else {
    save_csv(g.output, ds);
  }
  return 0;
}

// ------------------------------------------------------------- eval ----

struct EvalFlags {
  std::string input;
  std::string label = "label";
  std::string learner = "ridge";
  std::string estimators = "loo,lpo,tlpo";
  std::size_t k = 5;
  bool stratified = false;
  LearnerFlags lf;
};

int cmd_eval(const Globals& g, const EvalFlags& f) {
  const Dataset ds = load_csv(f.input, f.label);
  const auto ests = parse_estimators(f.estimators);
  const auto learner = make_learner(f.learner, f.lf.options(g.seed));
  const auto scorer = learner->prepare(ds);
  const auto counts = class_counts(ds);

  nlohmann::json j;
  j["input"] = f.input;
  j["learner"] = f.learner;
  j["seed"] = g.seed;
  j["m"] = ds.size();
  j["d"] = ds.dims();
  j["positives"] = counts.n_pos;
  j["negatives"] = counts.n_neg;
  auto& est = j["estimates"] = nlohmann::json::object();
  for (auto e : ests) {
    const char* name = estimator_name(e);
    switch (e) {
      case Estimator::loo: est[name] = finite(loo_auc(ds, *scorer, g.seed, g.jobs), name); break;
      case Estimator::lpo: est[name] = finite(lpo_auc(ds, *scorer, g.seed, g.jobs), name); break;
      case Estimator::kfold_pooled:
        est[name] = finite(kfold_pooled_auc(ds, *scorer, f.k, g.seed, f.stratified, g.jobs), name);
        break;
      case Estimator::kfold_averaged: {
        const auto a = kfold_averaged_auc(ds, *scorer, f.k, g.seed, f.stratified, g.jobs);
        est[name] = finite(a.auc, name);
        j["kfold_usable_folds"] = a.usable_folds;
        break;
      }
      case Estimator::tlpo: {
        detail::require_both_classes(ds.labels(), "tlpo");
        const auto table = complete_pair_predictions(ds, *scorer, g.seed, g.jobs);
        const auto graph = build_tournament(table);
        const auto scores = tournament_scores(graph);
        const auto cr = consistency(graph, g.seed);
        est[name] = finite(tlpo_auc(scores, ds.labels()), name);
        j["tlpo"] = {{"xi", finite(cr.xi, "xi")},
                     {"circular_triads", cr.c},
                     {"max_circular_triads", cr.c_max},
                     {"ties_broken", cr.ties_broken},
                     {"scores", scores.s}};
        break;
      }
    }
  }
  for (auto e : ests)
    if (e == Estimator::kfold_pooled || e == Estimator::kfold_averaged) {
      j["kfolds"] = f.k;
      j["stratified"] = f.stratified;
    }
  std::cout << j.dump(2) << '\n';
  return 0;
}

// -------------------------------------------------------------- roc ----

struct RocFlags {
  std::string input;
  std::string label = "label";
  std::string learner = "ridge";
  std::string mode = "tlpo";
  std::string test;
  std::string tournament_csv;
  std::string scores_csv;
  LearnerFlags lf;
};

int cmd_roc(const Globals& g, const RocFlags& f) {
  const Dataset ds = load_csv(f.input, f.label);
  const auto learner = make_learner(f.learner, f.lf.options(g.seed));
  RocCurve curve;
  if (f.mode == "tlpo") {
    if (!f.test.empty()) throw Error("--test is only used with --mode test");
    const auto t = run_tournament(ds, *learner, g.seed, g.jobs);
    curve = roc_curve(t.scores.s, ds.labels());
    if (!f.tournament_csv.empty()) {
      auto out = open_out(f.tournament_csv);
      write_tournament_csv(out, t.graph);
    }
    if (!f.scores_csv.empty()) {
      auto out = open_out(f.scores_csv);
      write_scores_csv(out, t.scores, ds.labels());
    }
  } else {
    if (f.test.empty()) throw Error("--mode test requires --test CSV");
    if (!f.tournament_csv.empty() || !f.scores_csv.empty())
      throw Error("--tournament-csv and --scores-csv need --mode tlpo");
    const Dataset test = load_csv(f.test, f.label);
    if (test.dims() != ds.dims()) throw Error("test set has a different feature count");
    const auto model = learner->fit(ds, g.seed);
    std::vector<double> scores;
    scores.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) scores.push_back(model->predict(test.row(i)));
    curve = roc_curve(scores, test.labels());
  }
  finite(curve.auc, "auc");
  if (g.output.empty() || g.output == "-") {
    write_roc_csv(std::cout, curve);
  } else {
    auto out = open_out(g.output);
    write_roc_csv(out, curve);
    std::cout << nlohmann::json{{"mode", f.mode}, {"auc", curve.auc}, {"points", curve.points.size()}}.dump() << '\n';
  }
  return 0;
}

// ------------------------------------------------------- experiment ----

struct ExperimentFlags {
  std::string preset;
  std::string subsample;
  std::string label = "label";
  std::size_t take = 30;
  std::size_t reps = 1000;
  std::size_t n_test = 10000;
  std::size_t m = 30;
  std::string fractions = "0.1,0.2,0.3,0.4,0.5";
  std::string dims = "10";
  std::string signal = "0";
  double mu = 0.5;
  std::string learners = "ridge,knn";
  std::string estimators = "loo,lpo,tlpo";
  std::size_t k = 5;
  bool stratified = false;
  bool quiet = false;
  LearnerFlags lf;
};

void log_cell(const EstimateReport& r, bool quiet) {
  if (quiet) return;
  std::cerr << r.cell.source << " m=" << r.cell.m << " f=" << r.cell.pos_fraction << " d=" << r.cell.d;
  if (r.cell.signal) std::cerr << " s=" << *r.cell.signal;
  if (r.error.empty())
    std::cerr << " done\n";
  else
    std::cerr << " FAILED: " << r.error << '\n';
}

int cmd_experiment(const Globals& g, const ExperimentFlags& f) {
  if (g.output.empty()) throw Error("experiment needs -o <directory>");
  if (!f.preset.empty() && f.preset != "paper-synthetic") throw Error("unknown preset '" + f.preset + "'");
  if (!f.preset.empty() && !f.subsample.empty()) throw Error("--preset and --subsample are exclusive");

  ExperimentConfig cfg;
  cfg.master_seed = g.seed;
  auto& st = cfg.settings;
  st.learners = parse_name_list(f.learners);
  st.learner_options = f.lf.options(g.seed);
  st.estimators = parse_estimators(f.estimators);
  st.repetitions = f.reps;
  st.n_test = f.n_test;
  st.kfolds = f.k;
  st.stratified = f.stratified;
  st.jobs = g.jobs;
  for (const auto& l : st.learners) make_learner(l, st.learner_options);  // reject unknown names up front

  std::vector<EstimateReport> reports;
  std::string mode;
  if (!f.subsample.empty()) {
    mode = "subsample";
    const Dataset pool = load_csv(f.subsample, f.label);
    for (double frac : parse_double_list(f.fractions)) {
      const Seed seed = subsample_cell_seed(g.seed, f.take, frac);
      EstimateReport rep;
      try {
        rep = run_subsample_cell(pool, f.take, frac, st, seed);
      } catch (const std::exception& ex) {
        rep.cell = {"subsample", f.take, frac, pool.dims(), std::nullopt, std::nullopt};
        rep.seed = seed;
        rep.error = ex.what();
      }
      log_cell(rep, f.quiet);
      reports.push_back(std::move(rep));
    }
  } else {
    if (f.preset == "paper-synthetic") {
      mode = "paper-synthetic";
      cfg.grid = synthetic_preset_grid();
    } else {
      mode = "grid";
      for (std::size_t d : parse_count_list(f.dims))
        for (std::size_t s : parse_count_list(f.signal)) {
          if (s > d) continue;
          for (double frac : parse_double_list(f.fractions)) cfg.grid.push_back({f.m, frac, d, s, f.mu, 0});
        }
      if (cfg.grid.empty()) throw Error("grid is empty");
    }
    reports = run_grid(cfg, [&](const EstimateReport& r) { log_cell(r, f.quiet); });
  }

  const fs::path dir(g.output);
  fs::create_directories(dir);
  const std::string csv = render_report_csv(reports);
  write_file(dir / "report.csv", csv);
  write_file(dir / "manifest.json", render_manifest(cfg, reports, mode, git_blob_sha1(csv)).dump(2) + "\n");

  std::size_t failed = 0;
  for (const auto& r : reports) failed += !r.error.empty();
  if (failed == reports.size()) {
    std::cerr << "tlpo: every cell failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-validated AUC estimation: LOO, LPO and tournament LPO"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "64-bit seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("-o,--output", g.output, "output file, or directory for experiment");

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "write a synthetic Gaussian dataset as CSV");
  synth->add_option("--m", sf.spec.m, "units")->capture_default_str();
  synth->add_option("--pos-fraction", sf.spec.pos_fraction, "fraction of positives")->capture_default_str();
  synth->add_option("--d", sf.spec.d, "features")->capture_default_str();
  synth->add_option("--signal", sf.spec.signal_features, "discriminating features")->capture_default_str();
  synth->add_option("--mu", sf.spec.mu, "class mean offset")->capture_default_str();
  synth->add_option("--test-set", sf.test_set, "write the independent test draw of this many units instead");

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "cross-validated AUC estimates for one dataset (JSON)");
  eval->add_option("--input", ef.input, "dataset CSV")->required();
  eval->add_option("--label", ef.label, "label column")->capture_default_str();
  eval->add_option("--learner", ef.learner)->check(CLI::IsMember(learner_names()))->capture_default_str();
  eval->add_option("--estimators", ef.estimators, "loo,lpo,tlpo,kfold-pooled,kfold-averaged")->capture_default_str();
  eval->add_option("--k", ef.k, "folds for k-fold estimators")->capture_default_str();
  eval->add_flag("--stratified", ef.stratified, "stratified k-fold assignment");
  ef.lf.add_to(eval);

  RocFlags rf;
  auto* roc = app.add_subcommand("roc", "ROC curve from tournament scores or a held-out file (CSV)");
  roc->add_option("--input", rf.input, "dataset CSV")->required();
  roc->add_option("--label", rf.label, "label column")->capture_default_str();
  roc->add_option("--learner", rf.learner)->check(CLI::IsMember(learner_names()))->capture_default_str();
  roc->add_option("--mode", rf.mode)->check(CLI::IsMember({"tlpo", "test"}))->capture_default_str();
  roc->add_option("--test", rf.test, "held-out CSV for --mode test");
  roc->add_option("--tournament-csv", rf.tournament_csv, "also write the tournament adjacency list");
  roc->add_option("--scores-csv", rf.scores_csv, "also write tournament scores");
  rf.lf.add_to(roc);

  ExperimentFlags xf;
  auto* exp = app.add_subcommand("experiment", "Monte-Carlo bias/variance study; writes report.csv and manifest.json");
  exp->add_option("--preset", xf.preset, "paper-synthetic");
  exp->add_option("--subsample", xf.subsample, "CSV pool for the subsampling protocol");
  exp->add_option("--label", xf.label, "label column of the pool")->capture_default_str();
  exp->add_option("--take", xf.take, "units drawn per repetition (subsample)")->capture_default_str();
  exp->add_option("--reps", xf.reps, "repetitions per cell")->check(CLI::PositiveNumber)->capture_default_str();
  exp->add_option("--n-test", xf.n_test, "test-set size for signal designs")->capture_default_str();
  exp->add_option("--m", xf.m, "units per training draw")->capture_default_str();
  exp->add_option("--fractions", xf.fractions, "positive fractions")->capture_default_str();
  exp->add_option("--d", xf.dims, "feature counts")->capture_default_str();
  exp->add_option("--signal", xf.signal, "signal feature counts")->capture_default_str();
  exp->add_option("--mu", xf.mu, "class mean offset")->capture_default_str();
  exp->add_option("--learners", xf.learners)->capture_default_str();
  exp->add_option("--estimators", xf.estimators)->capture_default_str();
  exp->add_option("--k", xf.k, "folds for k-fold estimators")->capture_default_str();
  exp->add_flag("--stratified", xf.stratified, "stratified k-fold assignment");
  exp->add_flag("-q,--quiet", xf.quiet, "no per-cell progress on stderr");
  xf.lf.add_to(exp);

  for (auto* sub : {synth, eval, roc, exp}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) return cmd_synth(g, sf);
    if (*eval) return cmd_eval(g, ef);
    if (*roc) return cmd_roc(g, rf);
    return cmd_experiment(g, xf);
  } catch (const std::exception& e) {
    std::cerr << "tlpo: " << e.what() << '\n';
    return 1;
  }
}
