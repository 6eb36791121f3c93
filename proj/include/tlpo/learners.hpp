#pragma once

// Learner contract plus the two classifiers used in the experiments
// (ridge regression, inverse-distance weighted KNN) and three diagnostic
// learners: constant, class-frequency and random.
//
// A Learner is immutable. fit() is deterministic in (training data, seed)
// and returns an immutable TrainedModel, so fits may run concurrently.

#include "tlpo/dataset.hpp"
#include "tlpo/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace tlpo {

class TrainedModel {
 public:
  virtual ~TrainedModel() = default;
  virtual double predict(std::span<const double> x) const = 0;
};

using ModelPtr = std::unique_ptr<const TrainedModel>;

/// Scores held-out units of one fixed dataset: trains on every unit not in
/// `excluded` and returns predictions for the excluded units, in the order
/// given. Cross-validation talks to learners only through this interface,
/// which lets a learner precompute per-dataset quantities once.
class HeldOutScorer {
 public:
  virtual ~HeldOutScorer() = default;
  virtual std::vector<double> held_out_scores(std::span<const std::size_t> excluded, Seed seed) const = 0;
};

using ScorerPtr = std::unique_ptr<const HeldOutScorer>;

class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string name() const = 0;
  virtual ModelPtr fit(const Dataset& train, Seed seed) const = 0;
  /// Default: copy the complement with subset_excluding, fit, predict.
  virtual ScorerPtr prepare(const Dataset& full) const;
};

using LearnerPtr = std::shared_ptr<const Learner>;

/// The reference held-out scorer: literal retraining on the subset.
class RetrainingScorer final : public HeldOutScorer {
 public:
  RetrainingScorer(const Learner& learner, const Dataset& full) : learner_(learner), full_(full) {}

  std::vector<double> held_out_scores(std::span<const std::size_t> excluded, Seed seed) const override {
    const auto train = subset_excluding(full_, excluded);
    const auto model = learner_.fit(train.data, seed);
    std::vector<double> out;
    out.reserve(excluded.size());
    for (std::size_t u : excluded) out.push_back(model->predict(full_.row(u)));
    return out;
  }

 private:
  const Learner& learner_;
  const Dataset& full_;
};

inline ScorerPtr Learner::prepare(const Dataset& full) const { return std::make_unique<RetrainingScorer>(*this, full); }

// ------------------------------------------------------------- ridge ----

/// How the intercept b is fitted.
enum class Intercept {
  centered,   // unpenalized: fit on centered data, b = ybar - w.xbar
  penalized,  // constant feature sqrt(bias) appended and shrunk with w
};

struct RidgeConfig {
  double lambda = 1.0;
  Intercept intercept = Intercept::centered;
  double bias = 1.0;  // constant added to every linear-kernel value (penalized mode)
};

/// f(x) = w.x + b
class LinearModel final : public TrainedModel {
 public:
  LinearModel(Vector w, double b) : w_(std::move(w)), b_(b) {}

  double predict(std::span<const double> x) const override {
    if (x.size() != static_cast<std::size_t>(w_.size())) throw Error("linear model: feature length mismatch");
    return Eigen::Map<const Vector>(x.data(), w_.size()).dot(w_) + b_;
  }

  const Vector& weights() const noexcept { return w_; }
  double intercept() const noexcept { return b_; }

 private:
  Vector w_;
  double b_;
};

namespace detail {

inline void check_ridge(const RidgeConfig& cfg) {
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) throw Error("ridge: lambda must be finite and >= 0");
  if (!(cfg.bias > 0.0) || !std::isfinite(cfg.bias)) throw Error("ridge: bias must be finite and > 0");
}

inline Vector targets(const Dataset& ds) {
  Vector y(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) y(static_cast<Eigen::Index>(i)) = to_target(ds.labels()[i]);
  return y;
}

/// The regression problem actually solved: design matrix and targets, plus
/// what is needed to turn its coefficients back into (w, b).
struct RidgeDesign {
  Matrix x;
  Vector y;
  Vector x_mean;  // centered mode
  double y_mean = 0.0;
};

inline RidgeDesign make_design(const Dataset& ds, const RidgeConfig& cfg) {
  RidgeDesign r;
  const Vector y = targets(ds);
  if (cfg.intercept == Intercept::centered) {
    r.x_mean = ds.features().colwise().mean().transpose();
    r.y_mean = y.mean();
    r.x = ds.features().rowwise() - r.x_mean.transpose();
    r.y = y.array() - r.y_mean;
  } else {
    r.x.resize(ds.features().rows(), ds.features().cols() + 1);
    r.x.leftCols(ds.features().cols()) = ds.features();
    r.x.col(ds.features().cols()).setConstant(std::sqrt(cfg.bias));
    r.y = y;
  }
  return r;
}

/// Maps design coefficients back to the original feature space.
inline LinearModel to_model(const RidgeDesign& r, const Vector& coef, const RidgeConfig& cfg) {
  if (cfg.intercept == Intercept::centered) return {coef, r.y_mean - coef.dot(r.x_mean)};
  const auto d = coef.size() - 1;
  return {coef.head(d), std::sqrt(cfg.bias) * coef(d)};
}

/// Solves (A + lambda I) z = rhs for symmetric PSD A.
inline Vector solve_regularized(Matrix a, const Vector& rhs, double lambda) {
  a.diagonal().array() += lambda;
  if (lambda > 0.0) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() == Eigen::Success) return llt.solve(rhs);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < a.rows()) throw Error("ridge: singular fit");
  return qr.solve(rhs);
}

}  // namespace detail

/// Primal route: (X'X + lambda I) w = X'y on the design (d x d system).
inline LinearModel ridge_fit_primal(const Dataset& ds, const RidgeConfig& cfg = {}) {
  detail::check_ridge(cfg);
  const auto r = detail::make_design(ds, cfg);
  const Matrix gram = r.x.transpose() * r.x;
  const Vector rhs = r.x.transpose() * r.y;
  return detail::to_model(r, detail::solve_regularized(gram, rhs, cfg.lambda), cfg);
}

/// Dual route: (X X' + lambda I) alpha = y, w = X' alpha (m x m system).
/// Needs lambda > 0.
inline LinearModel ridge_fit_dual(const Dataset& ds, const RidgeConfig& cfg = {}) {
  detail::check_ridge(cfg);
  if (cfg.lambda == 0.0) throw Error("ridge: dual solve needs lambda > 0");
  const auto r = detail::make_design(ds, cfg);
  const Matrix kernel = r.x * r.x.transpose();
  const Vector alpha = detail::solve_regularized(kernel, r.y, cfg.lambda);
  return detail::to_model(r, r.x.transpose() * alpha, cfg);
}

/// Picks the smaller system: dual when d > m (and lambda > 0).
inline LinearModel ridge_fit(const Dataset& ds, const RidgeConfig& cfg = {}) {
  if (ds.dims() > ds.size() && cfg.lambda > 0.0) return ridge_fit_dual(ds, cfg);
  return ridge_fit_primal(ds, cfg);
}

/// Held-out ridge predictions from the linear kernel of the full dataset,
/// computed once. Each round then costs O(n^3) in the training size rather
/// than O(n^2 d). Centering, when used, is applied to the kernel itself.
/// Same solution as the dual solve.
class RidgeKernelScorer final : public HeldOutScorer {
 public:
  RidgeKernelScorer(const Dataset& full, RidgeConfig cfg)
      : cfg_(cfg), gram_(full.features() * full.features().transpose()), y_(detail::targets(full)) {
    detail::check_ridge(cfg_);
    if (cfg_.lambda == 0.0) throw Error("ridge: kernel route needs lambda > 0");
  }

  std::vector<double> held_out_scores(std::span<const std::size_t> excluded, Seed) const override {
    const auto m = static_cast<std::size_t>(gram_.rows());
    std::vector<char> out_mask(m, 0);
    for (std::size_t e : excluded) {
      if (e >= m) throw Error("ridge: held-out index out of range");
      out_mask[e] = 1;
    }
    std::vector<Eigen::Index> train;
    for (std::size_t i = 0; i < m; ++i)
      if (!out_mask[i]) train.push_back(static_cast<Eigen::Index>(i));
    if (train.empty()) throw Error("ridge: empty training set");
    return cfg_.intercept == Intercept::centered ? centered(train, excluded) : penalized(train, excluded);
  }

 private:
  std::vector<double> penalized(const std::vector<Eigen::Index>& train, std::span<const std::size_t> excluded) const {
    const auto n = static_cast<Eigen::Index>(train.size());
    Matrix k(n, n);
    Vector y(n);
    for (Eigen::Index p = 0; p < n; ++p) {
      y(p) = y_(train[static_cast<std::size_t>(p)]);
      for (Eigen::Index q = 0; q < n; ++q)
        k(p, q) = gram_(train[static_cast<std::size_t>(p)], train[static_cast<std::size_t>(q)]) + cfg_.bias;
    }
    const Vector alpha = detail::solve_regularized(std::move(k), y, cfg_.lambda);
    std::vector<double> out;
    out.reserve(excluded.size());
    for (std::size_t u : excluded) {
      double f = 0.0;
      for (Eigen::Index p = 0; p < n; ++p)
        f += alpha(p) * (gram_(train[static_cast<std::size_t>(p)], static_cast<Eigen::Index>(u)) + cfg_.bias);
      out.push_back(f);
    }
    return out;
  }

  std::vector<double> centered(const std::vector<Eigen::Index>& train, std::span<const std::size_t> excluded) const {
    const auto n = static_cast<Eigen::Index>(train.size());
    const double inv_n = 1.0 / static_cast<double>(n);

    // row_mean(a) = mean over training l of <x_a, x_l>
    auto row_mean = [&](Eigen::Index a) {
      double s = 0.0;
      for (Eigen::Index l : train) s += gram_(a, l);
      return s * inv_n;
    };
    Vector r(n);
    for (Eigen::Index p = 0; p < n; ++p) r(p) = row_mean(train[static_cast<std::size_t>(p)]);
    const double r_bar = r.mean();

    Matrix kc(n, n);
    Vector yc(n);
    double y_mean = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) y_mean += y_(train[static_cast<std::size_t>(p)]);
    y_mean *= inv_n;
    for (Eigen::Index p = 0; p < n; ++p) {
      const auto a = train[static_cast<std::size_t>(p)];
      yc(p) = y_(a) - y_mean;
      for (Eigen::Index q = 0; q < n; ++q) kc(p, q) = gram_(a, train[static_cast<std::size_t>(q)]) - r(p) - r(q) + r_bar;
    }
    const Vector alpha = detail::solve_regularized(std::move(kc), yc, cfg_.lambda);

    std::vector<double> out;
    out.reserve(excluded.size());
    for (std::size_t u : excluded) {
      const auto ui = static_cast<Eigen::Index>(u);
      const double r_u = row_mean(ui);
      double f = 0.0;
      for (Eigen::Index p = 0; p < n; ++p)
        f += alpha(p) * (gram_(train[static_cast<std::size_t>(p)], ui) - r(p) - r_u + r_bar);
      out.push_back(f + y_mean);
    }
    return out;
  }

  RidgeConfig cfg_;
  Matrix gram_;
  Vector y_;
};

class RidgeLearner final : public Learner {
 public:
  explicit RidgeLearner(RidgeConfig cfg = {}) : cfg_(cfg) { detail::check_ridge(cfg_); }

  std::string name() const override { return "ridge"; }

  ModelPtr fit(const Dataset& train, Seed) const override {
    return std::make_unique<LinearModel>(ridge_fit(train, cfg_));
  }

  /// Kernel route once the dimension exceeds the sample count.
  ScorerPtr prepare(const Dataset& full) const override {
    if (full.dims() > full.size() && cfg_.lambda > 0.0) return std::make_unique<RidgeKernelScorer>(full, cfg_);
    return Learner::prepare(full);
  }

  const RidgeConfig& config() const noexcept { return cfg_; }

 private:
  RidgeConfig cfg_;
};

// --------------------------------------------------------------- knn ----

struct KnnConfig {
  std::size_t k = 3;
  double epsilon = 1e-12;
};

/// Euclidean distance with a fixed summation order, so results do not
/// depend on vectorization or alignment.
inline double euclidean(std::span<const double> a, std::span<const double> b) {
  const std::size_t d = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t c = 0;
  for (; c + 4 <= d; c += 4) {
    const double t0 = a[c] - b[c], t1 = a[c + 1] - b[c + 1], t2 = a[c + 2] - b[c + 2], t3 = a[c + 3] - b[c + 3];
    s0 += t0 * t0;
    s1 += t1 * t1;
    s2 += t2 * t2;
    s3 += t3 * t3;
  }
  for (; c < d; ++c) {
    const double t = a[c] - b[c];
    s0 += t * t;
  }
  return std::sqrt((s0 + s1) + (s2 + s3));
}

namespace detail {

inline void check_knn(const KnnConfig& cfg) {
  if (cfg.k < 1) throw Error("knn: k must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw Error("knn: epsilon must be > 0");
}

/// Vote over the nearest min(k, n) candidates; distance ties resolve to the
/// lower candidate position.
struct Candidate {
  double dist;
  std::size_t pos;
  Label label;
};

inline double knn_vote(std::vector<Candidate>& cand, const KnnConfig& cfg) {
  const std::size_t take = std::min(cfg.k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                    [](const Candidate& a, const Candidate& b) {
                      return a.dist < b.dist || (a.dist == b.dist && a.pos < b.pos);
                    });
  double pos_sum = 0.0, neg_sum = 0.0;
  for (std::size_t r = 0; r < take; ++r) {
    const double wgt = 1.0 / (cand[r].dist + cfg.epsilon);
    (is_positive(cand[r].label) ? pos_sum : neg_sum) += wgt;
  }
  return pos_sum - neg_sum;
}

}  // namespace detail

/// Stores the training set; predict = sum of 1/(dist + eps) over positive
/// neighbors minus the same over negative neighbors.
class KnnModel final : public TrainedModel {
 public:
  KnnModel(Dataset train, KnnConfig cfg) : train_(std::move(train)), cfg_(cfg) {}

  double predict(std::span<const double> x) const override {
    if (x.size() != train_.dims()) throw Error("knn model: feature length mismatch");
    std::vector<detail::Candidate> cand;
    cand.reserve(train_.size());
    for (std::size_t a = 0; a < train_.size(); ++a) cand.push_back({euclidean(x, train_.row(a)), a, train_.labels()[a]});
    return detail::knn_vote(cand, cfg_);
  }

 private:
  Dataset train_;
  KnnConfig cfg_;
};

/// Held-out KNN scores from a precomputed distance matrix. Bit-identical
/// to retraining: same distance function, same neighbor order.
class KnnDistanceScorer final : public HeldOutScorer {
 public:
  KnnDistanceScorer(const Dataset& full, KnnConfig cfg) : cfg_(cfg), labels_(full.labels()) {
    const auto m = full.size();
    dist_.resize(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) dist_[i * m + j] = dist_[j * m + i] = euclidean(full.row(i), full.row(j));
  }

  std::vector<double> held_out_scores(std::span<const std::size_t> excluded, Seed) const override {
    const auto m = labels_.size();
    std::vector<char> out_mask(m, 0);
    for (std::size_t e : excluded) {
      if (e >= m) throw Error("knn: held-out index out of range");
      out_mask[e] = 1;
    }
    std::vector<double> out;
    out.reserve(excluded.size());
    std::vector<detail::Candidate> cand;
    for (std::size_t u : excluded) {
      cand.clear();
      for (std::size_t a = 0; a < m; ++a)
        if (!out_mask[a]) cand.push_back({dist_[u * m + a], a, labels_[a]});
      if (cand.empty()) throw Error("knn: empty training set");
      out.push_back(detail::knn_vote(cand, cfg_));
    }
    return out;
  }

 private:
  KnnConfig cfg_;
  std::vector<Label> labels_;
  std::vector<double> dist_;
};

class KnnLearner final : public Learner {
 public:
  explicit KnnLearner(KnnConfig cfg = {}) : cfg_(cfg) { detail::check_knn(cfg_); }

  std::string name() const override { return "knn"; }

  ModelPtr fit(const Dataset& train, Seed) const override { return std::make_unique<KnnModel>(train, cfg_); }

  ScorerPtr prepare(const Dataset& full) const override { return std::make_unique<KnnDistanceScorer>(full, cfg_); }

  const KnnConfig& config() const noexcept { return cfg_; }

 private:
  KnnConfig cfg_;
};

// -------------------------------------------------------- diagnostics ----

class ConstantModel final : public TrainedModel {
 public:
  explicit ConstantModel(double value) : value_(value) {}
  double predict(std::span<const double>) const override { return value_; }

 private:
  double value_;
};

/// Ignores the data; every prediction is `value`. The perfectly stable
/// extreme: every round produces the same function.
class ConstantLearner final : public Learner {
 public:
  explicit ConstantLearner(double value = 0.0) : value_(value) {
    if (!std::isfinite(value)) throw Error("constant learner: value must be finite");
  }
  std::string name() const override { return "constant"; }
  ModelPtr fit(const Dataset&, Seed) const override { return std::make_unique<ConstantModel>(value_); }

 private:
  double value_;
};

/// Predicts the constant 1/p - 1/n from the training class counts. Useless
/// as a classifier, but pooled LOO rates it perfect on balanced data.
class ClassFrequencyLearner final : public Learner {
 public:
  std::string name() const override { return "classfreq"; }
  ModelPtr fit(const Dataset& train, Seed) const override {
    const auto c = class_counts(train);
    if (c.n_pos == 0 || c.n_neg == 0) throw Error("classfreq: training subset lacks a class");
    return std::make_unique<ConstantModel>(1.0 / static_cast<double>(c.n_pos) - 1.0 / static_cast<double>(c.n_neg));
  }
};

namespace detail {

inline double unit_uniform(Seed s) {
  // 53 high bits -> [0,1) -> [-1,1)
  return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

inline std::uint64_t hash_coordinates(std::span<const double> x) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (double v : x) {
    const double z = v == 0.0 ? 0.0 : v;  // +0 and -0 are the same point
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(z));
  }
  return h;
}

}  // namespace detail

/// A fixed random function: a uniform [-1,1) value per input, keyed by a
/// hash of the coordinates and the fit's seed.
class RandomModel final : public TrainedModel {
 public:
  explicit RandomModel(Seed key) : key_(key) {}
  double predict(std::span<const double> x) const override {
    return detail::unit_uniform(mix_seed(key_, detail::hash_coordinates(x)));
  }

 private:
  Seed key_;
};

/// Held-out random scores keyed by unit index.
class RandomScorer final : public HeldOutScorer {
 public:
  RandomScorer(Seed learner_seed, std::size_t m) : learner_seed_(learner_seed), m_(m) {}
  std::vector<double> held_out_scores(std::span<const std::size_t> excluded, Seed seed) const override {
    const Seed key = mix_seed(learner_seed_, tag::random_learner, seed);
    std::vector<double> out;
    out.reserve(excluded.size());
    for (std::size_t u : excluded) {
      if (u >= m_) throw Error("random: held-out index out of range");
      out.push_back(detail::unit_uniform(mix_seed(key, u)));
    }
    return out;
  }

 private:
  Seed learner_seed_;
  std::size_t m_;
};

/// Ignores the training data; each fit draws an independent function with
/// values uniform on [-1, 1]. Fits with the same seed give the same function.
class RandomLearner final : public Learner {
 public:
  explicit RandomLearner(Seed seed = 0) : seed_(seed) {}
  std::string name() const override { return "random"; }
  ModelPtr fit(const Dataset&, Seed seed) const override {
    return std::make_unique<RandomModel>(mix_seed(seed_, tag::random_learner, seed));
  }
  ScorerPtr prepare(const Dataset& full) const override { return std::make_unique<RandomScorer>(seed_, full.size()); }

 private:
  Seed seed_;
};

// ----------------------------------------------------------- factory ----

struct LearnerOptions {
  RidgeConfig ridge;
  KnnConfig knn;
  double constant_value = 0.0;
  Seed random_seed = 0;
};

inline const std::vector<std::string>& learner_names() {
  static const std::vector<std::string> names{"ridge", "knn", "constant", "classfreq", "random"};
  return names;
}

inline LearnerPtr make_learner(const std::string& name, const LearnerOptions& opt = {}) {
  if (name == "ridge") return std::make_shared<RidgeLearner>(opt.ridge);
  if (name == "knn") return std::make_shared<KnnLearner>(opt.knn);
  if (name == "constant") return std::make_shared<ConstantLearner>(opt.constant_value);
  if (name == "classfreq") return std::make_shared<ClassFrequencyLearner>();
  if (name == "random") return std::make_shared<RandomLearner>(opt.random_seed);
  throw Error("unknown learner '" + name + "'");
}

}  // namespace tlpo
