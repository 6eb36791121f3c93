#include "helpers.hpp"

#include <gtest/gtest.h>

using namespace tlpo;
using testing_support::make_dataset;
using testing_support::random_dataset;

namespace {

const RidgeConfig kCentered{1.0, Intercept::centered};
const RidgeConfig kPenalized{1.0, Intercept::penalized};

std::vector<double> predict_rows(const TrainedModel& m, const Dataset& probe) {
  std::vector<double> out;
  for (std::size_t i = 0; i < probe.size(); ++i) out.push_back(m.predict(probe.row(i)));
  return out;
}

double max_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double g = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) g = std::max(g, std::abs(a[i] - b[i]));
  return g;
}

}  // namespace

// ------------------------------------------------------------- ridge ----

TEST(Ridge, OneDimensionalHandSolution) {
  const auto ds = make_dataset({{-1}, {1}}, {-1, 1});
  for (const auto& cfg : {kCentered, kPenalized}) {
    const auto m = ridge_fit(ds, cfg);
    EXPECT_NEAR(m.weights()(0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.intercept(), 0.0, 1e-15);
  }
}

TEST(Ridge, SingleClassTargets) {
  const auto ds = make_dataset({{-1}, {1}}, {1, 1});
  const auto c = ridge_fit(ds, kCentered);
  EXPECT_NEAR(c.weights()(0), 0.0, 1e-15);
  EXPECT_NEAR(c.intercept(), 1.0, 1e-15);
  EXPECT_NEAR(c.predict(std::vector<double>{5.0}), 1.0, 1e-14);
  // Shrunk intercept: design [x, 1], X'X = 2I, X'y = (0, 2) -> b = 2/3.
  const auto p = ridge_fit(ds, kPenalized);
  EXPECT_NEAR(p.weights()(0), 0.0, 1e-15);
  EXPECT_NEAR(p.intercept(), 2.0 / 3.0, 1e-15);
}

TEST(Ridge, PenalizedMatchesAugmentedFeatureFit) {
  // Penalized mode is plain ridge without intercept on [X, sqrt(bias)].
  const auto ds = random_dataset(9, 3, 4, 31);
  RidgeConfig cfg{0.7, Intercept::penalized, 4.0};
  const auto m = ridge_fit(ds, cfg);
  Matrix xa(9, 4);
  xa.leftCols(3) = ds.features();
  xa.col(3).setConstant(2.0);
  Vector y(9);
  for (int i = 0; i < 9; ++i) y(i) = to_target(ds.labels()[static_cast<std::size_t>(i)]);
  Matrix a = xa.transpose() * xa;
  a.diagonal().array() += 0.7;
  const Vector w = a.ldlt().solve(xa.transpose() * y);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(m.weights()(c), w(c), 1e-12);
  EXPECT_NEAR(m.intercept(), 2.0 * w(3), 1e-12);
}

TEST(Ridge, PrimalDualAgree) {
  for (const auto& cfg : {kCentered, kPenalized}) {
    const auto ds = random_dataset(5, 8, 2, 32);
    const auto probe = random_dataset(20, 8, 10, 33);
    const auto p = predict_rows(ridge_fit_primal(ds, cfg), probe);
    const auto d = predict_rows(ridge_fit_dual(ds, cfg), probe);
    EXPECT_LE(max_gap(p, d), 1e-10);
  }
}

TEST(Ridge, PrimalDualAgreeHighDimension) {
  for (const auto& cfg : {kCentered, kPenalized}) {
    const auto ds = random_dataset(28, 1000, 9, 34);
    const auto probe = random_dataset(10, 1000, 5, 35);
    EXPECT_LE(max_gap(predict_rows(ridge_fit_primal(ds, cfg), probe), predict_rows(ridge_fit_dual(ds, cfg), probe)),
              1e-8);
  }
}

TEST(Ridge, KernelScorerMatchesRetraining) {
  for (const auto& cfg : {kCentered, kPenalized}) {
    const auto ds = random_dataset(12, 40, 5, 36);
    const RidgeKernelScorer kernel(ds, cfg);
    const RidgeLearner learner(cfg);
    const RetrainingScorer retrain(learner, ds);
    for (std::vector<std::size_t> out : {std::vector<std::size_t>{3}, {0, 11}, {2, 5, 7}}) {
      const auto a = kernel.held_out_scores(out, 0);
      const auto b = retrain.held_out_scores(out, 0);
      EXPECT_LE(max_gap(a, b), 1e-10);
    }
  }
}

TEST(Ridge, PrepareUsesKernelRouteOnlyWhenWide) {
  const RidgeLearner learner(kPenalized);
  EXPECT_NE(dynamic_cast<const RidgeKernelScorer*>(learner.prepare(random_dataset(5, 8, 2, 1)).get()), nullptr);
  EXPECT_NE(dynamic_cast<const RetrainingScorer*>(learner.prepare(random_dataset(8, 5, 2, 1)).get()), nullptr);
}

TEST(Ridge, ShrinkageWithLambda) {
  const auto ds = random_dataset(20, 4, 7, 37, 1.0);
  const double ybar = (7.0 - 13.0) / 20.0;
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {1.0, 1e3, 1e6}) {
    const auto m = ridge_fit(ds, {lambda, Intercept::centered});
    const double norm = m.weights().norm();
    EXPECT_LT(norm, prev);
    prev = norm;
    if (lambda == 1e6) {
      EXPECT_LT(norm, 1e-4);
      EXPECT_NEAR(m.predict(ds.row(0)), ybar, 1e-4);
    }
  }
}

TEST(Ridge, ZeroLambda) {
  const auto ds = random_dataset(10, 2, 5, 38);
  EXPECT_NO_THROW(ridge_fit(ds, {0.0, Intercept::centered}));
  EXPECT_THROW(ridge_fit_dual(ds, {0.0, Intercept::centered}), Error);
  const auto wide = random_dataset(3, 5, 1, 39);
  try {
    ridge_fit(wide, {0.0, Intercept::centered});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("singular fit"), std::string::npos);
  }
  EXPECT_THROW(RidgeLearner({-1.0}), Error);
}

TEST(Ridge, Deterministic) {
  const auto ds = random_dataset(15, 6, 5, 40);
  const auto probe = random_dataset(10, 6, 5, 41);
  const RidgeLearner l;
  EXPECT_EQ(predict_rows(*l.fit(ds, 1), probe), predict_rows(*l.fit(ds, 2), probe));
}

// --------------------------------------------------------------- knn ----

TEST(Knn, EquidistantVote) {
  const auto ds = make_dataset({{1, 0}, {-1, 0}, {0, 1}}, {1, 1, -1});
  const KnnConfig cfg{3, 1e-12};
  const KnnModel m(ds, cfg);
  EXPECT_DOUBLE_EQ(m.predict(std::vector<double>{0, 0}), 2.0 / (1.0 + 1e-12) - 1.0 / (1.0 + 1e-12));
}

TEST(Knn, CoincidentPoint) {
  const auto ds = make_dataset({{0, 0}, {3, 3}}, {1, -1});
  const KnnModel m(ds, {1, 1e-12});
  EXPECT_DOUBLE_EQ(m.predict(std::vector<double>{0, 0}), 1e12);
}

TEST(Knn, AllNegativeTraining) {
  const auto ds = make_dataset({{0}, {1}, {2}, {5}}, {-1, -1, -1, -1});
  const KnnModel m(ds, {});
  for (double q : {-3.0, 0.5, 10.0}) EXPECT_LT(m.predict(std::vector<double>{q}), 0.0);
}

TEST(Knn, KLargerThanTrainingSet) {
  const auto ds = make_dataset({{0}, {2}}, {1, -1});
  const KnnModel m(ds, {10, 1e-12});
  EXPECT_NEAR(m.predict(std::vector<double>{0.5}), 1.0 / 0.5 - 1.0 / 1.5, 1e-9);
}

TEST(Knn, LabelFlipFlipsSign) {
  const auto ds = random_dataset(25, 4, 11, 42);
  std::vector<Label> flipped;
  for (Label l : ds.labels()) flipped.push_back(is_positive(l) ? Label::negative : Label::positive);
  const Dataset fl(ds.features(), flipped);
  const KnnLearner l;
  const auto probe = random_dataset(30, 4, 10, 43);
  const auto a = predict_rows(*l.fit(ds, 0), probe);
  const auto b = predict_rows(*l.fit(fl, 0), probe);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], -b[i]);
}

TEST(Knn, DistanceScorerBitIdenticalToRetraining) {
  const auto ds = random_dataset(14, 7, 6, 44);
  const KnnLearner l;
  const auto fast = l.prepare(ds);
  const RetrainingScorer slow(l, ds);
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (std::size_t j = i + 1; j < ds.size(); ++j) {
      const std::size_t held[2] = {i, j};
      ASSERT_EQ(fast->held_out_scores(held, 0), slow.held_out_scores(held, 0));
    }
}

TEST(Knn, EuclideanOrderFixed) {
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7}, b{7, 6, 5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(euclidean(a, b), std::sqrt(36 + 16 + 4 + 0 + 4 + 16 + 36.0));
  EXPECT_THROW(KnnLearner({0, 1e-12}), Error);
  EXPECT_THROW(KnnLearner({3, 0.0}), Error);
}

// ------------------------------------------------------- diagnostics ----

TEST(Diagnostics, Constant) {
  const ConstantLearner l(0.7);
  const auto m = l.fit(random_dataset(5, 2, 2, 1), 0);
  EXPECT_EQ(m->predict(std::vector<double>{1, 2}), 0.7);
  EXPECT_EQ(m->predict(std::vector<double>{-9, 0}), 0.7);
}

TEST(Diagnostics, ClassFrequency) {
  const ClassFrequencyLearner l;
  const auto m = l.fit(random_dataset(29, 2, 14, 1), 0);
  EXPECT_DOUBLE_EQ(m->predict(std::vector<double>{0, 0}), 1.0 / 14 - 1.0 / 15);
  EXPECT_EQ(l.fit(random_dataset(30, 2, 15, 1), 0)->predict(std::vector<double>{0, 0}), 0.0);
  EXPECT_THROW(l.fit(random_dataset(5, 2, 5, 1), 0), Error);
}

TEST(Diagnostics, RandomLearner) {
  const RandomLearner l(5);
  const auto ds = random_dataset(10, 3, 5, 45);
  const auto a = predict_rows(*l.fit(ds, 1), ds);
  const auto b = predict_rows(*l.fit(ds, 2), ds);
  const auto a2 = predict_rows(*l.fit(ds, 1), ds);
  EXPECT_NE(a, b);
  EXPECT_EQ(a, a2);
  // A model is a fixed function: same input, same output.
  const auto m = l.fit(ds, 3);
  EXPECT_EQ(m->predict(ds.row(4)), m->predict(ds.row(4)));
  Stream s(46);
  RunningStats st;
  for (int i = 0; i < 20000; ++i) {
    const double v = m->predict(std::vector<double>{s.normal(), s.normal(), s.normal()});
    ASSERT_GE(v, -1.0);
    ASSERT_LE(v, 1.0);
    st.push(v);
  }
  EXPECT_NEAR(st.mean(), 0.0, 0.02);
  EXPECT_NEAR(st.variance(), 1.0 / 3.0, 0.01);
}

TEST(Diagnostics, RandomScorerIndependentAcrossRounds) {
  const RandomLearner l(5);
  const auto ds = random_dataset(10, 3, 5, 47);
  const auto sc = l.prepare(ds);
  const std::size_t h[2] = {1, 2};
  EXPECT_NE(sc->held_out_scores(h, 1), sc->held_out_scores(h, 2));
  EXPECT_EQ(sc->held_out_scores(h, 1), sc->held_out_scores(h, 1));
}

TEST(Factory, Names) {
  for (const auto& n : learner_names()) EXPECT_EQ(make_learner(n)->name(), n);
  EXPECT_THROW(make_learner("svm"), Error);
}
