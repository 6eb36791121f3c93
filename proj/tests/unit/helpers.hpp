#pragma once

// Independent reference implementations and small fixtures for the tests.

#include "tlpo/tlpo.hpp"

#include <initializer_list>
#include <vector>

namespace testing_support {

using namespace tlpo;

inline Dataset make_dataset(std::initializer_list<std::initializer_list<double>> rows, std::initializer_list<int> labels) {
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) x(r, c++) = v;
    ++r;
  }
  std::vector<Label> y;
  for (int l : labels) y.push_back(l > 0 ? Label::positive : Label::negative);
  return Dataset(std::move(x), std::move(y));
}

inline std::vector<Label> labels_from(std::initializer_list<int> ls) {
  std::vector<Label> y;
  for (int l : ls) y.push_back(l > 0 ? Label::positive : Label::negative);
  return y;
}

/// Gaussian features, first n_pos rows positive.
inline Dataset random_dataset(std::size_t m, std::size_t d, std::size_t n_pos, Seed seed, double shift = 0.0) {
  Stream s(seed);
  Matrix x(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  std::vector<Label> y(m, Label::negative);
  for (std::size_t i = 0; i < m; ++i) {
    if (i < n_pos) y[i] = Label::positive;
    for (std::size_t c = 0; c < d; ++c)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = s.normal() + (c == 0 ? to_target(y[i]) * shift : 0.0);
  }
  return Dataset(std::move(x), std::move(y));
}

/// Double loop over positive/negative pairs.
inline double brute_auc(const std::vector<double>& s, const std::vector<Label>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (is_positive(y[i]) && !is_positive(y[j])) {
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        pairs += 1.0;
      }
  return wins / pairs;
}

/// Triple enumeration of 3-cycles in a strict tournament.
inline std::int64_t brute_triads(const TournamentGraph& g) {
  std::int64_t c = 0;
  const auto m = g.units();
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      for (std::size_t d = b + 1; d < m; ++d) {
        const bool ab = g.beats(a, b), bd = g.beats(b, d), da = g.beats(d, a);
        if ((ab && bd && da) || (!ab && !bd && !da)) ++c;
      }
  return c;
}

inline TournamentGraph random_strict_tournament(std::size_t m, Stream& s) {
  std::vector<Outcome> out(m * (m - 1) / 2);
  for (auto& o : out) o = s.below(2) ? Outcome::first_wins : Outcome::second_wins;
  return TournamentGraph(m, std::move(out));
}

/// Learner whose every fit is the same function of the first feature.
class FixedFunctionLearner final : public Learner {
 public:
  std::string name() const override { return "fixed"; }
  ModelPtr fit(const Dataset&, Seed) const override {
    struct M final : TrainedModel {
      double predict(std::span<const double> x) const override { return 3.0 * x[0] + 1.0; }
    };
    return std::make_unique<M>();
  }
};

/// Learner that counts fit calls.
class CountingLearner final : public Learner {
 public:
  explicit CountingLearner(std::size_t& calls) : calls_(calls) {}
  std::string name() const override { return "counting"; }
  ModelPtr fit(const Dataset&, Seed) const override {
    ++calls_;
    return std::make_unique<ConstantModel>(0.0);
  }

 private:
  std::size_t& calls_;
};

}  // namespace testing_support
