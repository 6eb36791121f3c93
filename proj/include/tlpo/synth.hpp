#pragma once

// Gaussian two-class designs. Non-signal: every feature N(0,1) for both
// classes. Signal: the first `signal_features` columns are N(+mu,1) for
// positives and N(-mu,1) for negatives; the rest stay N(0,1).

#include "tlpo/dataset.hpp"
#include "tlpo/learners.hpp"
#include "tlpo/rng.hpp"
#include "tlpo/roc.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace tlpo {

struct SynthSpec {
  std::size_t m = 30;
  double pos_fraction = 0.5;
  std::size_t d = 10;
  std::size_t signal_features = 0;
  double mu = 0.5;
  Seed seed = 0;
};

/// round-half-up(fraction * n)
inline std::size_t positive_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

inline void validate(const SynthSpec& s) {
  if (s.m < 2) throw Error("synth: m must be >= 2");
  if (s.d < 1) throw Error("synth: d must be >= 1");
  if (!(s.pos_fraction > 0.0 && s.pos_fraction < 1.0))
    throw Error("synth: pos_fraction must lie strictly between 0 and 1");
  if (s.signal_features > s.d) throw Error("synth: signal_features exceeds d");
  if (!std::isfinite(s.mu)) throw Error("synth: mu must be finite");
  const auto p = positive_count(s.pos_fraction, s.m);
  if (p == 0 || p >= s.m)
    throw Error("synth: pos_fraction " + std::to_string(s.pos_fraction) + " leaves a class empty at m=" +
                std::to_string(s.m));
}

namespace detail {

/// Draws rows of one design from one stream; positives first.
class RowSampler {
 public:
  RowSampler(const SynthSpec& spec, Seed stream_seed) : spec_(spec), stream_(stream_seed) {}

  void draw(Label label, std::span<double> row) {
    const double shift = is_positive(label) ? spec_.mu : -spec_.mu;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double z = stream_.normal();
      row[c] = c < spec_.signal_features ? z + shift : z;
    }
  }

 private:
  const SynthSpec& spec_;
  Stream stream_;
};

inline Dataset draw_dataset(const SynthSpec& spec, std::size_t n, Seed stream_seed) {
  const auto n_pos = positive_count(spec.pos_fraction, n);
  if (n_pos == 0 || n_pos >= n) throw Error("synth: class would be empty at n=" + std::to_string(n));
  RowSampler sampler(spec, stream_seed);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.d));
  std::vector<Label> y(n, Label::negative);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_pos) y[i] = Label::positive;
    sampler.draw(y[i], {x.data() + i * spec.d, spec.d});
  }
  return Dataset(std::move(x), std::move(y));
}

}  // namespace detail

/// Training draw: m units, round(pos_fraction * m) of them positive.
inline Dataset generate(const SynthSpec& spec) {
  validate(spec);
  return detail::draw_dataset(spec, spec.m, mix_seed(spec.seed, tag::train_draw));
}

/// Independent large draw from the same design (separate stream).
inline Dataset generate_test_set(const SynthSpec& spec, std::size_t n_test) {
  validate(spec);
  return detail::draw_dataset(spec, n_test, mix_seed(spec.seed, tag::test_draw));
}

/// WMW AUC of each model on the test draw of generate_test_set(spec, n_test).
/// Rows are streamed once and shared by all models, so the test matrix is
/// never materialized.
inline std::vector<double> test_set_aucs(const SynthSpec& spec, std::size_t n_test,
                                         std::span<const TrainedModel* const> models) {
  validate(spec);
  const auto n_pos = positive_count(spec.pos_fraction, n_test);
  if (n_pos == 0 || n_pos >= n_test) throw Error("synth: class would be empty at n=" + std::to_string(n_test));
  detail::RowSampler sampler(spec, mix_seed(spec.seed, tag::test_draw));
  std::vector<double> row(spec.d);
  std::vector<std::vector<double>> scores(models.size(), std::vector<double>(n_test));
  std::vector<Label> labels(n_test, Label::negative);
  for (std::size_t i = 0; i < n_test; ++i) {
    if (i < n_pos) labels[i] = Label::positive;
    sampler.draw(labels[i], row);
    for (std::size_t k = 0; k < models.size(); ++k) scores[k][i] = models[k]->predict(row);
  }
  std::vector<double> out;
  for (const auto& s : scores) out.push_back(wmw_auc(s, labels));
  return out;
}

inline double test_set_auc(const SynthSpec& spec, std::size_t n_test, const TrainedModel& model) {
  const TrainedModel* one[] = {&model};
  return test_set_aucs(spec, n_test, one)[0];
}

}  // namespace tlpo
