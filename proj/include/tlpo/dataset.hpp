#pragma once

// Sample storage: an m x d feature matrix (one row per sample unit) plus
// +1/-1 class marks. Row order is the unit identity; nothing in this
// header reorders rows.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace tlpo {

/// Thrown for contract violations and malformed input across the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Label : std::int8_t { negative = -1, positive = 1 };

constexpr double to_target(Label l) noexcept { return l == Label::positive ? 1.0 : -1.0; }
constexpr bool is_positive(Label l) noexcept { return l == Label::positive; }

struct IndexPair {
  std::size_t i = 0;
  std::size_t j = 0;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

struct ClassCounts {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

class Dataset {
 public:
  Dataset() = default;

  Dataset(Matrix features, std::vector<Label> labels)
      : features_(std::move(features)), labels_(std::move(labels)) {
    if (static_cast<std::size_t>(features_.rows()) != labels_.size())
      throw Error("dataset: feature rows and label count differ");
    if (labels_.empty()) throw Error("dataset: no sample units");
    if (features_.cols() < 1) throw Error("dataset: at least one feature column required");
    if (!features_.allFinite()) throw Error("dataset: non-finite feature value");
  }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(features_.cols()); }

  const Matrix& features() const noexcept { return features_; }
  const std::vector<Label>& labels() const noexcept { return labels_; }
  Label label(std::size_t i) const { return labels_.at(i); }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * dims(), dims()};
  }

  /// I+ : row indices labelled +1.
  std::vector<std::size_t> positives() const { return indices_with(Label::positive); }
  /// I- : row indices labelled -1.
  std::vector<std::size_t> negatives() const { return indices_with(Label::negative); }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.labels_ == b.labels_ && a.features_.rows() == b.features_.rows() &&
           a.features_.cols() == b.features_.cols() && a.features_ == b.features_;
  }

 private:
  std::vector<std::size_t> indices_with(Label l) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == l) out.push_back(i);
    return out;
  }

  Matrix features_;
  std::vector<Label> labels_;
};

inline ClassCounts class_counts(const Dataset& ds) {
  ClassCounts c;
  for (Label l : ds.labels()) (is_positive(l) ? c.n_pos : c.n_neg)++;
  return c;
}

/// A dataset with some rows removed, remembering where each row came from.
struct Subset {
  Dataset data;
  std::vector<std::size_t> original_index;
};

/// Keeps the rows whose index is not in `excluded`, in their original order.
inline Subset subset_excluding(const Dataset& ds, std::span<const std::size_t> excluded) {
  const std::size_t m = ds.size();
  std::vector<char> drop(m, 0);
  for (std::size_t e : excluded) {
    if (e >= m) throw Error("subset_excluding: index " + std::to_string(e) + " out of range");
    drop[e] = 1;
  }
  Subset out;
  out.original_index.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    if (!drop[i]) out.original_index.push_back(i);
  if (out.original_index.empty()) throw Error("subset_excluding: cannot exclude every sample unit");

  const auto n = static_cast<Eigen::Index>(out.original_index.size());
  Matrix x(n, ds.features().cols());
  std::vector<Label> y;
  y.reserve(out.original_index.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = out.original_index[static_cast<std::size_t>(r)];
    x.row(r) = ds.features().row(static_cast<Eigen::Index>(src));
    y.push_back(ds.labels()[src]);
  }
  out.data = Dataset(std::move(x), std::move(y));
  return out;
}

inline Subset subset_excluding(const Dataset& ds, std::initializer_list<std::size_t> excluded) {
  return subset_excluding(ds, std::span<const std::size_t>(excluded.begin(), excluded.size()));
}

/// Rows at `indices`, in the given order.
inline Dataset select_rows(const Dataset& ds, std::span<const std::size_t> indices) {
  Matrix x(static_cast<Eigen::Index>(indices.size()), ds.features().cols());
  std::vector<Label> y;
  y.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= ds.size()) throw Error("select_rows: index out of range");
    x.row(static_cast<Eigen::Index>(r)) = ds.features().row(static_cast<Eigen::Index>(indices[r]));
    y.push_back(ds.labels()[indices[r]]);
  }
  return Dataset(std::move(x), std::move(y));
}

// ---------------------------------------------------------------- CSV ----

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses CSV text. The label column may hold {0,1} or {-1,1}; 0 maps to -1.
inline Dataset parse_csv(std::istream& in, std::string_view label_column, std::string_view source = "<csv>") {
  const std::string where(source);
  std::string line;
  if (!std::getline(in, line)) throw Error(where + ": empty file (header row required)");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
    line.erase(0, 3);

  const auto header = detail::split_commas(line);
  std::ptrdiff_t label_idx = -1;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (detail::unquote(header[c]) == label_column) label_idx = static_cast<std::ptrdiff_t>(c);
  if (label_idx < 0) throw Error(where + ": label column '" + std::string(label_column) + "' not found");
  const std::size_t ncols = header.size();
  if (ncols < 2) throw Error(where + ": no feature columns");

  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != ncols)
      throw Error(where + ":" + std::to_string(lineno) + ": expected " + std::to_string(ncols) + " cells, got " +
                  std::to_string(cells.size()));
    for (std::size_t c = 0; c < ncols; ++c) {
      double v = 0.0;
      if (!detail::parse_double(detail::unquote(cells[c]), v) || !std::isfinite(v)) {
        if (static_cast<std::ptrdiff_t>(c) == label_idx)
          throw Error(where + ":" + std::to_string(lineno) + ": invalid label '" + std::string(detail::trim(cells[c])) + "'");
        throw Error(where + ":" + std::to_string(lineno) + ": non-numeric value '" +
                    std::string(detail::trim(cells[c])) + "' in column '" + std::string(detail::unquote(header[c])) + "'");
      }
      if (static_cast<std::ptrdiff_t>(c) == label_idx) {
        if (v == 1.0)
          labels.push_back(Label::positive);
        else if (v == 0.0 || v == -1.0)
          labels.push_back(Label::negative);
        else
          throw Error(where + ":" + std::to_string(lineno) + ": invalid label '" + std::string(detail::trim(cells[c])) + "'");
      } else {
        values.push_back(v);
      }
    }
  }
  if (labels.size() < 2) throw Error(where + ": at least 2 data rows required, found " + std::to_string(labels.size()));

  const auto m = static_cast<Eigen::Index>(labels.size());
  const auto d = static_cast<Eigen::Index>(ncols - 1);
  Matrix x = Eigen::Map<const Matrix>(values.data(), m, d);
  return Dataset(std::move(x), std::move(labels));
}

inline Dataset load_csv(const std::string& path, std::string_view label_column = "label") {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_csv(in, label_column, path);
}

/// Writes features as x0..x{d-1} followed by the label column (+1 -> 1, -1 -> 0).
inline void write_csv(std::ostream& out, const Dataset& ds, std::string_view label_column = "label") {
  for (std::size_t c = 0; c < ds.dims(); ++c) out << 'x' << c << ',';
  out << label_column << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.row(i)) out << detail::format_double(v) << ',';
    out << (is_positive(ds.labels()[i]) ? '1' : '0') << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& ds, std::string_view label_column = "label") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_csv(out, ds, label_column);
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace tlpo
