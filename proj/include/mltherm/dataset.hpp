#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mltherm/error.hpp"

namespace mltherm {

/// Labeled data. Only the real features are stored; every row carries an
/// implicit trailing bias component x_K = 1, so K() == featureCount() + 1.
class Dataset {
 public:
  Dataset() = default;

  Dataset(Eigen::MatrixXd features, Eigen::VectorXd labels)
      : features_(std::move(features)), labels_(std::move(labels)) {
    require(features_.rows() >= 1, Errc::InvalidArgument, "dataset needs at least one row");
    require(features_.rows() == labels_.size(), Errc::DimensionMismatch,
            "feature rows and label count differ");
    require(features_.allFinite() && labels_.allFinite(), Errc::InvalidArgument,
            "dataset entries must be finite");
  }

  /// Convenience for one feature per row.
  static Dataset from_points(const std::vector<std::pair<double, double>>& xy) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(xy.size()), 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(xy.size()));
    for (std::size_t i = 0; i < xy.size(); ++i) {
      x(static_cast<Eigen::Index>(i), 0) = xy[i].first;
      y(static_cast<Eigen::Index>(i)) = xy[i].second;
    }
    return Dataset(std::move(x), std::move(y));
  }

  Eigen::Index n() const { return features_.rows(); }
  Eigen::Index featureCount() const { return features_.cols(); }
  Eigen::Index K() const { return features_.cols() + 1; }

  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXd& labels() const { return labels_; }

  /// n x K design matrix with the bias column appended.
  Eigen::MatrixXd design() const {
    Eigen::MatrixXd a(n(), K());
    a.leftCols(featureCount()) = features_;
    a.col(K() - 1).setOnes();
    return a;
  }

  bool binary_labels() const {
    return (labels_.array() == 0.0 || labels_.array() == 1.0).all();
  }

 private:
  Eigen::MatrixXd features_;
  Eigen::VectorXd labels_;
};

/// Rows of a followed by rows of b.
inline Dataset concat(const Dataset& a, const Dataset& b) {
  require(a.featureCount() == b.featureCount(), Errc::DimensionMismatch,
          "cannot concatenate datasets of different widths");
  Eigen::MatrixXd x(a.n() + b.n(), a.featureCount());
  x << a.features(), b.features();
  Eigen::VectorXd y(a.n() + b.n());
  y << a.labels(), b.labels();
  return Dataset(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Statistics

/// Every data-side moment the temperature formulas consume. Variances and
/// covariances use the population (divide-by-n) convention throughout.
struct DataStats {
  Eigen::VectorXd meanSq;   // size K, meanSq[K-1] == 1
  Eigen::VectorXd meanAbs;  // size K, meanAbs[K-1] == 1
  double labelMeanSq = 0.0;
  double labelVar = 0.0;
  std::optional<double> corr2D;  // only for K == 2 with non-degenerate variances
  Eigen::MatrixXd covXX;         // (K-1) x (K-1)
  Eigen::VectorXd covXY;         // K-1
  Eigen::RowVectorXd covYX;      // K-1
  double covYY = 0.0;

  Eigen::Index K() const { return meanSq.size(); }

  /// Mean of the squared components averaged over all K components (bias included).
  double avgMeanSq() const { return meanSq.mean(); }
  double avgMeanAbs() const { return meanAbs.mean(); }
  /// (1/n) sum_i (|x_i|^2 + 1), the input energy scale of a network.
  double rowNormSq() const { return meanSq.sum(); }
};

inline DataStats stats(const Dataset& d) {
  const auto n = static_cast<double>(d.n());
  const Eigen::Index k = d.K();
  const auto& x = d.features();
  const auto& y = d.labels();

  DataStats s;
  s.meanSq.resize(k);
  s.meanAbs.resize(k);
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    s.meanSq[j] = x.col(j).squaredNorm() / n;
    s.meanAbs[j] = x.col(j).cwiseAbs().sum() / n;
  }
  s.meanSq[k - 1] = 1.0;
  s.meanAbs[k - 1] = 1.0;

  s.labelMeanSq = y.squaredNorm() / n;
  const double ybar = y.mean();
  const Eigen::VectorXd yc = y.array() - ybar;
  s.labelVar = yc.squaredNorm() / n;
  s.covYY = s.labelVar;

  const Eigen::RowVectorXd xbar = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - xbar;
  s.covXX = (xc.transpose() * xc) / n;
  s.covXY = (xc.transpose() * yc) / n;
  s.covYX = s.covXY.transpose();

  if (k == 2) {
    const double vx = s.covXX(0, 0);
    const double vy = s.labelVar;
    if (vx > 0.0 && vy > 0.0) {
      const double r = s.covXY[0] / std::sqrt(vx * vy);
      s.corr2D = std::clamp(r, -1.0, 1.0);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_real(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a headed, comma-separated file. Features keep header order minus the label column.
inline Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingFile, "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::EmptyBody, path + ": no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);

  std::ptrdiff_t label_idx = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) label_idx = static_cast<std::ptrdiff_t>(c);
  }
  if (label_idx < 0) {
    throw Error(Errc::MissingColumn, path + ": no column named '" + label_column + "'");
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(Errc::NonNumericCell, path + ":" + std::to_string(line_no) + ": expected " +
                                            std::to_string(header.size()) + " cells, got " +
                                            std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = detail::parse_real(cells[c]);
      if (!v) {
        throw Error(Errc::NonNumericCell, path + ":" + std::to_string(line_no) + ": column '" +
                                              header[c] + "' has non-numeric value '" +
                                              cells[c] + "'");
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::EmptyBody, path + ": header present but no data rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto f = static_cast<Eigen::Index>(header.size()) - 1;
  Eigen::MatrixXd x(n, f);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const double v = rows[static_cast<std::size_t>(i)][c];
      if (static_cast<std::ptrdiff_t>(c) == label_idx) {
        y[i] = v;
      } else {
        x(i, col++) = v;
      }
    }
  }
  return Dataset(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Synthetic data

/// y = slope * sum_j x_j + intercept + N(0, noise^2), x_j ~ U(xLow, xHigh).
struct LinearNoiseParams {
  double slope = 1.0;
  double intercept = 0.0;
  double noise = 0.0;
  int features = 1;
  double xLow = -1.0;
  double xHigh = 1.0;
};

/// x ~ N(0, 1)^features, y ~ Bernoulli(sigmoid(weight * sum_j x_j + bias)).
struct LogisticParams {
  double weight = 1.0;
  double bias = 0.0;
  int features = 1;
};

/// x ~ N(0, scale^2)^features, y ~ N(0, labelScale^2).
struct GaussianCloudParams {
  double scale = 1.0;
  double labelScale = 1.0;
  int features = 1;
};

using SynthParams = std::variant<LinearNoiseParams, LogisticParams, GaussianCloudParams>;

inline Dataset synth(const SynthParams& params, Eigen::Index n, std::uint64_t seed) {
  require(n >= 1, Errc::InvalidArgument, "synth: n must be >= 1");
  std::mt19937_64 rng(seed);
  return std::visit(
      [&](const auto& p) -> Dataset {
        using P = std::decay_t<decltype(p)>;
        require(p.features >= 1, Errc::InvalidArgument, "synth: features must be >= 1");
        Eigen::MatrixXd x(n, p.features);
        Eigen::VectorXd y(n);
        if constexpr (std::is_same_v<P, LinearNoiseParams>) {
          require(p.noise >= 0.0, Errc::InvalidArgument, "synth: noise must be >= 0");
          require(p.xLow < p.xHigh, Errc::InvalidArgument, "synth: empty x range");
          std::uniform_real_distribution<double> ux(p.xLow, p.xHigh);
          std::normal_distribution<double> eps(0.0, 1.0);
          for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < p.features; ++j) x(i, j) = ux(rng);
            y[i] = p.slope * x.row(i).sum() + p.intercept;
            if (p.noise > 0.0) y[i] += p.noise * eps(rng);
          }
        } else if constexpr (std::is_same_v<P, LogisticParams>) {
          std::normal_distribution<double> nx(0.0, 1.0);
          std::uniform_real_distribution<double> u(0.0, 1.0);
          for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < p.features; ++j) x(i, j) = nx(rng);
            const double z = p.weight * x.row(i).sum() + p.bias;
            y[i] = u(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1.0 : 0.0;
          }
        } else {
          require(p.scale > 0.0 && p.labelScale > 0.0, Errc::InvalidArgument,
                  "synth: scales must be positive");
          std::normal_distribution<double> nx(0.0, p.scale);
          std::normal_distribution<double> ny(0.0, p.labelScale);
          for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < p.features; ++j) x(i, j) = nx(rng);
            y[i] = ny(rng);
          }
        }
        return Dataset(std::move(x), std::move(y));
      },
      params);
}

}  // namespace mltherm
