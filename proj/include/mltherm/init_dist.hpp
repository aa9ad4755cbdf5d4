#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mltherm/error.hpp"
#include "mltherm/parallel.hpp"
#include "mltherm/rng.hpp"

namespace mltherm {

enum class InitKind { DiagonalNormal, UniformBox, Mixed };

/// Independent per-dimension initialization law. Normal dimensions come first;
/// uniform dimensions have support [-l_j/2, l_j/2].
class InitDistribution {
 public:
  static InitDistribution normal(std::vector<double> sigmas) {
    require(!sigmas.empty(), Errc::InvalidArgument, "normal init needs at least one sigma");
    return InitDistribution(InitKind::DiagonalNormal, std::move(sigmas), {});
  }

  static InitDistribution uniform(std::vector<double> lengths) {
    require(!lengths.empty(), Errc::InvalidArgument, "uniform init needs at least one length");
    return InitDistribution(InitKind::UniformBox, {}, std::move(lengths));
  }

  static InitDistribution mixed(std::vector<double> sigmas, std::vector<double> lengths) {
    require(!sigmas.empty() && !lengths.empty(), Errc::InvalidArgument,
            "mixed init needs a non-empty normal block and uniform block");
    return InitDistribution(InitKind::Mixed, std::move(sigmas), std::move(lengths));
  }

  InitKind kind() const { return kind_; }
  std::size_t dim() const { return sigmas_.size() + lengths_.size(); }
  std::size_t normalDims() const { return sigmas_.size(); }
  std::size_t uniformDims() const { return lengths_.size(); }
  const std::vector<double>& sigmas() const { return sigmas_; }
  const std::vector<double>& lengths() const { return lengths_; }

  InitDistribution normalBlock() const { return normal(sigmas_); }
  InitDistribution uniformBlock() const { return uniform(lengths_); }

  bool operator==(const InitDistribution&) const = default;

 private:
  InitDistribution(InitKind kind, std::vector<double> sigmas, std::vector<double> lengths)
      : kind_(kind), sigmas_(std::move(sigmas)), lengths_(std::move(lengths)) {
    for (double s : sigmas_) {
      require(std::isfinite(s) && s > 0.0, Errc::InvalidArgument, "sigma must be > 0");
    }
    for (double l : lengths_) {
      require(std::isfinite(l) && l > 0.0, Errc::InvalidArgument, "length must be > 0");
    }
  }

  InitKind kind_;
  std::vector<double> sigmas_;
  std::vector<double> lengths_;
};

/// Entropy of one standard normal dimension, (1 + ln 2 pi) / 2, in nats.
inline constexpr double kNormalEntropyConst = 0.5 * (1.0 + 1.8378770664093454835606594728112);

/// Differential entropy in nats; may be negative.
inline double differential_entropy(const InitDistribution& d) {
  double s = 0.0;
  for (double sigma : d.sigmas()) s += std::log(sigma);
  s += static_cast<double>(d.normalDims()) * kNormalEntropyConst;
  for (double l : d.lengths()) s += std::log(l);
  return s;
}

/// Per-dimension standard deviation, with uniform widths mapped to l / sqrt(12).
inline std::vector<double> variance_equivalent_sigma(const InitDistribution& d) {
  std::vector<double> out = d.sigmas();
  const double root12 = std::sqrt(12.0);
  for (double l : d.lengths()) out.push_back(l / root12);
  return out;
}

/// Fills `rows` consecutive draws of batch `batch` into out (rows x dim, row-major order of draws).
inline void sample_batch(const InitDistribution& d, std::uint64_t seed, std::uint64_t batch,
                         Eigen::Ref<Eigen::MatrixXd> out) {
  auto rng = batch_stream(seed, batch);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  const auto& sig = d.sigmas();
  const auto& len = d.lengths();
  const auto nd = static_cast<Eigen::Index>(sig.size());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index j = 0; j < nd; ++j) out(r, j) = sig[static_cast<std::size_t>(j)] * gauss(rng);
    for (std::size_t j = 0; j < len.size(); ++j) {
      out(r, nd + static_cast<Eigen::Index>(j)) = len[j] * unit(rng);
    }
  }
}

/// count x dim matrix of draws. Row r comes from stream (seed, r / kBatchSize), so the
/// result is independent of how many workers fill it.
inline Eigen::MatrixXd sample(const InitDistribution& d, Eigen::Index count, std::uint64_t seed) {
  require(count >= 1, Errc::InvalidArgument, "sample: count must be >= 1");
  const auto dim = static_cast<Eigen::Index>(d.dim());
  Eigen::MatrixXd out(count, dim);
  const auto batch = static_cast<Eigen::Index>(kBatchSize);
  const auto batches = static_cast<std::size_t>((count + batch - 1) / batch);
  parallel_for(batches, [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * batch;
    const Eigen::Index rows = std::min(batch, count - begin);
    sample_batch(d, seed, b, out.middleRows(begin, rows));
  });
  return out;
}

// ---------------------------------------------------------------------------
// JSON: {"kind": "normal"|"uniform"|"mixed", "sigmas": [...], "lengths": [...]}

inline std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::DiagonalNormal: return "normal";
    case InitKind::UniformBox: return "uniform";
    case InitKind::Mixed: return "mixed";
  }
  return "unknown";
}

inline nlohmann::json to_json(const InitDistribution& d) {
  nlohmann::json j;
  j["kind"] = to_string(d.kind());
  if (d.normalDims() > 0) j["sigmas"] = d.sigmas();
  if (d.uniformDims() > 0) j["lengths"] = d.lengths();
  return j;
}

inline InitDistribution init_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("kind") && j["kind"].is_string(), Errc::InvalidArgument,
          "init config needs a string 'kind'");
  require(!j.contains("covariance"), Errc::Unsupported,
          "only diagonal initializations are supported");
  auto reals = [&](const char* key) {
    std::vector<double> v;
    if (!j.contains(key)) return v;
    require(j[key].is_array(), Errc::InvalidArgument, std::string(key) + " must be an array");
    for (const auto& e : j[key]) {
      require(e.is_number(), Errc::InvalidArgument, std::string(key) + " must hold numbers");
      v.push_back(e.get<double>());
    }
    return v;
  };
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "normal") return InitDistribution::normal(reals("sigmas"));
  if (kind == "uniform") return InitDistribution::uniform(reals("lengths"));
  if (kind == "mixed") return InitDistribution::mixed(reals("sigmas"), reals("lengths"));
  throw Error(Errc::InvalidArgument, "unknown init kind '" + kind + "'");
}

}  // namespace mltherm
