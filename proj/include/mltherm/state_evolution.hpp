#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mltherm/dataset.hpp"
#include "mltherm/energy.hpp"
#include "mltherm/error.hpp"
#include "mltherm/init_dist.hpp"
#include "mltherm/oracle.hpp"
#include "mltherm/thermo_analytic.hpp"

namespace mltherm {

enum class JointSource { Histogram, ModelConditional };
enum class MarginalKind { Empirical, Uniform };

inline std::string to_string(JointSource s) {
  return s == JointSource::Histogram ? "histogram" : "model-conditional";
}
inline std::string to_string(MarginalKind m) {
  return m == MarginalKind::Empirical ? "empirical" : "uniform";
}

/// Discrete joint P(x, y). Each support entry holds the feature-cell indices
/// followed by the label-cell index. Zero-mass cells are omitted.
struct JointEstimate {
  std::vector<std::vector<int>> support;
  std::vector<double> probs;
  JointSource source = JointSource::Histogram;
  std::optional<MarginalKind> marginal;
};

namespace detail {

/// Equal-width binning of [lo, hi]; a degenerate range is one bin.
struct Axis {
  double lo = 0.0;
  double width = 1.0;
  int bins = 1;

  static Axis over(const Eigen::Ref<const Eigen::VectorXd>& v, int bins) {
    Axis a;
    a.lo = v.minCoeff();
    const double hi = v.maxCoeff();
    a.bins = hi > a.lo ? bins : 1;
    a.width = hi > a.lo ? (hi - a.lo) / bins : 1.0;
    return a;
  }

  int cell(double v) const {
    const auto c = static_cast<int>(std::floor((v - lo) / width));
    return std::clamp(c, 0, bins - 1);
  }
  double centre(int c) const { return lo + (c + 0.5) * width; }
  double edge(int c) const { return lo + c * width; }
};

inline int default_bins(Eigen::Index n) {
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
}

inline std::vector<int> resolve_bins(const std::optional<std::vector<int>>& bins, std::size_t axes,
                                     Eigen::Index n) {
  if (!bins) return std::vector<int>(axes, default_bins(n));
  std::vector<int> out = *bins;
  if (out.size() == 1) out.assign(axes, out.front());
  require(out.size() == axes, Errc::DimensionMismatch,
          "need one bin count per axis (" + std::to_string(axes) + ")");
  for (int b : out) require(b >= 1, Errc::InvalidArgument, "bin counts must be >= 1");
  return out;
}

inline JointEstimate from_map(const std::map<std::vector<int>, double>& cells, JointSource src,
                              std::optional<MarginalKind> marginal) {
  double total = 0.0;
  for (const auto& [k, p] : cells) total += p;
  require(total > 0.0, Errc::InvalidArgument, "joint estimate has no mass");
  JointEstimate j;
  j.source = src;
  j.marginal = marginal;
  for (const auto& [k, p] : cells) {
    if (p <= 0.0) continue;
    j.support.push_back(k);
    j.probs.push_back(p / total);
  }
  return j;
}

}  // namespace detail

/// Normalized cell frequencies over (features..., label). Bins default to ceil(sqrt(n))
/// per axis; a single entry applies to every axis.
inline JointEstimate joint_histogram(const Dataset& d,
                                     const std::optional<std::vector<int>>& bins = {}) {
  const auto axes = static_cast<std::size_t>(d.K());
  require(axes >= 2 && axes <= 3, Errc::DimensionTooHigh,
          "histogram joints support 1 or 2 features, got " + std::to_string(d.featureCount()));
  const auto b = detail::resolve_bins(bins, axes, d.n());
  std::vector<detail::Axis> ax;
  for (Eigen::Index j = 0; j < d.featureCount(); ++j) {
    ax.push_back(detail::Axis::over(d.features().col(j), b[static_cast<std::size_t>(j)]));
  }
  ax.push_back(detail::Axis::over(d.labels(), b.back()));

  std::map<std::vector<int>, double> counts;
  std::vector<int> key(axes);
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    for (Eigen::Index j = 0; j < d.featureCount(); ++j) {
      key[static_cast<std::size_t>(j)] = ax[static_cast<std::size_t>(j)].cell(d.features()(i, j));
    }
    key.back() = ax.back().cell(d.labels()[i]);
    counts[key] += 1.0;
  }
  return detail::from_map(counts, JointSource::Histogram, std::nullopt);
}

/// Gaussian residual model for regression conditionals.
struct NoiseSpec {
  double sigma = 0.0;
};

/// P(x, y) = P(y | x) P(x) with P(y | x) from a trained model evaluated at x-cell centres.
/// Cross-entropy models give P(y=1|x) directly over label cells {0, 1}; regression models
/// spread a discretized Gaussian of width noise->sigma over equal-width label cells
/// (a point mass on the cell holding the prediction when sigma = 0).
inline JointEstimate joint_from_model(const EnergyForm& form, const ModelParams& model,
                                      const Dataset& xs, MarginalKind marginal,
                                      const std::optional<NoiseSpec>& noise = {},
                                      const std::optional<std::vector<int>>& bins = {}) {
  const auto f = static_cast<std::size_t>(xs.featureCount());
  require(f <= 2, Errc::DimensionTooHigh,
          "model joints support 1 or 2 features, got " + std::to_string(f));
  require(model.mu.size() == xs.K(), Errc::DimensionMismatch,
          "model parameters do not match the feature count");
  const bool classifier = form.base == EnergyBase::CrossEntropy;
  if (!classifier) {
    require(noise.has_value(), Errc::MissingNoiseSpec,
            "regression models need a noise spec to define P(y|x)");
    require(noise->sigma >= 0.0 && std::isfinite(noise->sigma), Errc::InvalidArgument,
            "noise sigma must be finite and >= 0");
  }
  const auto b = detail::resolve_bins(bins, f + 1, xs.n());
  std::vector<detail::Axis> ax;
  for (std::size_t j = 0; j < f; ++j) {
    ax.push_back(detail::Axis::over(xs.features().col(static_cast<Eigen::Index>(j)), b[j]));
  }
  const detail::Axis yax = detail::Axis::over(xs.labels(), b.back());

  // P(x) over feature cells.
  std::map<std::vector<int>, double> px;
  if (marginal == MarginalKind::Empirical) {
    std::vector<int> key(f);
    for (Eigen::Index i = 0; i < xs.n(); ++i) {
      for (std::size_t j = 0; j < f; ++j) key[j] = ax[j].cell(xs.features()(i, static_cast<Eigen::Index>(j)));
      px[key] += 1.0;
    }
  } else {
    std::vector<int> key(f, 0);
    while (true) {
      px[key] = 1.0;
      std::size_t j = 0;
      while (j < f && ++key[j] == ax[j].bins) key[j++] = 0;
      if (j == f) break;
    }
  }

  std::map<std::vector<int>, double> joint;
  for (const auto& [xkey, pxv] : px) {
    double z = model.mu[static_cast<Eigen::Index>(f)];
    for (std::size_t j = 0; j < f; ++j) z += model.mu[static_cast<Eigen::Index>(j)] * ax[j].centre(xkey[j]);
    std::vector<int> key = xkey;
    key.push_back(0);
    if (classifier) {
      const double p1 = detail::logistic(z);
      key.back() = 0;
      joint[key] += pxv * (1.0 - p1);
      key.back() = 1;
      joint[key] += pxv * p1;
      continue;
    }
    if (noise->sigma == 0.0 || yax.bins == 1) {
      key.back() = yax.cell(z);
      joint[key] += pxv;
      continue;
    }
    std::vector<double> py(static_cast<std::size_t>(yax.bins));
    double sum = 0.0;
    const double s = noise->sigma * std::numbers::sqrt2;
    for (int c = 0; c < yax.bins; ++c) {
      const double lo = (yax.edge(c) - z) / s;
      const double hi = (yax.edge(c + 1) - z) / s;
      const double p = 0.5 * (std::erf(hi) - std::erf(lo));
      py[static_cast<std::size_t>(c)] = p;
      sum += p;
    }
    if (!(sum > 0.0)) {
      // Prediction far outside the label range: all mass sits in the nearest cell.
      key.back() = yax.cell(z);
      joint[key] += pxv;
      continue;
    }
    for (int c = 0; c < yax.bins; ++c) {
      key.back() = c;
      joint[key] += pxv * py[static_cast<std::size_t>(c)] / sum;
    }
  }
  return detail::from_map(joint, JointSource::ModelConditional, marginal);
}

/// -sum P ln P in nats.
inline double data_entropy(const JointEstimate& j) {
  double s = 0.0;
  for (double p : j.probs) {
    if (p > 0.0) s -= p * std::log(p);
  }
  return std::max(s, 0.0);
}

/// T_{j,j+1} = (E_next - E_prev) / (S_prev - S_next).
inline double shift_temperature(double e_prev, double s_prev, double e_next, double s_next) {
  const double ds = s_prev - s_next;
  if (std::abs(ds) <= 1e-12 * std::max({1.0, std::abs(s_prev), std::abs(s_next)})) {
    throw Error(Errc::Undefined, "entropy unchanged between states; shift temperature undefined");
  }
  return (e_next - e_prev) / ds;
}

// ---------------------------------------------------------------------------
// Train / retrain pipeline

struct JointConfig {
  MarginalKind marginal = MarginalKind::Empirical;
  std::optional<NoiseSpec> noise;  // default: sqrt(E_f) of each step
  std::optional<std::vector<int>> bins;
  /// Used for the phase temperature when no closed-form <E0> exists.
  std::size_t oracleSamples = 100000;
  std::uint64_t seed = 0;
};

struct ShiftStep {
  std::size_t index = 0;
  std::optional<double> energy;
  std::optional<double> dataEntropy;
  std::optional<double> phaseT;
  std::optional<double> shiftT;  // T_{j,j+1}; absent for the last step
  std::vector<std::string> errors;
};

/// Retrains on each dataset in turn and records phase and shift temperatures.
/// A failing step keeps its error messages and the pipeline continues.
inline std::vector<ShiftStep> refresh_pipeline(const std::vector<Dataset>& seq,
                                               const EnergyForm& form,
                                               const InitDistribution& dist,
                                               const JointConfig& cfg = {}) {
  require(seq.size() >= 2, Errc::InvalidArgument, "refresh pipeline needs at least 2 datasets");
  std::vector<ShiftStep> steps(seq.size());
  for (std::size_t j = 0; j < seq.size(); ++j) {
    ShiftStep& st = steps[j];
    st.index = j;
    const Dataset& d = seq[j];
    try {
      std::optional<OracleInfo> oracle;
      if (form.base != EnergyBase::MSE) {
        const McEstimate mc = mc_mean_energy(form, dist, d, cfg.oracleSamples, cfg.seed);
        oracle = OracleInfo{mc.estimate, mc.stderr, mc.samples};
      }
      st.phaseT = temperature_type1(form, dist, d, oracle).T;
    } catch (const Error& e) {
      st.errors.push_back(std::string("phase temperature: ") + e.what());
    }
    try {
      const MinEnergyResult fit = min_energy(form, d);
      st.energy = fit.finalEnergy;
      const auto noise = cfg.noise ? cfg.noise
                                   : std::optional<NoiseSpec>(NoiseSpec{std::sqrt(std::max(fit.finalEnergy, 0.0))});
      st.dataEntropy =
          data_entropy(joint_from_model(form, fit.params, d, cfg.marginal, noise, cfg.bins));
    } catch (const Error& e) {
      st.errors.push_back(std::string("state: ") + e.what());
    }
  }
  for (std::size_t j = 0; j + 1 < steps.size(); ++j) {
    const ShiftStep& a = steps[j];
    const ShiftStep& b = steps[j + 1];
    if (!(a.energy && a.dataEntropy && b.energy && b.dataEntropy)) continue;
    try {
      steps[j].shiftT = shift_temperature(*a.energy, *a.dataEntropy, *b.energy, *b.dataEntropy);
    } catch (const Error&) {
      // equal entropies: left undefined
    }
  }
  return steps;
}

// ---------------------------------------------------------------------------
// Mixing

struct MixingReport {
  double TA = 0.0;
  double TB = 0.0;
  double TAB = 0.0;
  double X2A = 0.0;
  double X2B = 0.0;
  double X2AB = 0.0;
  double deltaEA = 0.0;  // per-sample energy change of A's points after mixing
  double deltaEB = 0.0;
  Eigen::Index nA = 0;
  Eigen::Index nB = 0;
  std::string flow;  // "A->B", "B->A" or "none"
  std::string formulaId;
};

/// Merges two datasets under the asymptotic MSE temperature at the given scale.
inline MixingReport mixing_experiment(const Dataset& a, const Dataset& b, const EnergyForm& form,
                                      Family family, double scale) {
  require(form.base == EnergyBase::MSE, Errc::Unsupported, "mixing is defined for MSE energy only");
  require(a.featureCount() == b.featureCount(), Errc::DimensionMismatch,
          "mixed datasets must have the same width");
  const Dataset ab = concat(a, b);
  MixingReport r;
  const auto ta = asymptotic_temperature(form, family, a, scale);
  r.TA = ta.value;
  r.TB = asymptotic_temperature(form, family, b, scale).value;
  r.TAB = asymptotic_temperature(form, family, ab, scale).value;
  r.formulaId = ta.formulaId;
  r.X2A = stats(a).avgMeanSq();
  r.X2B = stats(b).avgMeanSq();
  r.X2AB = stats(ab).avgMeanSq();
  const double s2 = family == Family::Normal ? scale * scale : scale * scale / 12.0;
  const auto k = static_cast<double>(a.K());
  r.deltaEA = k * s2 * (r.X2AB - r.X2A);
  r.deltaEB = k * s2 * (r.X2AB - r.X2B);
  r.nA = a.n();
  r.nB = b.n();
  r.flow = r.TA > r.TB ? "A->B" : (r.TB > r.TA ? "B->A" : "none");
  return r;
}

}  // namespace mltherm
