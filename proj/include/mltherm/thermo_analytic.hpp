#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mltherm/dataset.hpp"
#include "mltherm/energy.hpp"
#include "mltherm/error.hpp"
#include "mltherm/init_dist.hpp"
#include "mltherm/nn_thermo.hpp"

namespace mltherm {

enum class Method { ClosedForm, Asymptotic, Oracle };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::ClosedForm: return "closed-form";
    case Method::Asymptotic: return "asymptotic";
    case Method::Oracle: return "oracle";
  }
  return "unknown";
}

struct OracleInfo {
  double estimate = 0.0;
  std::optional<double> stderr;
  std::size_t samples = 0;
};

/// Type I temperature with the pieces it was built from.
/// For method == Asymptotic, S0 is the leading entropy K ln(scale), E0 = T * S0,
/// Ef = 0 and droppedEf holds the minimum energy the asymptotic form ignores.
struct TemperatureReport {
  double E0 = 0.0;
  double Ef = 0.0;
  double S0 = 0.0;
  double T = 0.0;
  Method method = Method::ClosedForm;
  std::string formulaId;
  std::optional<double> scale;
  std::optional<double> droppedEf;
  std::optional<OracleInfo> oracle;
  std::optional<double> traceEf;
  bool lowerBound = false;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string reg_suffix(Regularization r) {
  switch (r) {
    case Regularization::None: return "";
    case Regularization::L1: return "+l1";
    case Regularization::L2: return "+l2";
  }
  return "";
}

inline void check_dims(const InitDistribution& dist, const Dataset& d) {
  require(static_cast<Eigen::Index>(dist.dim()) == d.K(), Errc::DimensionMismatch,
          "init distribution has " + std::to_string(dist.dim()) + " dims, dataset needs " +
              std::to_string(d.K()) + " (features + bias)");
}

}  // namespace detail

/// Exact <E0> for MSE (optionally with L1/L2) under any diagonal initialization.
inline double mean_initial_energy(const EnergyForm& form, const InitDistribution& dist,
                                  const Dataset& d) {
  if (form.base != EnergyBase::MSE) {
    throw Error(Errc::Unsupported, "no closed form for <E0> with " + to_string(form.base) +
                                       " energy; use the asymptotic formula or an oracle");
  }
  detail::check_dims(dist, d);
  const DataStats s = stats(d);
  const auto sig = variance_equivalent_sigma(dist);

  double e0 = s.labelMeanSq;
  for (std::size_t j = 0; j < sig.size(); ++j) {
    e0 += sig[j] * sig[j] * s.meanSq[static_cast<Eigen::Index>(j)];
  }
  if (form.reg == Regularization::L1) {
    double abs_mean = 0.0;
    for (double sigma : dist.sigmas()) abs_mean += std::sqrt(2.0 / std::numbers::pi) * sigma;
    for (double l : dist.lengths()) abs_mean += 0.25 * l;
    e0 += form.lambda * abs_mean;
  } else if (form.reg == Regularization::L2) {
    double sq_mean = 0.0;
    for (double sigma : sig) sq_mean += sigma * sigma;
    e0 += form.lambda * sq_mean;
  }
  return e0;
}

/// T = (<E0> - E_f) / S0. `oracleE0` replaces the closed form (needed for MAE/CE).
inline TemperatureReport temperature_type1(const EnergyForm& form, const InitDistribution& dist,
                                           const Dataset& d,
                                           const std::optional<OracleInfo>& oracleE0 = {},
                                           const SolverOptions& opts = {}) {
  detail::check_dims(dist, d);
  TemperatureReport r;
  if (oracleE0) {
    r.E0 = oracleE0->estimate;
    r.method = Method::Oracle;
    r.oracle = oracleE0;
    r.formulaId = "type1." + to_string(form.base) + detail::reg_suffix(form.reg) + ".oracle";
  } else {
    r.E0 = mean_initial_energy(form, dist, d);
    r.method = Method::ClosedForm;
    r.formulaId = "type1." + to_string(form.base) + detail::reg_suffix(form.reg) + "." +
                  to_string(dist.kind());
  }
  r.S0 = differential_entropy(dist);
  if (std::abs(r.S0) <= 1e-12) {
    throw Error(Errc::ZeroEntropy, "initialization entropy is 0; temperature undefined");
  }
  const MinEnergyResult fit = min_energy(form, d, opts);
  r.Ef = fit.finalEnergy;
  if (!fit.converged) r.warnings.push_back("minimizer did not converge; E_f is the best point found");
  if (form.base == EnergyBase::MSE && form.reg == Regularization::None) {
    r.traceEf = trace_residual_energy(stats(d));
  }
  r.T = (r.E0 - r.Ef) / r.S0;
  if (r.S0 < 0.0) r.warnings.push_back("negative entropy gives a negative temperature");
  return r;
}

/// Exact MSE temperature for one feature plus bias under normal (sigma1, sigma2).
inline double temperature_mse_normal_2d(double sigma1, double sigma2, const Dataset& d) {
  require(d.K() == 2, Errc::DimensionMismatch, "2D temperature needs exactly one feature");
  require(sigma1 > 0.0 && sigma2 > 0.0, Errc::InvalidArgument, "sigmas must be > 0");
  const DataStats s = stats(d);
  const double rho = s.corr2D.value_or(0.0);
  const double denom = 1.0 + std::log(2.0 * std::numbers::pi * sigma1 * sigma2);
  require(denom != 0.0, Errc::ZeroEntropy, "initialization entropy is 0; temperature undefined");
  const double num = sigma1 * sigma1 * s.meanSq[0] + s.labelMeanSq + sigma2 * sigma2 -
                     (1.0 - rho * rho) * s.labelVar;
  return num / denom;
}

// ---------------------------------------------------------------------------
// Asymptotic table

enum class Family { Normal, Uniform };

inline std::string to_string(Family f) { return f == Family::Normal ? "normal" : "uniform"; }

struct AsymptoticValue {
  double value = 0.0;  // +inf when only logValue is representable
  std::optional<double> logValue;
  std::string formulaId;
  bool lowerBound = false;
  bool overflow = false;
  std::vector<std::string> warnings;
};

/// Leading-order temperature at large scale (sigma for normal, l for uniform).
/// X^2-bar and |X|-bar are averaged over all K components, the bias included.
/// With `nn` set, the network's own initialization is used and family/scale are ignored.
inline AsymptoticValue asymptotic_temperature(const EnergyForm& form, Family family,
                                              const Dataset& d, double scale,
                                              const std::optional<NNSpec>& nn = {}) {
  AsymptoticValue out;
  if (nn) {
    require(form.base == EnergyBase::MSE && form.reg == Regularization::None,
            Errc::UnknownCombination, "network temperatures are defined for plain MSE only");
    out.value = nn_system_temperature(*nn, d);
    out.formulaId = "asym.nn." + to_string(nn->activation);
    return out;
  }
  require(std::isfinite(scale), Errc::InvalidArgument, "scale must be finite");
  if (scale < 10.0) {
    throw Error(Errc::ScaleTooSmall,
                "asymptotic formulas need scale >= 10, got " + std::to_string(scale));
  }
  if (scale < 1e3) out.warnings.push_back("scale below 1e3: asymptotic value is approximate");

  const DataStats s = stats(d);
  const double x2 = s.avgMeanSq();
  const double xabs = s.avgMeanAbs();
  const double ln_scale = std::log(scale);
  const auto k = static_cast<double>(d.K());
  const std::string id = to_string(form.base) + detail::reg_suffix(form.reg) + "." + to_string(family);
  out.formulaId = "asym." + id;

  auto unknown = [&] {
    return Error(Errc::UnknownCombination, "no asymptotic formula for " + id);
  };

  switch (form.base) {
    case EnergyBase::MSE: {
      double t = family == Family::Normal ? x2 * scale * scale / ln_scale
                                          : x2 * scale * scale / (12.0 * ln_scale);
      if (form.reg == Regularization::L2) t *= 1.0 + form.lambda / x2;
      out.value = t;
      break;
    }
    case EnergyBase::MAE:
      if (form.reg != Regularization::None) throw unknown();
      out.value = family == Family::Normal
                      ? std::sqrt(2.0 / std::numbers::pi) * (scale / ln_scale) * xabs
                      : 0.25 * (scale / ln_scale) * xabs;
      break;
    case EnergyBase::CrossEntropy: {
      if (form.reg != Regularization::None) throw unknown();
      const double log_t = family == Family::Normal
                               ? 0.5 * scale * scale - std::log(k * ln_scale)
                               : std::log(0.614) + 0.5 * scale - std::log(scale * ln_scale);
      out.logValue = log_t;
      out.value = std::exp(log_t);
      out.overflow = !std::isfinite(out.value);
      out.lowerBound = true;
      break;
    }
    case EnergyBase::MBE: throw unknown();
  }
  return out;
}

/// Asymptotic temperature packaged as a report; the dropped E_f is measured.
inline TemperatureReport asymptotic_report(const EnergyForm& form, Family family,
                                           const Dataset& d, double scale) {
  const AsymptoticValue a = asymptotic_temperature(form, family, d, scale);
  TemperatureReport r;
  r.method = Method::Asymptotic;
  r.formulaId = a.formulaId;
  r.scale = scale;
  r.T = a.value;
  r.S0 = static_cast<double>(d.K()) * std::log(scale);
  r.E0 = r.T * r.S0;
  r.Ef = 0.0;
  r.lowerBound = a.lowerBound;
  r.warnings = a.warnings;
  if (a.overflow) r.warnings.push_back("temperature exceeds double range");
  try {
    r.droppedEf = min_energy(form, d).finalEnergy;
  } catch (const Error& e) {
    r.warnings.push_back(std::string("dropped E_f not measured: ") + e.what());
  }
  return r;
}

/// Leading-order <E0> for cross-entropy at large scale. Normal: e^{sigma_K^2/2} times the
/// data mean of exp(sum_j sigma_j^2 x_ij^2 / 2). Uniform: data mean of
/// prod_j e^{l_j|x_ij|/2} / (l_j|x_ij|), including the bias component.
inline double ce_asymptotic_energy(const InitDistribution& dist, const Dataset& d) {
  detail::check_dims(dist, d);
  require(d.binary_labels(), Errc::NonBinaryLabels, "cross-entropy energy needs labels in {0, 1}");
  require(dist.kind() != InitKind::Mixed, Errc::Unsupported,
          "cross-entropy asymptotic energy needs a pure normal or uniform initialization");
  const Eigen::MatrixXd a = d.design();
  const Eigen::Index n = a.rows();
  Eigen::VectorXd logs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double x = a(i, j);
      if (dist.kind() == InitKind::DiagonalNormal) {
        const double s = dist.sigmas()[static_cast<std::size_t>(j)];
        acc += 0.5 * s * s * x * x;
      } else {
        const double lx = dist.lengths()[static_cast<std::size_t>(j)] * std::abs(x);
        if (lx == 0.0) {
          throw Error(Errc::Unsupported,
                      "zero feature value at row " + std::to_string(i) +
                          ": uniform asymptotic form diverges, use the exact oracle");
        }
        acc += 0.5 * lx - std::log(lx);
      }
    }
    logs[i] = acc;
  }
  const double top = logs.maxCoeff();
  const double mean = (logs.array() - top).exp().mean();
  return std::exp(top + std::log(mean));
}

}  // namespace mltherm
