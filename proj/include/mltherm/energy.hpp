#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "mltherm/dataset.hpp"
#include "mltherm/error.hpp"

namespace mltherm {

enum class EnergyBase { MSE, MAE, MBE, CrossEntropy };
enum class Regularization { None, L1, L2 };

/// Loss-as-energy selector. lambda is nonzero exactly when a regularizer is set.
struct EnergyForm {
  EnergyBase base = EnergyBase::MSE;
  Regularization reg = Regularization::None;
  double lambda = 0.0;

  static EnergyForm make(EnergyBase base, Regularization reg = Regularization::None,
                         double lambda = 0.0) {
    require(std::isfinite(lambda) && lambda >= 0.0, Errc::InvalidArgument,
            "lambda must be finite and >= 0");
    require((reg == Regularization::None) == (lambda == 0.0), Errc::InvalidArgument,
            "lambda must be 0 iff no regularization is selected");
    return EnergyForm{base, reg, lambda};
  }

  static EnergyForm mse() { return make(EnergyBase::MSE); }
  static EnergyForm mae() { return make(EnergyBase::MAE); }
  static EnergyForm mbe() { return make(EnergyBase::MBE); }
  static EnergyForm cross_entropy() { return make(EnergyBase::CrossEntropy); }

  bool operator==(const EnergyForm&) const = default;
};

inline std::string to_string(EnergyBase b) {
  switch (b) {
    case EnergyBase::MSE: return "mse";
    case EnergyBase::MAE: return "mae";
    case EnergyBase::MBE: return "mbe";
    case EnergyBase::CrossEntropy: return "ce";
  }
  return "unknown";
}

inline std::string to_string(Regularization r) {
  switch (r) {
    case Regularization::None: return "none";
    case Regularization::L1: return "l1";
    case Regularization::L2: return "l2";
  }
  return "unknown";
}

/// Model parameters; the last entry is the intercept.
struct ModelParams {
  Eigen::VectorXd mu;
};

namespace detail {

/// log(1 + e^t) without overflow.
inline double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

inline double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double penalty(const EnergyForm& form, const Eigen::Ref<const Eigen::VectorXd>& mu) {
  switch (form.reg) {
    case Regularization::None: return 0.0;
    case Regularization::L1: return form.lambda * mu.cwiseAbs().sum();
    case Regularization::L2: return form.lambda * mu.squaredNorm();
  }
  return 0.0;
}

}  // namespace detail

/// Energy of one parameter point on a fixed dataset. Holds the bias-augmented
/// design so repeated evaluation (Monte-Carlo, solvers) does not rebuild it.
class EnergyEvaluator {
 public:
  EnergyEvaluator(const EnergyForm& form, const Dataset& d)
      : form_(form), design_(d.design()), labels_(d.labels()) {
    if (form.base == EnergyBase::CrossEntropy) {
      require(d.binary_labels(), Errc::NonBinaryLabels,
              "cross-entropy energy needs labels in {0, 1}");
    }
  }

  Eigen::Index dim() const { return design_.cols(); }
  const EnergyForm& form() const { return form_; }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& mu) const {
    require(mu.size() == dim(), Errc::DimensionMismatch,
            "parameter vector has " + std::to_string(mu.size()) + " entries, dataset needs " +
                std::to_string(dim()));
    const Eigen::Index n = design_.rows();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = design_.row(i).dot(mu);
      const double y = labels_[i];
      switch (form_.base) {
        case EnergyBase::MSE: acc += (z - y) * (z - y); break;
        case EnergyBase::MAE: acc += std::abs(z - y); break;
        case EnergyBase::MBE: acc += z - y; break;
        case EnergyBase::CrossEntropy: acc += detail::softplus(-z) + (1.0 - y) * z; break;
      }
    }
    return acc / static_cast<double>(n) + detail::penalty(form_, mu);
  }

 private:
  EnergyForm form_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> design_;
  Eigen::VectorXd labels_;
};

inline double evaluate(const EnergyForm& form, const ModelParams& p, const Dataset& d) {
  return EnergyEvaluator(form, d)(p.mu);
}

// ---------------------------------------------------------------------------
// Minimum energy

struct SolverOptions {
  double tol = 1e-8;
  int maxIter = 10000;
  /// Smoothing floor for |residual| in the MAE reweighting.
  double maeEpsilon = 1e-9;
};

struct MinEnergyResult {
  ModelParams params;
  double finalEnergy = 0.0;
  bool converged = true;
  int iterations = 0;
};

namespace detail {

inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  // Minimum-norm solution; rank-deficient designs fall back to the pseudoinverse.
  return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(a).solve(b);
}

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

inline MinEnergyResult mse_l1_coordinate_descent(const EnergyForm& form, const Dataset& d,
                                                 const SolverOptions& opts) {
  const Eigen::MatrixXd a = d.design();
  const Eigen::VectorXd& y = d.labels();
  const auto n = static_cast<double>(a.rows());
  const Eigen::Index k = a.cols();

  Eigen::VectorXd colsq(k);
  for (Eigen::Index j = 0; j < k; ++j) colsq[j] = 2.0 * a.col(j).squaredNorm() / n;

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd resid = y;  // y - A mu
  MinEnergyResult out;
  out.converged = false;
  for (int it = 1; it <= opts.maxIter; ++it) {
    double max_step = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (colsq[j] == 0.0) continue;
      const double old = mu[j];
      const double rho = 2.0 * a.col(j).dot(resid) / n + colsq[j] * old;
      const double updated = soft_threshold(rho, form.lambda) / colsq[j];
      if (updated != old) {
        resid -= a.col(j) * (updated - old);
        mu[j] = updated;
        max_step = std::max(max_step, std::abs(updated - old));
      }
    }
    out.iterations = it;
    if (max_step <= opts.tol * (1.0 + mu.cwiseAbs().maxCoeff())) {
      out.converged = true;
      break;
    }
  }
  out.params.mu = mu;
  return out;
}

/// Iteratively reweighted least squares on the majorizer |r| <= r^2/(2|r0|) + |r0|/2.
inline MinEnergyResult mae_irls(const EnergyForm& form, const Dataset& d,
                                const SolverOptions& opts) {
  const Eigen::MatrixXd a = d.design();
  const Eigen::VectorXd& y = d.labels();
  const Eigen::Index n = a.rows();
  const Eigen::Index k = a.cols();
  const EnergyEvaluator energy(form, d);

  Eigen::VectorXd mu = least_squares(a, y);
  double best = energy(mu);
  Eigen::VectorXd best_mu = mu;
  MinEnergyResult out;
  out.converged = false;

  const bool reg = form.reg != Regularization::None;
  Eigen::MatrixXd stacked(n + (reg ? k : 0), k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(stacked.rows());
  double prev = best;
  for (int it = 1; it <= opts.maxIter; ++it) {
    const Eigen::VectorXd r = a * mu - y;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = std::sqrt(1.0 / (std::max(std::abs(r[i]), opts.maeEpsilon) *
                                        static_cast<double>(n)));
      stacked.row(i) = w * a.row(i);
      rhs[i] = w * y[i];
    }
    if (reg) {
      stacked.bottomRows(k).setZero();
      for (Eigen::Index j = 0; j < k; ++j) {
        const double c = form.reg == Regularization::L2
                             ? 2.0 * form.lambda
                             : form.lambda / std::max(std::abs(mu[j]), opts.maeEpsilon);
        stacked(n + j, j) = std::sqrt(c);
      }
    }
    mu = least_squares(stacked, rhs);
    const double e = energy(mu);
    if (e < best) {
      best = e;
      best_mu = mu;
    }
    out.iterations = it;
    if (std::abs(prev - e) <= opts.tol * std::max(1.0, std::abs(e))) {
      out.converged = true;
      break;
    }
    prev = e;
  }
  out.params.mu = best_mu;
  return out;
}

/// Proximal gradient descent with backtracking; the prox step only acts under L1.
inline MinEnergyResult ce_gradient_descent(const EnergyForm& form, const Dataset& d,
                                           const SolverOptions& opts,
                                           const Eigen::VectorXd* start = nullptr) {
  const Eigen::MatrixXd a = d.design();
  const Eigen::VectorXd& y = d.labels();
  const auto n = static_cast<double>(a.rows());
  const Eigen::Index k = a.cols();
  const double l2 = form.reg == Regularization::L2 ? form.lambda : 0.0;
  const double l1 = form.reg == Regularization::L1 ? form.lambda : 0.0;

  auto smooth = [&](const Eigen::VectorXd& mu) {
    const Eigen::VectorXd z = a * mu;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      acc += softplus(-z[i]) + (1.0 - y[i]) * z[i];
    }
    return acc / n + l2 * mu.squaredNorm();
  };
  auto gradient = [&](const Eigen::VectorXd& mu) {
    const Eigen::VectorXd z = a * mu;
    Eigen::VectorXd p(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) p[i] = logistic(z[i]) - y[i];
    return Eigen::VectorXd(a.transpose() * p / n + 2.0 * l2 * mu);
  };
  auto prox = [&](Eigen::VectorXd v, double t) {
    if (l1 > 0.0) {
      for (Eigen::Index j = 0; j < k; ++j) v[j] = soft_threshold(v[j], t * l1);
    }
    return v;
  };

  Eigen::VectorXd mu = start ? *start : Eigen::VectorXd::Zero(k);
  double step = 1.0;
  MinEnergyResult out;
  out.converged = false;
  double f = smooth(mu);
  for (int it = 1; it <= opts.maxIter; ++it) {
    const Eigen::VectorXd g = gradient(mu);
    Eigen::VectorXd next;
    double f_next = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      next = prox(mu - step * g, step);
      const Eigen::VectorXd diff = next - mu;
      f_next = smooth(next);
      if (f_next <= f + g.dot(diff) + diff.squaredNorm() / (2.0 * step)) break;
      step *= 0.5;
    }
    const double mapping_norm = (mu - next).norm() / step;
    mu = next;
    f = f_next;
    out.iterations = it;
    if (mapping_norm <= opts.tol) {
      out.converged = true;
      break;
    }
    step *= 1.25;
  }
  out.params.mu = mu;
  return out;
}

}  // namespace detail

/// Parameters minimizing the energy and the energy there (E_f). Non-convergence is
/// reported through `converged` with the best point found.
inline MinEnergyResult min_energy(const EnergyForm& form, const Dataset& d,
                                  const SolverOptions& opts = {}) {
  MinEnergyResult out;
  switch (form.base) {
    case EnergyBase::MBE:
      throw Error(Errc::NoFiniteMinimum, "mean bias error is linear in the parameters");
    case EnergyBase::MSE:
      if (form.reg == Regularization::None) {
        out.params.mu = detail::least_squares(d.design(), d.labels());
      } else if (form.reg == Regularization::L2) {
        const Eigen::MatrixXd a = d.design();
        const auto n = static_cast<double>(a.rows());
        Eigen::MatrixXd h = a.transpose() * a / n;
        h.diagonal().array() += form.lambda;
        out.params.mu = h.ldlt().solve(a.transpose() * d.labels() / n);
      } else {
        out = detail::mse_l1_coordinate_descent(form, d, opts);
      }
      break;
    case EnergyBase::MAE: out = detail::mae_irls(form, d, opts); break;
    case EnergyBase::CrossEntropy:
      require(d.binary_labels(), Errc::NonBinaryLabels,
              "cross-entropy energy needs labels in {0, 1}");
      out = detail::ce_gradient_descent(form, d, opts);
      break;
  }
  out.finalEnergy = evaluate(form, out.params, d);
  return out;
}

/// tr{C_x - C_xy C_y^-1 C_yx} with population covariances, kept for comparison with
/// the least-squares minimum. Empty when Var(Y) == 0.
inline std::optional<double> trace_residual_energy(const DataStats& s) {
  if (!(s.labelVar > 0.0)) return std::nullopt;
  return s.covXX.trace() - s.covXY.squaredNorm() / s.labelVar;
}

}  // namespace mltherm
