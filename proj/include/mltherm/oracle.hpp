#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "mltherm/dataset.hpp"
#include "mltherm/energy.hpp"
#include "mltherm/error.hpp"
#include "mltherm/init_dist.hpp"
#include "mltherm/parallel.hpp"
#include "mltherm/rng.hpp"

namespace mltherm {

/// Sample mean with its standard error. stderr is empty for a single sample.
struct McEstimate {
  double estimate = 0.0;
  std::optional<double> stderr;
  std::size_t samples = 0;
};

/// Monte-Carlo <E0>: mean energy over draws of `dist`. Draws use the same batch
/// layout as sample(), and batch moments merge in batch order, so the result is
/// bit-identical for any worker count.
inline McEstimate mc_mean_energy(const EnergyForm& form, const InitDistribution& dist,
                                 const Dataset& d, std::size_t samples, std::uint64_t seed,
                                 unsigned workers = worker_count()) {
  require(samples >= 1, Errc::InvalidArgument, "mc_mean_energy: samples must be >= 1");
  require(static_cast<Eigen::Index>(dist.dim()) == d.K(), Errc::DimensionMismatch,
          "init distribution has " + std::to_string(dist.dim()) + " dims, dataset needs " +
              std::to_string(d.K()));
  const EnergyEvaluator energy(form, d);
  const std::size_t batches = (samples + kBatchSize - 1) / kBatchSize;
  std::vector<Moments> partial(batches);
  parallel_for(
      batches,
      [&](std::size_t b) {
        const std::size_t rows = std::min(kBatchSize, samples - b * kBatchSize);
        Eigen::MatrixXd draws(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dist.dim()));
        sample_batch(dist, seed, b, draws);
        Moments m;
        for (Eigen::Index r = 0; r < draws.rows(); ++r) m.add(energy(draws.row(r).transpose()));
        partial[b] = m;
      },
      workers);
  Moments total;
  for (const auto& m : partial) total.merge(m);
  return McEstimate{total.mean, total.stderr_of_mean(), samples};
}

/// Gauss-Hermite rule for the standard normal weight (probabilists' form):
/// sum_i w_i f(x_i) ~ E[f(Z)], Z ~ N(0,1). Golub-Welsch on the Jacobi matrix.
inline std::pair<std::vector<double>, std::vector<double>> gauss_hermite_rule(int nodes) {
  require(nodes >= 1, Errc::InvalidArgument, "gauss_hermite_rule: nodes must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) {
    jacobi(k - 1, k) = jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  std::vector<double> x(static_cast<std::size_t>(nodes));
  std::vector<double> w(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    x[static_cast<std::size_t>(i)] = eig.eigenvalues()[i];
    const double v0 = eig.eigenvectors()(0, i);
    w[static_cast<std::size_t>(i)] = v0 * v0;
  }
  return {x, w};
}

/// Tensor-product Gauss-Hermite estimate of <E0> under a diagonal normal, dim <= 3.
inline double quadrature_mean_energy(const EnergyForm& form, const InitDistribution& dist,
                                     const Dataset& d, int nodes) {
  require(dist.kind() == InitKind::DiagonalNormal, Errc::Unsupported,
          "quadrature oracle only handles diagonal normal initializations");
  require(dist.dim() <= 3, Errc::DimensionTooHigh,
          "quadrature oracle is limited to 3 dimensions, got " + std::to_string(dist.dim()));
  require(nodes >= 16 && nodes <= 256, Errc::InvalidArgument, "nodes must lie in [16, 256]");
  require(static_cast<Eigen::Index>(dist.dim()) == d.K(), Errc::DimensionMismatch,
          "init distribution and dataset dimensions differ");

  const auto [x, w] = gauss_hermite_rule(nodes);
  const EnergyEvaluator energy(form, d);
  const std::size_t dim = dist.dim();
  const auto& sig = dist.sigmas();

  std::vector<std::size_t> idx(dim, 0);
  Eigen::VectorXd mu(static_cast<Eigen::Index>(dim));
  double total = 0.0;
  while (true) {
    double weight = 1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      mu[static_cast<Eigen::Index>(j)] = sig[j] * x[idx[j]];
      weight *= w[idx[j]];
    }
    if (weight > 0.0) total += weight * energy(mu);
    std::size_t j = 0;
    while (j < dim && ++idx[j] == static_cast<std::size_t>(nodes)) idx[j++] = 0;
    if (j == dim) break;
  }
  return total;
}

/// Shannon entropy of the distribution discretized on a grid of spacing `spacing`
/// covering [-halfwidth, halfwidth] in every dimension. Cell probabilities are exact
/// cell masses, renormalized to sum to one. Approaches S_diff - dim * ln(spacing).
inline double discrete_entropy_grid(const InitDistribution& dist, double spacing,
                                    double halfwidth) {
  require(spacing > 0.0 && std::isfinite(spacing), Errc::InvalidArgument, "spacing must be > 0");
  require(halfwidth > 0.0 && std::isfinite(halfwidth), Errc::InvalidArgument,
          "halfwidth must be > 0");
  const auto cells = static_cast<std::size_t>(std::ceil(2.0 * halfwidth / spacing - 1e-9));
  const double origin = -0.5 * static_cast<double>(cells) * spacing;

  const std::size_t dim = dist.dim();
  double total_cells = 1.0;
  for (std::size_t j = 0; j < dim; ++j) total_cells *= static_cast<double>(cells);
  require(total_cells <= 5e7, Errc::InvalidArgument, "grid too fine for this dimension");

  std::vector<std::vector<double>> mass(dim, std::vector<double>(cells));
  for (std::size_t j = 0; j < dim; ++j) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      const double lo = origin + static_cast<double>(c) * spacing;
      const double hi = lo + spacing;
      double p = 0.0;
      if (j < dist.normalDims()) {
        const double s = dist.sigmas()[j] * std::numbers::sqrt2;
        p = 0.5 * (std::erfc(lo / s) - std::erfc(hi / s));
      } else {
        const double l = dist.lengths()[j - dist.normalDims()];
        p = std::max(0.0, std::min(hi, 0.5 * l) - std::max(lo, -0.5 * l)) / l;
      }
      mass[j][c] = p;
      sum += p;
    }
    if (sum < 1.0 - 1e-6) {
      throw Error(Errc::InsufficientHalfwidth,
                  "grid covers only " + std::to_string(sum) + " of the mass in dimension " +
                      std::to_string(j));
    }
    for (double& p : mass[j]) p /= sum;
  }

  std::vector<std::size_t> idx(dim, 0);
  double entropy = 0.0;
  while (true) {
    double p = 1.0;
    for (std::size_t j = 0; j < dim; ++j) p *= mass[j][idx[j]];
    if (p > 0.0) entropy -= p * std::log(p);
    std::size_t j = 0;
    while (j < dim && ++idx[j] == cells) idx[j++] = 0;
    if (j == dim) break;
  }
  return entropy;
}

}  // namespace mltherm
