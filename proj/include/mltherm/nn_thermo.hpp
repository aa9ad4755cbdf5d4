#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "mltherm/dataset.hpp"
#include "mltherm/energy.hpp"
#include "mltherm/error.hpp"
#include "mltherm/parallel.hpp"
#include "mltherm/rng.hpp"

namespace mltherm {

enum class Activation { Tanh, Sigmoid, ReLU };

/// Same sigma for every weight and bias.
struct ConstantSigma {
  double sigma = 1.0;
};
/// sigma_p = sigma0 / sqrt(l_{p-1}).
struct PerLayerSigma {
  double sigma0 = 1.0;
};
/// Every parameter uniform on [-l/2, l/2].
struct UniformConstant {
  double length = 1.0;
};

using NNInit = std::variant<ConstantSigma, PerLayerSigma, UniformConstant>;

/// Fully connected network l_0 -> l_1 -> ... -> l_L. Hidden layers use `activation`,
/// the output layer is linear.
struct NNSpec {
  std::vector<int> layers;
  Activation activation = Activation::Tanh;
  NNInit init = ConstantSigma{};

  int depth() const { return static_cast<int>(layers.size()) - 1; }

  void validate() const {
    require(layers.size() >= 2, Errc::InvalidArgument, "network needs at least one layer (L >= 1)");
    for (int l : layers) require(l >= 1, Errc::InvalidArgument, "layer sizes must be >= 1");
    const bool ok = std::visit(
        [](const auto& i) {
          using I = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<I, ConstantSigma>) return i.sigma > 0.0;
          if constexpr (std::is_same_v<I, PerLayerSigma>) return i.sigma0 > 0.0;
          if constexpr (std::is_same_v<I, UniformConstant>) return i.length > 0.0;
        },
        init);
    require(ok, Errc::InvalidArgument, "initialization scale must be > 0");
  }

  /// Total number of weights and biases.
  long long parameter_count() const {
    long long total = 0;
    for (std::size_t p = 1; p < layers.size(); ++p) {
      total += static_cast<long long>(layers[p]) * (layers[p - 1] + 1);
    }
    return total;
  }
};

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::ReLU: return "relu";
  }
  return "unknown";
}

enum class EngineClass { FirstType, SecondType };

inline std::string to_string(EngineClass e) {
  return e == EngineClass::FirstType ? "FirstType" : "SecondType";
}

/// Per-layer energies, entropies and temperatures of a network, plus the
/// heat-engine summary. E_f is taken as 0 (asymptotic regime).
struct LayerReport {
  std::vector<double> deltaE;
  std::vector<double> entropy;
  std::vector<double> localT;
  std::optional<std::vector<double>> xi;
  double eta = 0.0;
  double systemT = 0.0;
  EngineClass engineClass = EngineClass::FirstType;
  std::string classificationRule;
  std::vector<std::string> warnings;
};

/// Effective standard deviation of layer p's parameters, p = 1..L (index p-1).
/// Uniform widths map to l / sqrt(12).
inline std::vector<double> layer_sigmas(const NNSpec& spec) {
  spec.validate();
  std::vector<double> out;
  for (int p = 1; p <= spec.depth(); ++p) {
    out.push_back(std::visit(
        [&](const auto& i) {
          using I = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<I, ConstantSigma>) return i.sigma;
          if constexpr (std::is_same_v<I, PerLayerSigma>) {
            return i.sigma0 / std::sqrt(static_cast<double>(spec.layers[p - 1]));
          }
          if constexpr (std::is_same_v<I, UniformConstant>) return i.length / std::sqrt(12.0);
        },
        spec.init));
  }
  return out;
}

namespace detail {

inline NNSpec as_normal(const NNSpec& spec) {
  if (const auto* u = std::get_if<UniformConstant>(&spec.init)) {
    NNSpec out = spec;
    out.init = ConstantSigma{u->length / std::sqrt(12.0)};
    return out;
  }
  return spec;
}

inline void check_width(const NNSpec& spec, const Dataset& d) {
  require(d.featureCount() == spec.layers.front(), Errc::DimensionMismatch,
          "network input width " + std::to_string(spec.layers.front()) + " but dataset has " +
              std::to_string(d.featureCount()) + " features");
}

}  // namespace detail

/// Asymptotic energy released by each layer, Delta E_p for p = 1..L.
/// `xi` (size L-1) are sigmoid saturation fractions for hidden layers; 0.5 when absent.
inline std::vector<double> layer_energies(const NNSpec& spec, const Dataset& d,
                                          const std::optional<std::vector<double>>& xi = {}) {
  spec.validate();
  detail::check_width(spec, d);
  const int depth = spec.depth();
  if (xi) {
    require(static_cast<int>(xi->size()) == depth - 1, Errc::DimensionMismatch,
            "xi needs one entry per hidden layer");
  }
  const auto sig = layer_sigmas(spec);
  const double input_sq = stats(d).rowNormSq();
  const auto& l = spec.layers;

  std::vector<double> de(static_cast<std::size_t>(depth));
  de[0] = l[1] * input_sq * sig[0] * sig[0];
  for (int p = 2; p <= depth; ++p) {
    const double s2 = sig[static_cast<std::size_t>(p - 1)] * sig[static_cast<std::size_t>(p - 1)];
    double value = 0.0;
    switch (spec.activation) {
      case Activation::Tanh: value = l[p] * (l[p - 1] + 1.0) * s2; break;
      case Activation::Sigmoid: {
        const double frac = xi ? (*xi)[static_cast<std::size_t>(p - 2)] : 0.5;
        value = l[p] * (frac * l[p - 1] + 1.0) * s2;
        break;
      }
      case Activation::ReLU:
        value = 0.5 * l[p] * s2 * de[static_cast<std::size_t>(p - 2)];
        break;
    }
    de[static_cast<std::size_t>(p - 1)] = value;
  }
  return de;
}

namespace detail {

/// ln Delta E_p, same formulas as layer_energies evaluated in log space.
inline std::vector<double> log_layer_energies(const NNSpec& spec, const Dataset& d,
                                              const std::optional<std::vector<double>>& xi) {
  const auto sig = layer_sigmas(spec);
  const auto& l = spec.layers;
  std::vector<double> out(sig.size());
  out[0] = std::log(l[1] * stats(d).rowNormSq()) + 2.0 * std::log(sig[0]);
  for (std::size_t p = 1; p < sig.size(); ++p) {
    const double log_s2 = 2.0 * std::log(sig[p]);
    switch (spec.activation) {
      case Activation::Tanh: out[p] = std::log(l[p + 1] * (l[p] + 1.0)) + log_s2; break;
      case Activation::Sigmoid: {
        const double frac = xi ? (*xi)[p - 1] : 0.5;
        out[p] = std::log(l[p + 1] * (frac * l[p] + 1.0)) + log_s2;
        break;
      }
      case Activation::ReLU: out[p] = std::log(0.5 * l[p + 1]) + log_s2 + out[p - 1]; break;
    }
  }
  return out;
}

}  // namespace detail

/// S_p = l_p (l_{p-1} + 1) ln sigma_p.
inline std::vector<double> layer_entropies(const NNSpec& spec) {
  const auto sig = layer_sigmas(spec);
  std::vector<double> s;
  for (int p = 1; p <= spec.depth(); ++p) {
    s.push_back(spec.layers[p] * (spec.layers[p - 1] + 1.0) *
                std::log(sig[static_cast<std::size_t>(p - 1)]));
  }
  return s;
}

inline std::vector<double> layer_temperatures(const NNSpec& spec, const Dataset& d,
                                              const std::optional<std::vector<double>>& xi = {}) {
  const auto de = layer_energies(spec, d, xi);
  const auto s = layer_entropies(spec);
  std::vector<double> t(de.size());
  for (std::size_t p = 0; p < de.size(); ++p) {
    if (!(s[p] > 0.0)) {
      throw Error(Errc::ZeroEntropy, "layer " + std::to_string(p + 1) +
                                         " has ln(sigma) <= 0; local temperature undefined");
    }
    t[p] = de[p] / s[p];
  }
  return t;
}

/// Work efficiency, system temperature and heat-engine class.
inline LayerReport efficiency_and_classification(
    const NNSpec& spec, const Dataset& d, const std::optional<std::vector<double>>& xi = {}) {
  LayerReport r;
  r.deltaE = layer_energies(spec, d, xi);
  r.entropy = layer_entropies(spec);
  r.localT = layer_temperatures(spec, d, xi);
  if (spec.activation == Activation::Sigmoid) {
    r.xi = xi ? *xi : std::vector<double>(static_cast<std::size_t>(spec.depth() - 1), 0.5);
  }

  const double total_e = std::accumulate(r.deltaE.begin(), r.deltaE.end(), 0.0);
  if (std::isfinite(total_e)) {
    r.eta = r.deltaE.back() / total_e;
  } else {
    // Deep ReLU energies overflow long before their ratios do.
    const auto logs = detail::log_layer_energies(spec, d, xi);
    double ratio_sum = 0.0;
    for (double e : logs) ratio_sum += std::exp(e - logs.back());
    r.eta = 1.0 / ratio_sum;
  }

  double ts = 0.0;
  double s_total = 0.0;
  for (std::size_t p = 0; p < r.localT.size(); ++p) {
    ts += r.localT[p] * r.entropy[p];
    s_total += r.entropy[p];
  }
  r.systemT = r.eta * (ts / s_total);

  if (spec.activation == Activation::ReLU) {
    r.engineClass = EngineClass::SecondType;
    r.classificationRule = "activation relu: energy released grows geometrically with depth";
  } else {
    r.engineClass = EngineClass::FirstType;
    r.classificationRule = "activation " + to_string(spec.activation) +
                           ": bounded activations cap every layer at a comparable temperature";
  }
  for (double s : layer_sigmas(spec)) {
    if (s < 10.0) {
      r.warnings.push_back("parameter scale " + std::to_string(s) +
                           " < 10: asymptotic formulas may not apply");
      break;
    }
  }
  return r;
}

/// Whole-network asymptotic temperature Delta E_L / sum_p S_p.
inline double nn_system_temperature(const NNSpec& spec, const Dataset& d,
                                    const std::optional<std::vector<double>>& xi = {}) {
  const auto de = layer_energies(spec, d, xi);
  const auto s = layer_entropies(spec);
  const double s_total = std::accumulate(s.begin(), s.end(), 0.0);
  require(s_total > 0.0, Errc::ZeroEntropy, "total network entropy <= 0");
  return de.back() / s_total;
}

// ---------------------------------------------------------------------------
// Monte-Carlo forward-pass oracle

struct NnMcEstimate {
  std::optional<double> estimate;  // empty on overflow
  std::optional<double> stderr;
  std::size_t samples = 0;
  bool overflow = false;
  /// Measured fraction of hidden sigmoid activations above 0.5, per hidden layer.
  std::optional<std::vector<double>> xi;
};

/// Averages the MSE energy (1/n) sum_i sum_k (output_k - y_i)^2 over networks drawn
/// from the initialization. Same batch/stream contract as mc_mean_energy.
inline NnMcEstimate mc_nn_initial_energy(const NNSpec& spec, const Dataset& d,
                                         std::size_t samples, std::uint64_t seed,
                                         unsigned workers = worker_count()) {
  spec.validate();
  detail::check_width(spec, d);
  require(samples >= 1, Errc::InvalidArgument, "mc_nn_initial_energy: samples must be >= 1");

  const int depth = spec.depth();
  const auto& l = spec.layers;
  const auto sig = layer_sigmas(spec);
  const auto* uniform = std::get_if<UniformConstant>(&spec.init);
  const Eigen::MatrixXd& x = d.features();
  const Eigen::VectorXd& y = d.labels();
  const Eigen::Index n = d.n();

  struct BatchResult {
    Moments moments;
    std::vector<std::uint64_t> above;
    std::vector<std::uint64_t> seen;
    bool overflow = false;
  };
  const std::size_t batches = (samples + kBatchSize - 1) / kBatchSize;
  std::vector<BatchResult> partial(batches);

  parallel_for(
      batches,
      [&](std::size_t b) {
        auto rng = batch_stream(seed, b);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(-0.5, 0.5);
        auto draw = [&](double sigma) {
          return uniform ? uniform->length * unit(rng) : sigma * gauss(rng);
        };
        BatchResult& out = partial[b];
        out.above.assign(static_cast<std::size_t>(std::max(depth - 1, 0)), 0);
        out.seen.assign(out.above.size(), 0);

        std::vector<Eigen::MatrixXd> w(static_cast<std::size_t>(depth));
        std::vector<Eigen::VectorXd> bias(static_cast<std::size_t>(depth));
        const std::size_t rows = std::min(kBatchSize, samples - b * kBatchSize);
        for (std::size_t s = 0; s < rows; ++s) {
          for (int p = 1; p <= depth; ++p) {
            const double sp = sig[static_cast<std::size_t>(p - 1)];
            auto& wp = w[static_cast<std::size_t>(p - 1)];
            auto& bp = bias[static_cast<std::size_t>(p - 1)];
            wp.resize(l[p], l[p - 1]);
            bp.resize(l[p]);
            for (Eigen::Index i = 0; i < wp.rows(); ++i) {
              for (Eigen::Index j = 0; j < wp.cols(); ++j) wp(i, j) = draw(sp);
            }
            for (Eigen::Index i = 0; i < bp.size(); ++i) bp[i] = draw(sp);
          }
          double energy = 0.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd a = x.row(i).transpose();
            for (int p = 1; p <= depth; ++p) {
              Eigen::VectorXd z = w[static_cast<std::size_t>(p - 1)] * a +
                                  bias[static_cast<std::size_t>(p - 1)];
              if (p == depth) {
                a = std::move(z);
                break;
              }
              switch (spec.activation) {
                case Activation::Tanh: a = z.array().tanh(); break;
                case Activation::Sigmoid: {
                  a.resize(z.size());
                  for (Eigen::Index k = 0; k < z.size(); ++k) {
                    a[k] = detail::logistic(z[k]);
                    if (a[k] > 0.5) ++out.above[static_cast<std::size_t>(p - 1)];
                  }
                  out.seen[static_cast<std::size_t>(p - 1)] += static_cast<std::uint64_t>(z.size());
                  break;
                }
                case Activation::ReLU: a = z.cwiseMax(0.0); break;
              }
            }
            energy += (a.array() - y[i]).square().sum();
          }
          energy /= static_cast<double>(n);
          if (!std::isfinite(energy)) {
            out.overflow = true;
            continue;
          }
          out.moments.add(energy);
        }
      },
      workers);

  NnMcEstimate est;
  est.samples = samples;
  Moments total;
  std::vector<std::uint64_t> above(static_cast<std::size_t>(std::max(depth - 1, 0)), 0);
  std::vector<std::uint64_t> seen(above.size(), 0);
  for (const auto& r : partial) {
    total.merge(r.moments);
    est.overflow = est.overflow || r.overflow;
    for (std::size_t p = 0; p < above.size(); ++p) {
      above[p] += r.above[p];
      seen[p] += r.seen[p];
    }
  }
  if (!est.overflow) {
    est.estimate = total.mean;
    est.stderr = total.stderr_of_mean();
  }
  if (spec.activation == Activation::Sigmoid) {
    std::vector<double> xi(above.size());
    for (std::size_t p = 0; p < above.size(); ++p) {
      xi[p] = seen[p] ? static_cast<double>(above[p]) / static_cast<double>(seen[p]) : 0.0;
    }
    est.xi = xi;
  }
  return est;
}

// ---------------------------------------------------------------------------
// JSON: {"layers":[...], "activation":"tanh|sigmoid|relu", "init":{...}}
// init: {"kind":"constant","sigma":s} | {"kind":"per-layer","sigma0":s} | {"kind":"uniform","length":l}

inline NNSpec nn_spec_from_json(const nlohmann::json& j) {
  require(j.is_object(), Errc::InvalidArgument, "network spec must be a JSON object");
  require(j.contains("layers") && j["layers"].is_array(), Errc::InvalidArgument,
          "network spec needs a 'layers' array");
  NNSpec spec;
  for (const auto& e : j["layers"]) {
    require(e.is_number_integer(), Errc::InvalidArgument, "layer sizes must be integers");
    spec.layers.push_back(e.get<int>());
  }
  const std::string act = j.value("activation", std::string("tanh"));
  if (act == "tanh") {
    spec.activation = Activation::Tanh;
  } else if (act == "sigmoid") {
    spec.activation = Activation::Sigmoid;
  } else if (act == "relu") {
    spec.activation = Activation::ReLU;
  } else {
    throw Error(Errc::InvalidArgument, "unknown activation '" + act + "'");
  }
  require(j.contains("init") && j["init"].is_object(), Errc::InvalidArgument,
          "network spec needs an 'init' object");
  const auto& init = j["init"];
  const std::string kind = init.value("kind", std::string("constant"));
  auto number = [&](const char* key) {
    require(init.contains(key) && init[key].is_number(), Errc::InvalidArgument,
            std::string("init needs numeric '") + key + "'");
    return init[key].get<double>();
  };
  if (kind == "constant") {
    spec.init = ConstantSigma{number("sigma")};
  } else if (kind == "per-layer") {
    spec.init = PerLayerSigma{number("sigma0")};
  } else if (kind == "uniform") {
    spec.init = UniformConstant{number("length")};
  } else {
    throw Error(Errc::InvalidArgument, "unknown init kind '" + kind + "'");
  }
  spec.validate();
  return spec;
}

}  // namespace mltherm
