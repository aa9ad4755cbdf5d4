#pragma once

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mltherm/mltherm.hpp"

namespace mltherm::cli {

enum Exit : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsage = 2,
  kInvalidConfig = 3,
  kIoError = 4,
  kNumericError = 5,
};

inline int exit_code(Errc c) {
  switch (c) {
    case Errc::MissingFile: return kIoError;
    case Errc::ZeroEntropy:
    case Errc::Undefined:
    case Errc::Overflow:
    case Errc::NoFiniteMinimum: return kNumericError;
    default: return kInvalidConfig;
  }
}

namespace detail {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    const auto v = mltherm::detail::parse_real(cell);
    if (!v) throw Error(Errc::InvalidArgument, flag + ": '" + cell + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

inline EnergyForm parse_form(const std::string& energy, const std::string& reg, double lambda) {
  EnergyBase base = EnergyBase::MSE;
  if (energy == "mse") base = EnergyBase::MSE;
  else if (energy == "mae") base = EnergyBase::MAE;
  else if (energy == "mbe") base = EnergyBase::MBE;
  else if (energy == "ce") base = EnergyBase::CrossEntropy;
  else throw Error(Errc::InvalidArgument, "--energy: unknown form '" + energy + "'");
  Regularization r = Regularization::None;
  if (reg == "none") r = Regularization::None;
  else if (reg == "l1") r = Regularization::L1;
  else if (reg == "l2") r = Regularization::L2;
  else throw Error(Errc::InvalidArgument, "--reg: unknown regularizer '" + reg + "'");
  return EnergyForm::make(base, r, r == Regularization::None ? 0.0 : lambda);
}

inline InitDistribution parse_init(const std::string& kind, const std::string& sigma,
                                   const std::string& length) {
  const auto sig = sigma.empty() ? std::vector<double>{} : parse_list(sigma, "--sigma");
  const auto len = length.empty() ? std::vector<double>{} : parse_list(length, "--length");
  if (kind == "normal") return InitDistribution::normal(sig);
  if (kind == "uniform") return InitDistribution::uniform(len);
  if (kind == "mixed") return InitDistribution::mixed(sig, len);
  throw Error(Errc::InvalidArgument, "--init: unknown kind '" + kind + "'");
}

inline Family parse_family(const std::string& kind) {
  if (kind == "normal") return Family::Normal;
  if (kind == "uniform") return Family::Uniform;
  throw Error(Errc::InvalidArgument, "asymptotic formulas need --init normal or uniform");
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << text;
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline std::string dump(nlohmann::json j) {
  j["schemaVersion"] = kSchemaVersion;
  return j.dump(2) + "\n";
}

inline std::string fmt(double v) {
  if (std::isnan(v)) return "undefined";
  if (std::isinf(v)) return "overflow";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::MissingFile, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::InvalidArgument, path + ": " + e.what());
  }
}

/// One closed-form vs Monte-Carlo comparison row of `verify`.
struct VerifyRow {
  std::string formulaId;
  double closed = 0.0;
  McEstimate mc;
  double z = 0.0;
  bool pass = false;
};

/// The master oracle suite: MSE x {normal, uniform, mixed} x {none, l1, l2}
/// over three seeded datasets.
inline std::vector<VerifyRow> verify_suite(std::uint64_t seed, std::size_t samples, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sig_u(0.5, 3.0);
  std::uniform_real_distribution<double> len_u(0.5, 5.0);
  std::uniform_real_distribution<double> lam_u(0.1, 2.0);
  const std::vector<Dataset> data = {
      synth(LinearNoiseParams{1.5, -0.5, 0.3, 1, -2.0, 2.0}, 12, rng()),
      synth(LinearNoiseParams{-0.7, 1.0, 0.5, 2, -1.0, 3.0}, 15, rng()),
      synth(GaussianCloudParams{1.2, 2.0, 1}, 10, rng()),
  };
  std::vector<VerifyRow> rows;
  for (std::size_t di = 0; di < data.size(); ++di) {
    const Dataset& d = data[di];
    const auto k = static_cast<std::size_t>(d.K());
    for (InitKind kind : {InitKind::DiagonalNormal, InitKind::UniformBox, InitKind::Mixed}) {
      std::vector<double> sig;
      std::vector<double> len;
      for (std::size_t j = 0; j < k; ++j) {
        const bool normal = kind == InitKind::DiagonalNormal || (kind == InitKind::Mixed && j + 1 < k);
        if (normal) sig.push_back(sig_u(rng));
        else len.push_back(len_u(rng));
      }
      const InitDistribution dist = kind == InitKind::DiagonalNormal ? InitDistribution::normal(sig)
                                    : kind == InitKind::UniformBox   ? InitDistribution::uniform(len)
                                                                     : InitDistribution::mixed(sig, len);
      for (Regularization reg : {Regularization::None, Regularization::L1, Regularization::L2}) {
        const double lambda = reg == Regularization::None ? 0.0 : lam_u(rng);
        const EnergyForm form = EnergyForm::make(EnergyBase::MSE, reg, lambda);
        VerifyRow row;
        row.formulaId = "type1." + to_string(form.base) + mltherm::detail::reg_suffix(reg) + "." +
                        to_string(kind) + "/d" + std::to_string(di);
        row.closed = mean_initial_energy(form, dist, d);
        row.mc = mc_mean_energy(form, dist, d, samples, rng());
        if (row.mc.stderr && *row.mc.stderr > 0.0) {
          row.z = std::abs(row.mc.estimate - row.closed) / *row.mc.stderr;
          row.pass = row.z <= tol;
        } else {
          row.z = std::nan("");
          row.pass = false;
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

}  // namespace detail

/// Entry point shared by the executable and the tests. args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thermodynamic quantities of machine-learning systems"};
  app.require_subcommand(1);

  std::string data_path, label = "y", energy = "mse", reg = "none", init = "normal";
  std::string sigma, length, out_path, spec_path, marginal = "empirical", bins_text;
  std::vector<std::string> data_paths;
  double lambda = 0.0, scale = 0.0, tol = 3.0, noise = -1.0, halfwidth = 8.0;
  bool asymptotic = false;
  std::size_t samples = 100000, mc_samples = 0;
  std::uint64_t seed = 0;
  int max_iter = 10000;
  double solver_tol = 1e-8;

  auto add_form = [&](CLI::App* c) {
    c->add_option("--energy", energy, "mse|mae|mbe|ce")->capture_default_str();
    c->add_option("--reg", reg, "none|l1|l2")->capture_default_str();
    c->add_option("--lambda", lambda, "regularization strength");
  };
  auto add_init = [&](CLI::App* c) {
    c->add_option("--init", init, "normal|uniform|mixed")->capture_default_str();
    c->add_option("--sigma", sigma, "comma-separated standard deviations");
    c->add_option("--length", length, "comma-separated uniform widths");
  };
  auto add_common = [&](CLI::App* c) {
    c->add_option("--seed", seed, "random seed")->capture_default_str();
    c->add_option("--out", out_path, "output file (default stdout)");
  };

  auto* analyze = app.add_subcommand("analyze", "Type I temperature of a dataset");
  analyze->add_option("--data", data_path, "CSV file")->required();
  analyze->add_option("--label", label, "label column")->capture_default_str();
  add_form(analyze);
  add_init(analyze);
  analyze->add_flag("--asymptotic", asymptotic, "use the large-scale formula");
  analyze->add_option("--scale", scale, "sigma or l for --asymptotic");
  analyze->add_option("--samples", samples, "Monte-Carlo samples when no closed form exists")
      ->capture_default_str();
  analyze->add_option("--tol", solver_tol, "solver tolerance")->capture_default_str();
  analyze->add_option("--max-iter", max_iter, "solver iteration cap")->capture_default_str();
  add_common(analyze);

  auto* verify = app.add_subcommand("verify", "closed forms against Monte-Carlo");
  verify->add_option("--samples", samples, "Monte-Carlo samples per case")->capture_default_str();
  verify->add_option("--tol", tol, "z-score threshold")->capture_default_str();
  add_common(verify);

  auto* nn = app.add_subcommand("nn", "layer temperatures of a network");
  nn->add_option("--spec", spec_path, "network JSON")->required();
  nn->add_option("--data", data_path, "CSV file")->required();
  nn->add_option("--label", label, "label column")->capture_default_str();
  nn->add_option("--mc-samples", mc_samples, "forward-pass oracle samples (0 skips)")
      ->capture_default_str();
  add_common(nn);

  auto* shift = app.add_subcommand("shift", "shift temperatures over a dataset sequence");
  shift->add_option("--data", data_paths, "CSV files in order")->required();
  shift->add_option("--label", label, "label column")->capture_default_str();
  add_form(shift);
  add_init(shift);
  shift->add_option("--marginal", marginal, "empirical|uniform")->capture_default_str();
  shift->add_option("--bins", bins_text, "bins per axis, comma-separated");
  shift->add_option("--noise", noise, "regression noise sigma (default sqrt(E_f))");
  shift->add_option("--samples", samples, "Monte-Carlo samples when no closed form exists")
      ->capture_default_str();
  add_common(shift);

  auto* mix = app.add_subcommand("mix", "mix two datasets");
  mix->add_option("--data", data_paths, "two CSV files")->required()->expected(2);
  mix->add_option("--label", label, "label column")->capture_default_str();
  add_form(mix);
  mix->add_option("--init", init, "normal|uniform")->capture_default_str();
  mix->add_option("--scale", scale, "sigma or l")->required();
  add_common(mix);

  auto* demo = app.add_subcommand("entropy-demo", "grid entropy against differential entropy");
  demo->add_option("--sigma", sigma, "normal standard deviation")->default_str("1");
  demo->add_option("--halfwidth", halfwidth, "grid half-width in units of sigma")
      ->capture_default_str();
  add_common(demo);

  std::vector<std::string> argv_store{"mltherm"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (analyze->parsed()) {
      const Dataset d = load_csv(data_path, label);
      const EnergyForm form = detail::parse_form(energy, reg, lambda);
      TemperatureReport r;
      if (asymptotic) {
        require(scale > 0.0, Errc::InvalidArgument, "--asymptotic needs --scale");
        r = asymptotic_report(form, detail::parse_family(init), d, scale);
      } else {
        const InitDistribution dist = detail::parse_init(init, sigma, length);
        SolverOptions opts;
        opts.tol = solver_tol;
        opts.maxIter = max_iter;
        std::optional<OracleInfo> oracle;
        if (form.base != EnergyBase::MSE) {
          const McEstimate mc = mc_mean_energy(form, dist, d, samples, seed);
          oracle = OracleInfo{mc.estimate, mc.stderr, mc.samples};
        }
        r = temperature_type1(form, dist, d, oracle, opts);
      }
      detail::emit(detail::dump(to_json(r)), out_path, out);
      return kOk;
    }

    if (verify->parsed()) {
      const auto rows = detail::verify_suite(seed, samples, tol);
      std::ostringstream csv;
      csv << "# schemaVersion=" << kSchemaVersion << "\n";
      csv << "formulaId,closed,mc,stderr,zscore,pass\n";
      std::size_t failed = 0;
      for (const auto& r : rows) {
        csv << r.formulaId << "," << detail::fmt(r.closed) << "," << detail::fmt(r.mc.estimate) << ","
            << (r.mc.stderr ? detail::fmt(*r.mc.stderr) : std::string("undefined")) << ","
            << detail::fmt(r.z) << "," << (r.pass ? "pass" : "fail") << "\n";
        failed += r.pass ? 0 : 1;
      }
      detail::emit(csv.str(), out_path, out);
      if (failed == 0) return kOk;
      err << "error: " << failed << " of " << rows.size() << " verify rows exceed the tolerance\n";
      return kCheckFailed;
    }

    if (nn->parsed()) {
      const NNSpec spec = nn_spec_from_json(detail::read_json(spec_path));
      const Dataset d = load_csv(data_path, label);
      nlohmann::json j;
      std::optional<std::vector<double>> xi;
      if (mc_samples > 0) {
        const NnMcEstimate mc = mc_nn_initial_energy(spec, d, mc_samples, seed);
        xi = mc.xi;
        j["oracle"] = {{"estimate", json_number(mc.estimate)},
                       {"stderr", json_number(mc.stderr)},
                       {"samples", mc.samples},
                       {"overflow", mc.overflow}};
      }
      j["report"] = to_json(efficiency_and_classification(spec, d, xi));
      j["parameterCount"] = spec.parameter_count();
      detail::emit(detail::dump(j), out_path, out);
      return kOk;
    }

    if (shift->parsed()) {
      std::vector<Dataset> seq;
      for (const auto& p : data_paths) seq.push_back(load_csv(p, label));
      const EnergyForm form = detail::parse_form(energy, reg, lambda);
      const InitDistribution dist = detail::parse_init(init, sigma, length);
      JointConfig cfg;
      if (marginal == "empirical") cfg.marginal = MarginalKind::Empirical;
      else if (marginal == "uniform") cfg.marginal = MarginalKind::Uniform;
      else throw Error(Errc::InvalidArgument, "--marginal: unknown kind '" + marginal + "'");
      if (noise >= 0.0) cfg.noise = NoiseSpec{noise};
      if (!bins_text.empty()) {
        std::vector<int> b;
        for (double v : detail::parse_list(bins_text, "--bins")) b.push_back(static_cast<int>(v));
        cfg.bins = b;
      }
      cfg.oracleSamples = samples;
      cfg.seed = seed;
      nlohmann::json steps = nlohmann::json::array();
      for (const auto& s : refresh_pipeline(seq, form, dist, cfg)) steps.push_back(to_json(s));
      nlohmann::json j;
      j["steps"] = steps;
      j["marginal"] = to_string(cfg.marginal);
      j["normalization"] = "each joint normalized independently";
      detail::emit(detail::dump(j), out_path, out);
      return kOk;
    }

    if (mix->parsed()) {
      const Dataset a = load_csv(data_paths.at(0), label);
      const Dataset b = load_csv(data_paths.at(1), label);
      const EnergyForm form = detail::parse_form(energy, reg, lambda);
      const MixingReport r = mixing_experiment(a, b, form, detail::parse_family(init), scale);
      detail::emit(detail::dump(to_json(r)), out_path, out);
      return kOk;
    }

    if (demo->parsed()) {
      const auto sig = detail::parse_list(sigma.empty() ? "1" : sigma, "--sigma");
      require(sig.size() == 1, Errc::InvalidArgument, "entropy-demo takes a single --sigma");
      const InitDistribution dist = InitDistribution::normal(sig);
      const double s_diff = differential_entropy(dist);
      std::ostringstream csv;
      csv << "# schemaVersion=" << kSchemaVersion << "\n";
      csv << "delta,S_grid,S_grid_plus_ln_delta,S_diff,rel_error\n";
      double last_err = 0.0;
      for (double delta : {1.0, 0.5, 0.1, 0.05, 0.01}) {
        const double step = delta * sig[0];
        const double s_grid = discrete_entropy_grid(dist, step, halfwidth * sig[0]);
        const double recovered = s_grid + std::log(step);
        last_err = std::abs(recovered - s_diff) / std::abs(s_diff);
        csv << detail::fmt(step) << "," << detail::fmt(s_grid) << "," << detail::fmt(recovered)
            << "," << detail::fmt(s_diff) << "," << detail::fmt(last_err) << "\n";
      }
      detail::emit(csv.str(), out_path, out);
      if (last_err < 0.01) return kOk;
      err << "error: grid entropy misses the differential entropy by " << detail::fmt(last_err) << "\n";
      return kCheckFailed;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const detail::IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kUsage;
}

}  // namespace mltherm::cli
