#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "mltherm/nn_thermo.hpp"
#include "mltherm/state_evolution.hpp"
#include "mltherm/thermo_analytic.hpp"

namespace mltherm {

inline constexpr int kSchemaVersion = 1;

/// Finite numbers pass through; NaN becomes "undefined" and infinities "overflow".
inline nlohmann::json json_number(double v) {
  if (std::isnan(v)) return "undefined";
  if (std::isinf(v)) return "overflow";
  return v;
}

inline nlohmann::json json_number(const std::optional<double>& v) {
  return v ? json_number(*v) : nlohmann::json("undefined");
}

inline nlohmann::json json_numbers(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

inline nlohmann::json to_json(const TemperatureReport& r) {
  nlohmann::json j;
  j["E0"] = json_number(r.E0);
  j["Ef"] = json_number(r.Ef);
  j["S0"] = json_number(r.S0);
  j["T"] = json_number(r.T);
  j["method"] = to_string(r.method);
  j["formulaId"] = r.formulaId;
  if (r.scale) j["scale"] = json_number(*r.scale);
  if (r.method == Method::Asymptotic) j["droppedEf"] = json_number(r.droppedEf);
  if (r.oracle) {
    j["oracle"] = {{"estimate", json_number(r.oracle->estimate)},
                   {"stderr", json_number(r.oracle->stderr)},
                   {"samples", r.oracle->samples}};
  }
  if (r.traceEf || r.method == Method::ClosedForm) j["traceEf"] = json_number(r.traceEf);
  if (r.lowerBound) j["lowerBound"] = true;
  j["warnings"] = r.warnings;
  return j;
}

inline nlohmann::json to_json(const LayerReport& r) {
  nlohmann::json j;
  j["deltaE"] = json_numbers(r.deltaE);
  j["entropy"] = json_numbers(r.entropy);
  j["localT"] = json_numbers(r.localT);
  if (r.xi) j["xi"] = json_numbers(*r.xi);
  j["eta"] = json_number(r.eta);
  j["systemT"] = json_number(r.systemT);
  j["engineClass"] = to_string(r.engineClass);
  j["classificationRule"] = r.classificationRule;
  j["assumedFinalEnergy"] = 0.0;
  j["warnings"] = r.warnings;
  return j;
}

inline nlohmann::json to_json(const ShiftStep& s) {
  nlohmann::json j;
  j["datasetId"] = s.index;
  j["energy"] = json_number(s.energy);
  j["dataEntropy"] = json_number(s.dataEntropy);
  j["phaseT"] = json_number(s.phaseT);
  j["shiftT"] = json_number(s.shiftT);
  j["errors"] = s.errors;
  return j;
}

inline nlohmann::json to_json(const MixingReport& r) {
  return {{"TA", json_number(r.TA)},         {"TB", json_number(r.TB)},
          {"TAB", json_number(r.TAB)},       {"X2A", json_number(r.X2A)},
          {"X2B", json_number(r.X2B)},       {"X2AB", json_number(r.X2AB)},
          {"deltaEA", json_number(r.deltaEA)}, {"deltaEB", json_number(r.deltaEB)},
          {"nA", r.nA},                      {"nB", r.nB},
          {"flow", r.flow},                  {"formulaId", r.formulaId}};
}

}  // namespace mltherm
