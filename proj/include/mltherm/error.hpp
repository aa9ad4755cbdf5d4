#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mltherm {

enum class Errc {
  MissingFile,
  MissingColumn,
  NonNumericCell,
  EmptyBody,
  InvalidArgument,
  DimensionMismatch,
  NonBinaryLabels,
  Unsupported,
  UnknownCombination,
  NoFiniteMinimum,
  ZeroEntropy,
  Undefined,
  ScaleTooSmall,
  DimensionTooHigh,
  InsufficientHalfwidth,
  MissingNoiseSpec,
  Overflow,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::EmptyBody: return "EmptyBody";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonBinaryLabels: return "NonBinaryLabels";
    case Errc::Unsupported: return "Unsupported";
    case Errc::UnknownCombination: return "UnknownCombination";
    case Errc::NoFiniteMinimum: return "NoFiniteMinimum";
    case Errc::ZeroEntropy: return "ZeroEntropy";
    case Errc::Undefined: return "Undefined";
    case Errc::ScaleTooSmall: return "ScaleTooSmall";
    case Errc::DimensionTooHigh: return "DimensionTooHigh";
    case Errc::InsufficientHalfwidth: return "InsufficientHalfwidth";
    case Errc::MissingNoiseSpec: return "MissingNoiseSpec";
    case Errc::Overflow: return "Overflow";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace mltherm
