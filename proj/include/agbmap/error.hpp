#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agb {

/// Domain error categories raised by the library. The CLI maps every one of
/// these to exit code 1.
enum class Errc {
  InvalidArgument,
  NoSignal,
  DegenerateNoise,
  FitFailure,
  InvalidTree,
  InvalidPlot,
  UnitError,
  RankDeficient,
  BadK,
  EmptyDesign,
  TooFewSamples,
  SingularSystem,
  EmptyNeighborhood,
  BadFactor,
  TooFewBands,
  GeometryMismatch,
  NoPairs,
  InsufficientPairs,
  NoQualifyingCells,
  ConfigError,
  ParseError,
  IoError,
};

inline constexpr std::string_view to_string(Errc c) noexcept {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NoSignal: return "NoSignal";
    case Errc::DegenerateNoise: return "DegenerateNoise";
    case Errc::FitFailure: return "FitFailure";
    case Errc::InvalidTree: return "InvalidTree";
    case Errc::InvalidPlot: return "InvalidPlot";
    case Errc::UnitError: return "UnitError";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::BadK: return "BadK";
    case Errc::EmptyDesign: return "EmptyDesign";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::EmptyNeighborhood: return "EmptyNeighborhood";
    case Errc::BadFactor: return "BadFactor";
    case Errc::TooFewBands: return "TooFewBands";
    case Errc::GeometryMismatch: return "GeometryMismatch";
    case Errc::NoPairs: return "NoPairs";
    case Errc::InsufficientPairs: return "InsufficientPairs";
    case Errc::NoQualifyingCells: return "NoQualifyingCells";
    case Errc::ConfigError: return "ConfigError";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace agb
