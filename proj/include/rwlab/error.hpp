#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rwlab {

enum class Errc {
  InvalidSpec,
  RetryExhausted,
  HorizonExceeded,
  CapExceeded,
  SingularSystem,
  TargetsTooClose,
  GeometryDegenerate,
  InsufficientEvents,
  InsufficientSamples,
  ConfigInvalid,
  DriftDetected,
  Io,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::RetryExhausted: return "RetryExhausted";
    case Errc::HorizonExceeded: return "HorizonExceeded";
    case Errc::CapExceeded: return "CapExceeded";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::TargetsTooClose: return "TargetsTooClose";
    case Errc::GeometryDegenerate: return "GeometryDegenerate";
    case Errc::InsufficientEvents: return "InsufficientEvents";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::DriftDetected: return "DriftDetected";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

// All library failures surface as rwlab::Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace rwlab
