#pragma once

#include <stdexcept>
#include <string>

namespace systola {

enum class ErrorKind {
  InputDomain,
  Convergence,
  Resonance,
  Stiffness,
  Capability,
  Frame,
  Precondition,
  Resolution,
  Geometry,
  Inconsistency,
  Reconstruction,
  Usage,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InputDomain: return "input-domain";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Resonance: return "resonance";
    case ErrorKind::Stiffness: return "stiffness";
    case ErrorKind::Capability: return "capability";
    case ErrorKind::Frame: return "frame";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Inconsistency: return "inconsistency";
    case ErrorKind::Reconstruction: return "reconstruction";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double residual = 0.0)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        residual_(residual) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Numeric witness attached to the failure (residual, det, distance...).
  double residual() const noexcept { return residual_; }

 private:
  ErrorKind kind_;
  double residual_;
};

}  // namespace systola
