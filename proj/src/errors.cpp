#include "cpwres/errors.hpp"

namespace cpwres {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::NegativeKineticInductance: return "NegativeKineticInductance";
    case ErrorKind::InvalidSweep: return "InvalidSweep";
    case ErrorKind::NoResonanceFound: return "NoResonanceFound";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NonPhysicalScattering: return "NonPhysicalScattering";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::DuplicateFrequency: return "DuplicateFrequency";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::FixedPointDivergence: return "FixedPointDivergence";
    case ErrorKind::Usage: return "UsageError";
  }
  return "Error";
}

}  // namespace cpwres
