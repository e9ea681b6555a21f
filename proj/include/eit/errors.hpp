#ifndef EIT_ERRORS_HPP
#define EIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace eit {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Geometry / meshing
class FootprintOverflow : public Error { using Error::Error; };
class MeshFailure : public Error { using Error::Error; };

// Forward solver
class SingularSystem : public Error { using Error::Error; };

// Pattern algebra / data ingestion
class RankDeficient : public Error { using Error::Error; };
class DegenerateData : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class ShapeMismatch : public Error { using Error::Error; };
class NonMeanFreeCurrents : public Error { using Error::Error; };

// CGO methods
class ZeroXi : public Error { using Error::Error; };
class DuplicateCenters : public Error { using Error::Error; };
class NearSingularBIE : public Error { using Error::Error; };
class IndefiniteSystem : public Error { using Error::Error; };

// Regularized inversion
class FactorizationFailure : public Error { using Error::Error; };

// Metrics
class NoTargetsFound : public Error { using Error::Error; };

// CLI / configuration
class ConfigError : public Error { using Error::Error; };

}  // namespace eit

#endif  // EIT_ERRORS_HPP
