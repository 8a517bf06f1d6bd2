#pragma once

#include <stdexcept>
#include <string>

namespace cemperf {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct InvalidArgument : Error { using Error::Error; };
struct PlacementFailure : Error { using Error::Error; };
struct DomainEmpty : Error { using Error::Error; };
struct DomainDisconnected : Error { using Error::Error; };
struct InconsistentGeometry : Error { using Error::Error; };

// mesh file I/O
struct ParseError : Error { using Error::Error; };
struct UnsupportedVersion : Error { using Error::Error; };
struct MissingTags : Error { using Error::Error; };

// linear algebra
struct NotPositiveDefinite : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };

// finite elements
struct DegenerateTriangle : Error { using Error::Error; };
struct NoDirichlet : Error { using Error::Error; };
struct ZeroReference : Error { using Error::Error; };

// coarse grid / multiscale
struct NonNested : Error { using Error::Error; };
struct SingularConstraintBlock : Error { using Error::Error; };

} // namespace cemperf
