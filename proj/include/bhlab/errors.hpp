#pragma once

#include <stdexcept>
#include <string>

namespace bhlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// model / constants
struct NonCriticalMatrix : Error { using Error::Error; };
struct BetaOutOfRange : Error { using Error::Error; };

// volterra
struct GridTooCoarse : Error { using Error::Error; };
struct ScalingTooLarge : Error { using Error::Error; };

// limit-law solvers
struct ContractionFailed : Error { using Error::Error; };
struct OutsideDomain : Error { using Error::Error; };
struct MissingSolution : Error { using Error::Error; };
struct TailNotConverged : Error { using Error::Error; };

// harness
struct EmptyRun : Error { using Error::Error; };
struct RegimeMismatch : Error { using Error::Error; };

// file I/O
struct IoError : Error { using Error::Error; };

} // namespace bhlab
