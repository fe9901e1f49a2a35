#pragma once

#include <stdexcept>
#include <string>

namespace setlstm {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// sparse-core / neural
struct OutOfBounds : Error { using Error::Error; };
struct DuplicatePosition : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct TokenOutOfRange : Error { using Error::Error; };
struct LabelOutOfRange : Error { using Error::Error; };
struct CacheMismatch : Error { using Error::Error; };

// optim
struct MaskMismatch : Error { using Error::Error; };
struct StateMismatch : Error { using Error::Error; };

// data / config / io
struct IoError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct EmptyCorpus : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// checkpoints
struct VersionMismatch : Error { using Error::Error; };
struct CorruptCheckpoint : Error { using Error::Error; };
struct MissingInitialSnapshot : Error { using Error::Error; };

}  // namespace setlstm
