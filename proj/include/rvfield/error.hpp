#pragma once

#include <stdexcept>
#include <string>

namespace rvf {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error { public: using Error::Error; };
class DegenerateCluster : public Error { public: using Error::Error; };
class InvalidLevel : public Error { public: using Error::Error; };
class InvalidFunctional : public Error { public: using Error::Error; };
class NoExceedance : public Error { public: using Error::Error; };
class InsufficientData : public Error { public: using Error::Error; };
class InvalidBlocking : public Error { public: using Error::Error; };
class InvalidLadder : public Error { public: using Error::Error; };
class BracketFailure : public Error { public: using Error::Error; };
class SupportViolation : public Error { public: using Error::Error; };

// Problems with a model definition (MA coefficients or score model).
class ModelError : public Error { public: using Error::Error; };
class InvalidModel : public ModelError { public: using ModelError::ModelError; };
class InvalidTruncation : public ModelError { public: using ModelError::ModelError; };
class DriftViolation : public ModelError { public: using ModelError::ModelError; };
class NoPositiveScore : public ModelError { public: using ModelError::ModelError; };

class ConfigError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

}  // namespace rvf
