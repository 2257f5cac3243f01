#pragma once

#include <stdexcept>

namespace halp {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// -- geometry -----------------------------------------------------------
class ZeroVectorError : public Error { public: using Error::Error; };
class DimMismatchError : public Error { public: using Error::Error; };
class DegenerateParallelError : public Error { public: using Error::Error; };
class AntipodalPointsError : public Error { public: using Error::Error; };

// -- clustering ---------------------------------------------------------
class TooFewPointsError : public Error { public: using Error::Error; };
class EmptyClusterError : public Error { public: using Error::Error; };
class AntipodalConfigurationError : public Error { public: using Error::Error; };

// -- positive hallucination ----------------------------------------------
class EquidistantAnchorError : public Error { public: using Error::Error; };
class EmptyPrototypeSetError : public Error { public: using Error::Error; };
class SinglePrototypeError : public Error { public: using Error::Error; };
class NoFeasiblePointError : public Error { public: using Error::Error; };

// -- queue / training ------------------------------------------------------
class BatchTooLargeError : public Error { public: using Error::Error; };
class NotEnoughElementsError : public Error { public: using Error::Error; };
class ShapeMismatchError : public Error { public: using Error::Error; };
class CacheMismatchError : public Error { public: using Error::Error; };
class EmptyTrainSetError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

// -- file I/O ---------------------------------------------------------------
class IoError : public Error { public: using Error::Error; };
class BadMagicError : public IoError { public: using IoError::IoError; };
class UnsupportedVersionError : public IoError { public: using IoError::IoError; };
class TruncatedPayloadError : public IoError { public: using IoError::IoError; };
class ZeroRowError : public IoError { public: using IoError::IoError; };

}  // namespace halp
