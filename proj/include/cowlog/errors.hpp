#pragma once

#include <stdexcept>
#include <string>

namespace cowlog {

// Base class for every failure this library reports. Callers that do not
// care about the exact class can catch cowlog::Error.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// schema
class MalformedJson : public Error { public: using Error::Error; };
class MissingField : public Error { public: using Error::Error; };
class BadTimestamp : public Error { public: using Error::Error; };
class NotCommandEvent : public Error { public: using Error::Error; };
class EmptyCommand : public Error { public: using Error::Error; };

// filesystem / state
class IoError : public Error { public: using Error::Error; };
class CorruptStateStore : public Error { public: using Error::Error; };
class HttpError : public Error { public: using Error::Error; };

// datasets
class InsufficientData : public Error { public: using Error::Error; };

// model
class EmptyTrainingSet : public Error { public: using Error::Error; };
class UntrainedModel : public Error { public: using Error::Error; };
class VersionMismatch : public Error { public: using Error::Error; };
class CorruptModel : public Error { public: using Error::Error; };

// evaluation
class LengthMismatch : public Error { public: using Error::Error; };
class EmptyEval : public Error { public: using Error::Error; };
class EmptySamples : public Error { public: using Error::Error; };

}  // namespace cowlog
