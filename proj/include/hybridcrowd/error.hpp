#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hybridcrowd {

/// Base of every error raised by the toolkit. `kind()` is the stable error
/// class name that the CLI prints and maps to its exit status.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define HYBRIDCROWD_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

// dataset
HYBRIDCROWD_DEFINE_ERROR(InvariantError);
HYBRIDCROWD_DEFINE_ERROR(UnknownId);
HYBRIDCROWD_DEFINE_ERROR(TooFewPairs);
HYBRIDCROWD_DEFINE_ERROR(OutOfRange);
HYBRIDCROWD_DEFINE_ERROR(InvalidArgument);
HYBRIDCROWD_DEFINE_ERROR(IoError);

// metrics
HYBRIDCROWD_DEFINE_ERROR(UnknownResponder);
HYBRIDCROWD_DEFINE_ERROR(EmptySubset);
HYBRIDCROWD_DEFINE_ERROR(GroupMismatch);
HYBRIDCROWD_DEFINE_ERROR(MissingPartnerResponse);
HYBRIDCROWD_DEFINE_ERROR(DegenerateTable);
HYBRIDCROWD_DEFINE_ERROR(EmptySample);
HYBRIDCROWD_DEFINE_ERROR(AllZero);

// aggregate
HYBRIDCROWD_DEFINE_ERROR(NoPredictions);
HYBRIDCROWD_DEFINE_ERROR(InsufficientData);
HYBRIDCROWD_DEFINE_ERROR(MissingMemberPrediction);
HYBRIDCROWD_DEFINE_ERROR(UnroutableContext);

// crowdsim
HYBRIDCROWD_DEFINE_ERROR(Unachievable);

// elicit
HYBRIDCROWD_DEFINE_ERROR(InsufficientExamples);
HYBRIDCROWD_DEFINE_ERROR(BadArity);
HYBRIDCROWD_DEFINE_ERROR(EndpointError);
HYBRIDCROWD_DEFINE_ERROR(CacheCorrupt);

// harness
HYBRIDCROWD_DEFINE_ERROR(PoolTooSmall);
HYBRIDCROWD_DEFINE_ERROR(MissingScores);
HYBRIDCROWD_DEFINE_ERROR(ConfigError);

#undef HYBRIDCROWD_DEFINE_ERROR

/// Malformed input. `line()` is 1-based; 0 when no line applies.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error("ParseError",
              line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace hybridcrowd
