#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace petlab {

using BigInt = mpz_class;
using BigRational = mpq_class;

inline constexpr const char* kVersion = "0.1.0";

// Exit codes used by the command-line front end.
enum class ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kPrecision = 3,
  kHypothesis = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::kFailure; }
};

// Malformed input: bad schema, wrong dimensions, unknown names.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

// A mathematical precondition does not hold (non-nice family, maps that do
// not commute, a non-unipotent matrix, ...).
class HypothesisError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kHypothesis; }
};

// The fixed-point budget cannot represent the requested computation to the
// declared tolerance.
class PrecisionError : public Error {
 public:
  PrecisionError(const std::string& what, std::uint64_t required_bits, std::uint64_t available_bits)
      : Error(what + " (required " + std::to_string(required_bits) + " fractional bits, have " +
              std::to_string(available_bits) + ")"),
        required_bits_(required_bits),
        available_bits_(available_bits) {}

  std::uint64_t required_bits() const noexcept { return required_bits_; }
  std::uint64_t available_bits() const noexcept { return available_bits_; }
  ExitCode exit_code() const noexcept override { return ExitCode::kPrecision; }

 private:
  std::uint64_t required_bits_;
  std::uint64_t available_bits_;
};

// A computation exceeded an explicit resource cap (oracle size, step budget).
class CapacityError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

inline std::string to_string(const BigInt& v) { return v.get_str(); }

}  // namespace petlab
