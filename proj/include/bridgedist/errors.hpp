#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bridgedist {

enum class Errc {
  kNotPrime,
  kZeroInverse,
  kDuplicateX,
  kDecodeFailure,
  kPrecondition,
  kReconstructFailure,
  kEmptyUserSet,
  kSupplyExhausted,
  kUnknownUser,
  kDuplicateUser,
  kBudgetExceeded,
  kStalled,
  kMalformedMessage,
  kConfigInvalid,
  kIoFailure,
  kContractViolation,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace bridgedist
