#include "bridgedist/errors.hpp"

namespace bridgedist {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kNotPrime: return "NotPrime";
    case Errc::kZeroInverse: return "ZeroInverse";
    case Errc::kDuplicateX: return "DuplicateX";
    case Errc::kDecodeFailure: return "DecodeFailure";
    case Errc::kPrecondition: return "PreconditionViolation";
    case Errc::kReconstructFailure: return "ReconstructFailure";
    case Errc::kEmptyUserSet: return "EmptyUserSet";
    case Errc::kSupplyExhausted: return "SupplyExhausted";
    case Errc::kUnknownUser: return "UnknownUser";
    case Errc::kDuplicateUser: return "DuplicateUser";
    case Errc::kBudgetExceeded: return "BudgetExceeded";
    case Errc::kStalled: return "Stalled";
    case Errc::kMalformedMessage: return "MalformedMessage";
    case Errc::kConfigInvalid: return "ConfigInvalid";
    case Errc::kIoFailure: return "IoFailure";
    case Errc::kContractViolation: return "ContractViolation";
  }
  return "Unknown";
}

}  // namespace bridgedist
