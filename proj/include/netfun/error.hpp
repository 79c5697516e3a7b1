#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace netfun {

enum class ErrorCode {
  kParse,
  kIo,
  // Network and tree validation.
  kDisconnected,
  kDuplicateEdge,
  kNegativeCapacity,
  kBadSourceTerminal,
  kSelfLoop,
  kUnknownNode,
  kBadDegree,
  kNotTopological,
  kNotATree,
  kUnknownEdge,
  kBadOperator,
  // Embeddings and the oracle.
  kInvalidEmbedding,
  kDimensionMismatch,
  kTooMany,
  kUnreachable,
  // Solvers.
  kInfeasible,
  kUnbounded,
  kNumericFailure,
  kInfeasibleInput,
  kNontermination,
  kZeroCapacity,
  kIterationCapExceeded,
  // Extensions.
  kAllWeightsZero,
  kNonpositiveWeight,
  kZeroBudget,
  kSharedSources,
  // Protocol.
  kEpsilonTooSmall,
  kCapacityExceeded,
  kQueueUnderflow,
  kVerificationFailed,
  kUnsupported,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kDuplicateEdge: return "DuplicateEdge";
    case ErrorCode::kNegativeCapacity: return "NegativeCapacity";
    case ErrorCode::kBadSourceTerminal: return "BadSourceTerminal";
    case ErrorCode::kSelfLoop: return "SelfLoop";
    case ErrorCode::kUnknownNode: return "UnknownNode";
    case ErrorCode::kBadDegree: return "BadDegree";
    case ErrorCode::kNotTopological: return "NotTopological";
    case ErrorCode::kNotATree: return "NotATree";
    case ErrorCode::kUnknownEdge: return "UnknownEdge";
    case ErrorCode::kBadOperator: return "BadOperator";
    case ErrorCode::kInvalidEmbedding: return "InvalidEmbedding";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTooMany: return "TooMany";
    case ErrorCode::kUnreachable: return "Unreachable";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kUnbounded: return "Unbounded";
    case ErrorCode::kNumericFailure: return "NumericFailure";
    case ErrorCode::kInfeasibleInput: return "InfeasibleInput";
    case ErrorCode::kNontermination: return "Nontermination";
    case ErrorCode::kZeroCapacity: return "ZeroCapacity";
    case ErrorCode::kIterationCapExceeded: return "IterationCapExceeded";
    case ErrorCode::kAllWeightsZero: return "AllWeightsZero";
    case ErrorCode::kNonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::kZeroBudget: return "ZeroBudget";
    case ErrorCode::kSharedSources: return "SharedSources";
    case ErrorCode::kEpsilonTooSmall: return "EpsilonTooSmall";
    case ErrorCode::kCapacityExceeded: return "CapacityExceeded";
    case ErrorCode::kQueueUnderflow: return "QueueUnderflow";
    case ErrorCode::kVerificationFailed: return "VerificationFailed";
    case ErrorCode::kUnsupported: return "Unsupported";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }
  std::string_view name() const { return error_name(code_); }

 private:
  ErrorCode code_;
};

// Outcome of a validation pass: empty means ok.
struct Status {
  bool ok_flag = true;
  ErrorCode code = ErrorCode::kParse;
  std::string message;

  static Status success() { return {}; }
  static Status fail(ErrorCode c, std::string msg) {
    return Status{false, c, std::move(msg)};
  }
  bool ok() const { return ok_flag; }
  explicit operator bool() const { return ok_flag; }

  void throw_if_error() const {
    if (!ok_flag) throw Error(code, message);
  }
};

}  // namespace netfun
