#pragma once

#include <stdexcept>
#include <string>

namespace particlesynth {

enum class Errc {
  kInvalidArgument,
  kEmptyInput,
  kDimensionMismatch,
  kOutOfSieveRange,
  kDegenerateParticle,
  kMalformedHeader,
  kTruncatedPayload,
  kUnsupportedMaxval,
  kIo,
  kSchema,
  kInvariant,
  kMissingAsset,
  kEmptyPool,
  kOverflow,
  kNoGroundTruth,
  kConfig,
  kMismatch,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kEmptyInput: return "empty input";
    case Errc::kDimensionMismatch: return "dimension mismatch";
    case Errc::kOutOfSieveRange: return "out of sieve range";
    case Errc::kDegenerateParticle: return "degenerate particle";
    case Errc::kMalformedHeader: return "malformed header";
    case Errc::kTruncatedPayload: return "truncated payload";
    case Errc::kUnsupportedMaxval: return "unsupported maxval";
    case Errc::kIo: return "i/o error";
    case Errc::kSchema: return "schema violation";
    case Errc::kInvariant: return "invariant violation";
    case Errc::kMissingAsset: return "missing asset";
    case Errc::kEmptyPool: return "empty pool";
    case Errc::kOverflow: return "overflow";
    case Errc::kNoGroundTruth: return "no ground truth";
    case Errc::kConfig: return "invalid config";
    case Errc::kMismatch: return "input mismatch";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// Errors caused by bad user input rather than a broken invariant.
  bool is_input_error() const noexcept {
    return code_ != Errc::kInvariant && code_ != Errc::kOverflow;
  }

 private:
  Errc code_;
};

}  // namespace particlesynth
