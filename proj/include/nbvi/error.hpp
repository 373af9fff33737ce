#pragma once

#include <stdexcept>
#include <string>

namespace nbvi {

// Structural failure categories surfaced by the library.  Solver
// non-convergence is not an error: solvers report it through their stats
// so callers can keep the best iterate.
enum class ErrorCode {
  OutsideDomain,
  UnsupportedRegime,
  MisalignedNotch,
  EmptyNotch,
  NonMonotone,
  SweepTooShort,
  TooLarge,
  NoValidActiveSet,
  NonPositiveDiagonal,
  BadConfig,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

}  // namespace nbvi
