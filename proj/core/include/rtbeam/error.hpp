// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rtbeam {

enum class Errc {
  kFormat,
  kRate,
  kIo,
  kValue,
  kSize,
  kShape,
  kSingular,
  kConvergence,
  kDegenerate,
  kDivergence,
  kSubspace,
  kSpec,
  kParse,
  kUsage,
};

std::string_view ErrcName(Errc code);

// All library failures are reported through this one exception type; the
// code identifies the error class named in each operation's contract.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void Fail(Errc code, const std::string& what);

}  // namespace rtbeam
