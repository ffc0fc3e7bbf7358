// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/error.hpp"

namespace rtbeam {

std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kFormat: return "format error";
    case Errc::kRate: return "rate error";
    case Errc::kIo: return "I/O error";
    case Errc::kValue: return "value error";
    case Errc::kSize: return "size error";
    case Errc::kShape: return "shape error";
    case Errc::kSingular: return "singularity error";
    case Errc::kConvergence: return "convergence error";
    case Errc::kDegenerate: return "degenerate-statistics error";
    case Errc::kDivergence: return "divergence error";
    case Errc::kSubspace: return "subspace error";
    case Errc::kSpec: return "spec error";
    case Errc::kParse: return "parse error";
    case Errc::kUsage: return "usage error";
  }
  return "error";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(ErrcName(code)) + ": " + what),
      code_(code) {}

void Fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace rtbeam
