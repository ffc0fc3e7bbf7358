// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <functional>

namespace rtbeam {

// Process-wide worker count for the parallel regions (per-frequency loops,
// batch items). 1 means everything runs on the calling thread.
void SetNumThreads(int n);
int NumThreads();

// Runs body(i) for i in [0, n). Each index is handled by exactly one worker
// and bodies must only write to index-owned state, so the result matches a
// sequential run bit for bit.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rtbeam
