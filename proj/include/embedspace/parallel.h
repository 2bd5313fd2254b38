// include/embedspace/parallel.h

// Copyright 2026 The embedspace Authors

// See COPYING in the top-level directory for clarification regarding
// multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMBEDSPACE_PARALLEL_H_
#define EMBEDSPACE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace embedspace {

/// Worker count used by parallel stages. Values < 1 are treated as 1.
void set_num_threads(int n);
int num_threads();

/// Runs fn(i) for i in [0, n) over contiguous blocks. Every index is visited
/// exactly once, so outputs written per index do not depend on the thread
/// count. If several indices throw, the exception from the lowest block is
/// rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace embedspace

#endif  // EMBEDSPACE_PARALLEL_H_
