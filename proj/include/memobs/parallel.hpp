#pragma once

namespace memobs {

/// Number of OpenMP threads used by the parallel kernels (1 without OpenMP).
int thread_count();
void set_thread_count(int threads);

}  // namespace memobs
