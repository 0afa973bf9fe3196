#pragma once

namespace kmdr::parallel {

// Caps the OpenMP worker count. Values < 1 are ignored.
void set_threads(int n);
int max_threads();

// KMDR_THREADS from the environment, or 0 when unset or unparseable.
int threads_from_env();

}  // namespace kmdr::parallel
