#include "gridy/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace gridy {

namespace {
int g_thread_cap = 0;
}

int thread_cap_from_env() {
  const char* value = std::getenv("GRIDY_THREADS");
  if (value == nullptr) return 0;
  try {
    int n = std::stoi(value);
    return n > 0 ? n : 0;
  } catch (...) {
    return 0;
  }
}

void set_thread_cap(int threads) { g_thread_cap = threads > 0 ? threads : thread_cap_from_env(); }

int thread_cap() {
  if (g_thread_cap > 0) return g_thread_cap;
  int env = thread_cap_from_env();
  return env > 0 ? env : omp_get_max_threads();
}

}  // namespace gridy
