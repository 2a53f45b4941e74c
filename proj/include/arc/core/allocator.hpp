#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace arc {

/// Training allocates and frees many batch-sized matrices per update. glibc
/// serves blocks above its mmap threshold with fresh mappings, which turns
/// every temporary into a page-fault storm; raising the thresholds keeps them
/// on the heap. No-op on other C libraries.
inline void tune_allocator() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 128 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
    return true;
  }();
  (void)done;
#endif
}

}  // namespace arc
