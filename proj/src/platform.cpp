#include "lsmgan/platform.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace lsmgan {

void tune_allocator() {
#if defined(__GLIBC__)
  // Graph nodes allocate and free multi-megabyte tensors every batch. With
  // the default dynamic thresholds each of them is an mmap/munmap pair plus
  // page faults on first touch.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace lsmgan
