#pragma once

namespace lsmgan {

/// Keeps large training buffers on the heap instead of returning them to
/// the kernel after every step (glibc only; a no-op elsewhere).
void tune_allocator();

}  // namespace lsmgan
