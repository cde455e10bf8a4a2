#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace dgmrec {

/// Keeps freed heap memory in the process instead of returning it to the
/// kernel. Training allocates and frees many large temporaries per batch;
/// with glibc defaults each one is a fresh mmap and a round of page faults.
/// Call once at startup. No-op outside glibc.
inline void retain_freed_memory() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 64 << 20);
#endif
}

} // namespace dgmrec
