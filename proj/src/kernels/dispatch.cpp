#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "atnj/kernels.hpp"

namespace atnj {

#if ATNJ_HAVE_AVX2_TU
const Kernels* avx2_kernels_impl();
#endif

const Kernels* avx2_kernels() {
#if ATNJ_HAVE_AVX2_TU && defined(__GNUC__)
    if (__builtin_cpu_supports("avx2")) return avx2_kernels_impl();
#endif
    return nullptr;
}

namespace {

const Kernels& select() {
    const char* req = std::getenv("ATNJ_KERNELS");
    if (req && std::strcmp(req, "scalar") == 0) return scalar_kernels();
    if (req && std::strcmp(req, "avx2") == 0) {
        if (const Kernels* k = avx2_kernels()) return *k;
        std::fprintf(stderr, "atnj: ATNJ_KERNELS=avx2 requested but unavailable, using scalar\n");
        return scalar_kernels();
    }
    if (req && std::strcmp(req, "auto") != 0 && *req != '\0') {
        std::fprintf(stderr, "atnj: unknown ATNJ_KERNELS value '%s', using auto\n", req);
    }
    if (const Kernels* k = avx2_kernels()) return *k;
    return scalar_kernels();
}

}  // namespace

const Kernels& active_kernels() {
    static const Kernels& k = select();
    return k;
}

}  // namespace atnj
