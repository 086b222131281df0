#include "encpipe/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace encpipe::kernels {

// Defined in kernels_avx2.cpp; nullptr on non-x86 builds.
const Ops* avx2_table_impl();

namespace {

bool cpu_has_avx2_fma() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct Selection {
    const Ops* table;
    const char* name;
};

Selection select() {
    const Ops* avx2 = avx2_table_impl();
    const char* env = std::getenv("ENCPIPE_SIMD");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return {&scalar_ops(), "scalar"};
        if (std::strcmp(env, "avx2") == 0 && avx2 != nullptr && cpu_has_avx2_fma())
            return {avx2, "avx2"};
        // "auto" or anything unusable falls through to detection
    }
    if (avx2 != nullptr && cpu_has_avx2_fma()) return {avx2, "avx2"};
    return {&scalar_ops(), "scalar"};
}

const Selection& selection() {
    static const Selection s = select();
    return s;
}

} // namespace

const Ops& ops() { return *selection().table; }

const Ops* avx2_ops() {
    return cpu_has_avx2_fma() ? avx2_table_impl() : nullptr;
}

const char* backend_name() { return selection().name; }

} // namespace encpipe::kernels
