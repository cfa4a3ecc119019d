#include "any3d/simd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace any3d::simd {

const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable& select_kernels() {
    const auto tables = available_kernels();
    if (const char* forced = std::getenv("ANY3D_SIMD")) {
        const std::string want(forced);
        for (const KernelTable* t : tables)
            if (level_name(t->level) == want) return *t;
    }
    return *tables.front();
}

}  // namespace

std::string_view level_name(Level level) {
    switch (level) {
        case Level::Scalar: return "scalar";
        case Level::Avx2: return "avx2";
        case Level::Neon: return "neon";
    }
    return "unknown";
}

std::vector<const KernelTable*> available_kernels() {
    std::vector<const KernelTable*> out;
    if (const KernelTable* t = avx2_kernels(); t && cpu_has_avx2()) out.push_back(t);
    // NEON is mandatory on AArch64.
    if (const KernelTable* t = neon_kernels()) out.push_back(t);
    out.push_back(&scalar_kernels());
    return out;
}

const KernelTable& active_kernels() {
    static const KernelTable& table = select_kernels();
    return table;
}

}  // namespace any3d::simd
