#include "cathrod/kernels/rod_kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string_view>

namespace cathrod::kernels {

#if defined(CATHROD_WITH_AVX2)
namespace detail {
const RodKernels& avx2_impl();
}

bool avx2_available() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const RodKernels& avx2_kernels() { return detail::avx2_impl(); }
#else
bool avx2_available() { return false; }
const RodKernels& avx2_kernels() { return scalar_kernels(); }
#endif

const RodKernels& active_kernels() {
    static const RodKernels* selected = [] {
        if (const char* env = std::getenv("CATHROD_KERNELS")) {
            const std::string_view want(env);
            if (want == "scalar") return &scalar_kernels();
            if (want == "avx2") {
                if (!avx2_available())
                    throw std::runtime_error("CATHROD_KERNELS=avx2 requested but AVX2 is unavailable");
                return &avx2_kernels();
            }
            if (!want.empty() && want != "auto")
                throw std::runtime_error("unknown CATHROD_KERNELS value (use scalar|avx2|auto)");
        }
        return avx2_available() ? &avx2_kernels() : &scalar_kernels();
    }();
    return *selected;
}

}  // namespace cathrod::kernels
