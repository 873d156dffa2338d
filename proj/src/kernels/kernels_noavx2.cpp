// Stub used when AVX2 variants are not built (non-x86 targets or opt-out).

#include "lista/kernels/kernels.hpp"

namespace lista::kernels {

bool avx2_compiled() { return false; }
const Kernels* avx2() { return nullptr; }

}  // namespace lista::kernels
