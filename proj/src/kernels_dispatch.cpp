#include <cstdlib>
#include <string_view>

#include "boss/kernels.hpp"

namespace boss::kernels {

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("BOSS_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar::table();
    if (const KernelTable* t = avx2::table()) return *t;
    return scalar::table();
  }();
  return chosen;
}

}  // namespace boss::kernels
