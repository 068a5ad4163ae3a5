#include <cstdlib>
#include <string>

#include "cmie/core/error.hpp"
#include "cmie/kernels/kernels.hpp"

namespace cmie::kernels {

#ifdef CMIE_HAVE_AVX2
const KernelTable* avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#ifdef CMIE_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* resolve(std::string_view name) {
  if (name == "scalar") return &scalar_table();
  if (name == "avx2") {
    const KernelTable* t = avx2_table();
    if (t == nullptr) throw UsageError("avx2 kernels are not available on this host");
    return t;
  }
  if (name == "auto" || name.empty()) {
    const KernelTable* t = avx2_table();
    return t != nullptr ? t : &scalar_table();
  }
  throw UsageError("unknown kernel variant '" + std::string(name) + "' (expected scalar, avx2 or auto)");
}

const KernelTable*& current() {
  static const KernelTable* table = [] {
    const char* env = std::getenv("CMIE_KERNELS");
    return resolve(env != nullptr ? std::string_view(env) : std::string_view("auto"));
  }();
  return table;
}

}  // namespace

const KernelTable& active() { return *current(); }

void select(std::string_view name) { current() = resolve(name); }

}  // namespace cmie::kernels
