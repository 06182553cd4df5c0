#include "oto/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace oto::kernels {

#ifdef OTO_HAVE_AVX2
const Ops& avx2_ops();
#endif
#ifdef OTO_HAVE_NEON
const Ops& neon_ops();
#endif

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#ifdef OTO_HAVE_AVX2
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#ifdef OTO_HAVE_NEON
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::string isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "?";
}

const Ops& table(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return scalar_ops();
    case Isa::avx2:
#ifdef OTO_HAVE_AVX2
      return avx2_ops();
#else
      break;
#endif
    case Isa::neon:
#ifdef OTO_HAVE_NEON
      return neon_ops();
#else
      break;
#endif
  }
  throw std::runtime_error("kernel backend not compiled in: " + isa_name(isa));
}

namespace {

Isa pick_default() {
  if (const char* env = std::getenv("OTO_KERNELS")) {
    std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2") return Isa::avx2;
    if (v == "neon") return Isa::neon;
    if (!v.empty() && v != "auto")
      throw std::runtime_error("OTO_KERNELS must be scalar|avx2|neon|auto, got: " + v);
  }
  if (supported(Isa::avx2)) return Isa::avx2;
  if (supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

struct Active {
  Isa isa;
  const Ops* ops;
};

Active& active() {
  static Active a = [] {
    Isa isa = pick_default();
    if (!supported(isa))
      throw std::runtime_error("requested kernel backend unsupported on this cpu: " +
                               isa_name(isa));
    return Active{isa, &table(isa)};
  }();
  return a;
}

}  // namespace

const Ops& ops() { return *active().ops; }

Isa active_isa() { return active().isa; }

void select(Isa isa) {
  if (!supported(isa))
    throw std::runtime_error("kernel backend unsupported on this cpu: " +
                             isa_name(isa));
  active() = Active{isa, &table(isa)};
}

}  // namespace oto::kernels
