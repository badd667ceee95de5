#include "ffalm/kernels.hpp"

namespace ffalm::kern {

namespace {

struct Vtable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scal)(double, double*, std::size_t);
  double (*l2sq)(const double*, std::size_t);
};

constexpr Vtable kScalar{scalar::dot, scalar::axpy, scalar::scal, scalar::l2sq};

#ifdef FFALM_HAVE_AVX2
constexpr Vtable kAvx2{avx2::dot, avx2::axpy, avx2::scal, avx2::l2sq};
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Dispatch {
  const Vtable* table;
  Backend backend;
  Dispatch() : table(&kScalar), backend(Backend::scalar) {
#ifdef FFALM_HAVE_AVX2
    if (cpu_has_avx2()) {
      table = &kAvx2;
      backend = Backend::avx2;
    }
#endif
  }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

bool avx2_available() {
#ifdef FFALM_HAVE_AVX2
  return cpu_has_avx2();
#else
  return false;
#endif
}

bool set_backend(Backend b) {
  if (b == Backend::scalar) {
    dispatch().table = &kScalar;
    dispatch().backend = Backend::scalar;
    return true;
  }
#ifdef FFALM_HAVE_AVX2
  if (cpu_has_avx2()) {
    dispatch().table = &kAvx2;
    dispatch().backend = Backend::avx2;
    return true;
  }
#endif
  return false;
}

double dot(const double* a, const double* b, std::size_t n) {
  return dispatch().table->dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  dispatch().table->axpy(alpha, x, y, n);
}

void scal(double alpha, double* x, std::size_t n) {
  dispatch().table->scal(alpha, x, n);
}

double l2sq(const double* x, std::size_t n) {
  return dispatch().table->l2sq(x, n);
}

}  // namespace ffalm::kern
