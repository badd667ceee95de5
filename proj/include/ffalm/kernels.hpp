#pragma once

#include <cstddef>

// Dense double-precision primitives behind the model/aggregation inner
// loops. A scalar reference implementation always exists; an AVX2+FMA
// variant is compiled when the toolchain supports it and selected at
// runtime when the CPU does. Both variants are equivalence-tested
// against each other.
//
// Within one process the active backend never changes unless
// set_backend() is called explicitly, so repeated runs on the same
// machine are bit-identical.

namespace ffalm::kern {

enum class Backend { scalar, avx2 };

// Currently dispatched backend.
Backend active_backend();

// Force a backend. Returns false (and leaves the dispatch unchanged)
// if the requested backend is not usable on this CPU/build.
bool set_backend(Backend b);

bool avx2_available();

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
void scal(double alpha, double* x, std::size_t n);                   // x *= alpha
double l2sq(const double* x, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scal(double alpha, double* x, std::size_t n);
double l2sq(const double* x, std::size_t n);
}  // namespace scalar

#ifdef FFALM_HAVE_AVX2
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scal(double alpha, double* x, std::size_t n);
double l2sq(const double* x, std::size_t n);
}  // namespace avx2
#endif

}  // namespace ffalm::kern
