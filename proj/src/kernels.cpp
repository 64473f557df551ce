#include "mlepi/kernels.hpp"

#include <cmath>

namespace mlepi::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double l1_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i]);
    return s;
}

double l2sq_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

double l1_diff_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i] - y[i]);
    return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_add_scalar(double* y, double a, double b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * y[i] + b;
}

const Ops kScalar = {dot_scalar, l1_scalar, l2sq_scalar, l1_diff_scalar,
                     axpy_scalar, scale_add_scalar, "scalar"};

} // namespace

const Ops& scalar_ops() { return kScalar; }

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops& active_ops() {
    static const Ops& ops = avx2_available() ? avx2_ops() : scalar_ops();
    return ops;
}

} // namespace mlepi::kernels
