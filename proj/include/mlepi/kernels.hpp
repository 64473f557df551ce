#pragma once
// Dense vector kernels used by the iterative solvers. Scalar reference
// implementations plus AVX2 variants selected once at startup; the two
// are equivalence-tested against each other.
#include <cstddef>
#include <span>
#include <string>

namespace mlepi::kernels {

struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    double (*l1_norm)(const double*, std::size_t);
    double (*l2_norm_sq)(const double*, std::size_t);
    double (*l1_diff)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);      // y += a*x
    void (*scale_add)(double*, double, double, std::size_t);        // y = a*y + b
    const char* name;
};

const Ops& scalar_ops();
const Ops& avx2_ops();   // valid only if avx2_available()
bool avx2_available();

// Runtime-selected active implementation (AVX2 when the CPU has it).
const Ops& active_ops();

inline double dot(std::span<const double> x, std::span<const double> y) {
    return active_ops().dot(x.data(), y.data(), x.size());
}
inline double l1_norm(std::span<const double> x) {
    return active_ops().l1_norm(x.data(), x.size());
}
inline double l2_norm_sq(std::span<const double> x) {
    return active_ops().l2_norm_sq(x.data(), x.size());
}
inline double l1_diff(std::span<const double> x, std::span<const double> y) {
    return active_ops().l1_diff(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active_ops().axpy(a, x.data(), y.data(), x.size());
}
inline void scale_add(std::span<double> y, double a, double b) {
    active_ops().scale_add(y.data(), a, b, y.size());
}

} // namespace mlepi::kernels
