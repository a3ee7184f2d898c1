#pragma once

#include <initializer_list>
#include <type_traits>
#include <utility>
#include <vector>

namespace frontrun::quad {

// Adaptive 21-point Gauss-Kronrod on [a, b] to an absolute tolerance.
// Integrands are passed through a type-erased trampoline so nested calls are
// allowed (each call owns its workspace).
constexpr double kDefaultAbsTol = 1e-12;

using RawIntegrand = double (*)(double, void*);

double adaptive_raw(RawIntegrand f, void* ctx, double a, double b, double abs_tol);

template <class F>
double adaptive(F&& f, double a, double b, double abs_tol = kDefaultAbsTol) {
    if (a == b) return 0.0;
    using Fn = std::remove_reference_t<F>;
    RawIntegrand tramp = [](double x, void* p) -> double { return (*static_cast<Fn*>(p))(x); };
    return adaptive_raw(tramp, const_cast<void*>(static_cast<const void*>(&f)), a, b, abs_tol);
}

/// adaptive() with the interval split at every breakpoint strictly inside
/// (a, b); used for integrands with kinks at known locations such as s = Delta.
template <class F>
double adaptive_split(F&& f, double a, double b, std::initializer_list<double> breaks,
                      double abs_tol = kDefaultAbsTol) {
    double lo = a;
    double total = 0.0;
    for (double c : breaks) {
        if (c > lo && c < b) {
            total += adaptive(f, lo, c, abs_tol);
            lo = c;
        }
    }
    return total + adaptive(f, lo, b, abs_tol);
}

/// Fixed n-point Gauss-Legendre rule; for short cells on which the integrand
/// is a smooth function.
double gauss_legendre_raw(RawIntegrand f, void* ctx, double a, double b, int n);

template <class F>
double gauss_legendre(F&& f, double a, double b, int n = 10) {
    if (a == b) return 0.0;
    using Fn = std::remove_reference_t<F>;
    RawIntegrand tramp = [](double x, void* p) -> double { return (*static_cast<Fn*>(p))(x); };
    return gauss_legendre_raw(tramp, const_cast<void*>(static_cast<const void*>(&f)), a, b, n);
}

struct Node {
    double x;
    double w;
};

/// Nodes and weights of the n-point Gauss-Legendre rule mapped to [a, b].
std::vector<Node> gauss_legendre_nodes(double a, double b, int n);

}  // namespace frontrun::quad
