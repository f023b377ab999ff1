#pragma once

#include <cmath>

namespace relaxcrb {

// Forward-mode dual number carrying derivatives with respect to T1 and T2.
// Signal models are templated on the scalar type so the same closed form
// yields h (double) or h with its exact sensitivities (Dual).
struct Dual {
    double v = 0.0;
    double d1 = 0.0; // d/dT1
    double d2 = 0.0; // d/dT2

    constexpr Dual() = default;
    constexpr Dual(double value) : v(value) {}
    constexpr Dual(double value, double dt1, double dt2) : v(value), d1(dt1), d2(dt2) {}

    Dual &operator+=(const Dual &o) { v += o.v; d1 += o.d1; d2 += o.d2; return *this; }
    Dual &operator-=(const Dual &o) { v -= o.v; d1 -= o.d1; d2 -= o.d2; return *this; }
    Dual &operator*=(const Dual &o) {
        d1 = d1 * o.v + v * o.d1;
        d2 = d2 * o.v + v * o.d2;
        v *= o.v;
        return *this;
    }
    Dual &operator/=(const Dual &o) {
        const double inv = 1.0 / o.v;
        d1 = (d1 - v * inv * o.d1) * inv;
        d2 = (d2 - v * inv * o.d2) * inv;
        v *= inv;
        return *this;
    }
};

inline Dual operator-(const Dual &a) { return {-a.v, -a.d1, -a.d2}; }
inline Dual operator+(Dual a, const Dual &b) { return a += b; }
inline Dual operator-(Dual a, const Dual &b) { return a -= b; }
inline Dual operator*(Dual a, const Dual &b) { return a *= b; }
inline Dual operator/(Dual a, const Dual &b) { return a /= b; }
inline Dual operator+(Dual a, double b) { a.v += b; return a; }
inline Dual operator+(double a, Dual b) { b.v += a; return b; }
inline Dual operator-(Dual a, double b) { a.v -= b; return a; }
inline Dual operator-(double a, const Dual &b) { return {a - b.v, -b.d1, -b.d2}; }
inline Dual operator*(Dual a, double b) { return {a.v * b, a.d1 * b, a.d2 * b}; }
inline Dual operator*(double a, const Dual &b) { return {a * b.v, a * b.d1, a * b.d2}; }
inline Dual operator/(Dual a, double b) { return a * (1.0 / b); }
inline Dual operator/(double a, const Dual &b) {
    const double inv = 1.0 / b.v;
    const double f = -a * inv * inv;
    return {a * inv, f * b.d1, f * b.d2};
}

inline Dual exp(const Dual &a) {
    const double e = std::exp(a.v);
    return {e, e * a.d1, e * a.d2};
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual &x) { return x.v; }

} // namespace relaxcrb
