#pragma once

#include <cmath>

#include "qslant/errors.hpp"

namespace qslant {

// Forward-mode dual number. Nesting Dual<Dual<double>> carries second
// derivatives exactly; no truncation error anywhere.
template <typename T>
struct Dual {
    T val{};
    T dot{};

    Dual() = default;
    Dual(double v) : val(v), dot(0.0) {}  // NOLINT: implicit by design, mixes with literals
    Dual(T v, T d) : val(std::move(v)), dot(std::move(d)) {}

    Dual operator-() const { return {-val, -dot}; }

    Dual& operator+=(const Dual& o) {
        val += o.val;
        dot += o.dot;
        return *this;
    }

    friend Dual operator+(const Dual& a, const Dual& b) { return {a.val + b.val, a.dot + b.dot}; }
    friend Dual operator-(const Dual& a, const Dual& b) { return {a.val - b.val, a.dot - b.dot}; }
    friend Dual operator*(const Dual& a, const Dual& b) {
        return {a.val * b.val, a.dot * b.val + a.val * b.dot};
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        T q = a.val / b.val;
        return {q, (a.dot - q * b.dot) / b.val};
    }
};

inline double real_part(double x) { return x; }

template <typename T>
double real_part(const Dual<T>& x) {
    return real_part(x.val);
}

template <typename T>
bool is_zero_value(const T& x) {
    return real_part(x) == 0.0;
}

template <typename T>
Dual<T> sin(const Dual<T>& x) {
    using std::cos;
    using std::sin;
    return {sin(x.val), cos(x.val) * x.dot};
}

template <typename T>
Dual<T> cos(const Dual<T>& x) {
    using std::cos;
    using std::sin;
    return {cos(x.val), -(sin(x.val) * x.dot)};
}

template <typename T>
Dual<T> sqrt(const Dual<T>& x) {
    using std::sqrt;
    if (real_part(x.val) <= 0.0)
        throw EvalError("sqrt: argument must be positive where derivatives are taken");
    T r = sqrt(x.val);
    return {r, x.dot / (2.0 * r)};
}

template <typename T>
Dual<T> abs(const Dual<T>& x) {
    if (real_part(x.val) == 0.0) throw EvalError("abs: not differentiable at zero");
    return real_part(x.val) > 0.0 ? x : -x;
}

// Integer powers by repeated multiplication; negative exponents go through
// the reciprocal.
template <typename T>
T pow_int(const T& base, int exponent) {
    if (exponent < 0) return T(1.0) / pow_int(base, -exponent);
    T acc(1.0);
    T b = base;
    int e = exponent;
    while (e > 0) {
        if (e & 1) acc = acc * b;
        b = b * b;
        e >>= 1;
    }
    return acc;
}

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual<double>>;

// Seeds for one mixed second derivative: d^2/(dx_a dx_b).
inline Dual2 second_order_seed(double value, bool seed_a, bool seed_b) {
    return Dual2(Dual1(value, seed_b ? 1.0 : 0.0), Dual1(seed_a ? 1.0 : 0.0, 0.0));
}

}  // namespace qslant
