#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>

namespace cluslab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt int_pow(const BigInt& base, unsigned e) {
    BigInt r = 1, b = base;
    while (e) {
        if (e & 1u) r *= b;
        b *= b;
        e >>= 1u;
    }
    return r;
}

inline Rational rational_pow(const Rational& base, unsigned e) {
    return Rational(int_pow(boost::multiprecision::numerator(base), e),
                    int_pow(boost::multiprecision::denominator(base), e));
}

inline BigInt binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    BigInt r = 1;
    for (unsigned t = 0; t < k; ++t) {
        r *= n - t;
        r /= t + 1;
    }
    return r;
}

inline BigInt factorial(unsigned n) {
    BigInt r = 1;
    for (unsigned t = 2; t <= n; ++t) r *= t;
    return r;
}

// Exact value q * eps^d for a symbolic scale eps. Moments and cumulants of a
// fixed multidegree are homogeneous in eps, so sums are only defined between
// equal degrees; heterogeneous sums substitute a concrete eps^2 first.
struct ScaledRational {
    int eps_degree = 0;
    Rational coeff = 0;

    ScaledRational() = default;
    ScaledRational(int degree, Rational q) : eps_degree(degree), coeff(std::move(q)) {}

    bool is_zero() const { return coeff == 0; }

    ScaledRational& operator+=(const ScaledRational& other) {
        if (other.coeff == 0) return *this;
        if (coeff == 0) {
            *this = other;
            return *this;
        }
        if (eps_degree != other.eps_degree)
            throw std::logic_error("ScaledRational: degree mismatch in addition");
        coeff += other.coeff;
        return *this;
    }

    ScaledRational& operator-=(const ScaledRational& other) {
        ScaledRational neg{other.eps_degree, -other.coeff};
        return *this += neg;
    }

    ScaledRational operator*(const ScaledRational& other) const {
        return {eps_degree + other.eps_degree, coeff * other.coeff};
    }

    ScaledRational operator*(const Rational& q) const { return {eps_degree, coeff * q}; }

    // Numeric value at a concrete eps^2. Odd degrees would need eps itself;
    // everything this library produces is even-degree by parity.
    Rational at_eps_sq(const Rational& eps_sq) const {
        if (coeff == 0) return 0;
        if (eps_degree % 2 != 0)
            throw std::logic_error("ScaledRational: odd eps degree has no rational value");
        return coeff * rational_pow(eps_sq, static_cast<unsigned>(eps_degree / 2));
    }

    bool operator==(const ScaledRational& other) const {
        if (coeff == 0 && other.coeff == 0) return true;
        return eps_degree == other.eps_degree && coeff == other.coeff;
    }
};

}  // namespace cluslab
