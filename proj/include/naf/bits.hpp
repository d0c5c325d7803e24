#pragma once

#include <cmath>
#include <limits>

#include "naf/errors.hpp"

namespace naf {

/**
 * Quantity measured in bits (log base 2).
 *
 * Divergences use the +infinity state (support violations); sequence scores
 * use -infinity (zero-probability outputs). NaN is rejected at construction,
 * so comparisons are total and inf-vs-finite threshold tests are well defined.
 */
class Bits {
public:
    Bits() = default;

    explicit Bits(double value) : value_(value) {
        if (std::isnan(value_)) {
            throw InvalidInput("Bits: NaN is not representable");
        }
    }

    static Bits infinity() { return Bits(std::numeric_limits<double>::infinity()); }
    static Bits neg_infinity() { return Bits(-std::numeric_limits<double>::infinity()); }

    double value() const { return value_; }
    bool finite() const { return std::isfinite(value_); }

    friend bool operator==(Bits a, Bits b) { return a.value_ == b.value_; }
    friend bool operator!=(Bits a, Bits b) { return a.value_ != b.value_; }
    friend bool operator<(Bits a, Bits b) { return a.value_ < b.value_; }
    friend bool operator<=(Bits a, Bits b) { return a.value_ <= b.value_; }
    friend bool operator>(Bits a, Bits b) { return a.value_ > b.value_; }
    friend bool operator>=(Bits a, Bits b) { return a.value_ >= b.value_; }

    friend Bits operator+(Bits a, Bits b) {
        const double s = a.value_ + b.value_;
        if (std::isnan(s)) {
            throw InvalidInput("Bits: inf + -inf is undefined");
        }
        return Bits(s);
    }

    friend Bits operator-(Bits a, Bits b) {
        const double s = a.value_ - b.value_;
        if (std::isnan(s)) {
            throw InvalidInput("Bits: inf - inf is undefined");
        }
        return Bits(s);
    }

    Bits& operator+=(Bits other) {
        *this = *this + other;
        return *this;
    }

private:
    double value_ = 0.0;
};

}  // namespace naf
