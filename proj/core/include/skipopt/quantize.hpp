#pragma once

#include "skipopt/tensor.hpp"

namespace skipopt {

/// Signed fixed-point format: integer_bits integer bits (including sign) and
/// total_bits - integer_bits fractional bits.
struct QuantSpec {
    int total_bits = 8;
    int integer_bits = 3;

    double step() const;       // grid spacing, 2^-(total_bits - integer_bits)
    double max_value() const;  // 2^(integer_bits-1) - step
    double min_value() const;  // -2^(integer_bits-1)
    bool valid() const {
        return total_bits >= 2 && total_bits <= 32 && integer_bits >= 1 &&
               integer_bits < total_bits;
    }
};

double fake_quantize(double x, const QuantSpec& spec);

/// Rounds every value to the nearest representable fixed-point number,
/// saturating at the range edges. Idempotent and non-expansive.
Tensor fake_quantize(const Tensor& t, int total_bits, int integer_bits);
Tensor fake_quantize(const Tensor& t, const QuantSpec& spec);

} // namespace skipopt
