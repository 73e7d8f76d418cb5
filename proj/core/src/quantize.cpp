#include "skipopt/quantize.hpp"

#include <cmath>
#include <stdexcept>

namespace skipopt {

double QuantSpec::step() const { return std::ldexp(1.0, integer_bits - total_bits); }

double QuantSpec::max_value() const {
    return std::ldexp(1.0, integer_bits - 1) - step();
}

double QuantSpec::min_value() const { return -std::ldexp(1.0, integer_bits - 1); }

double fake_quantize(double x, const QuantSpec& spec) {
    if (x >= spec.max_value()) return spec.max_value();
    if (x <= spec.min_value()) return spec.min_value();
    return std::round(x / spec.step()) * spec.step();
}

Tensor fake_quantize(const Tensor& t, const QuantSpec& spec) {
    if (!spec.valid())
        throw std::invalid_argument("fake_quantize requires 2 <= total_bits <= 32 and 1 <= integer_bits < total_bits");
    Tensor out = t;
    for (double& x : out.v) x = fake_quantize(x, spec);
    return out;
}

Tensor fake_quantize(const Tensor& t, int total_bits, int integer_bits) {
    return fake_quantize(t, QuantSpec{total_bits, integer_bits});
}

void sgd_step(Tensor& params, const Tensor& grads, double lr) {
    if (!params.same_dims(grads))
        throw std::invalid_argument("sgd_step: parameter/gradient shape mismatch");
    for (size_t i = 0; i < params.v.size(); ++i) params.v[i] -= lr * grads.v[i];
}

} // namespace skipopt
