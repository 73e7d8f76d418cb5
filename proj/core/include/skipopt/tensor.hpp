#pragma once

#include <cstddef>
#include <vector>

#include "skipopt/shape.hpp"

namespace skipopt {

/// Dense 64-bit tensor. Activations use (height, width, channels) layout with
/// channels fastest; conv weights use (ky, kx, in_channels, out_channels);
/// dense weights use (in_features, out_features).
struct Tensor {
    std::vector<int> dims;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
        v.assign(count(dims), 0.0);
    }
    static Tensor from_shape(const TensorShape& s) {
        return Tensor({s.height, s.width, s.channels});
    }
    static Tensor scalar(double x) {
        Tensor t({1});
        t.v[0] = x;
        return t;
    }

    size_t size() const { return v.size(); }
    bool same_dims(const Tensor& o) const { return dims == o.dims; }

    static size_t count(const std::vector<int>& dims) {
        size_t n = 1;
        for (int d : dims) n *= static_cast<size_t>(d);
        return n;
    }
};

/// p <- p - lr * g, elementwise. Shapes must match.
void sgd_step(Tensor& params, const Tensor& grads, double lr);

} // namespace skipopt
