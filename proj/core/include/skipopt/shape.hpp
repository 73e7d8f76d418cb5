#pragma once

namespace skipopt {

/// Spatial activation shape. Dense outputs are modeled as {1, 1, features}.
struct TensorShape {
    int height = 1;
    int width = 1;
    int channels = 1;

    long long elements() const {
        return static_cast<long long>(height) * width * channels;
    }
    bool valid() const { return height >= 1 && width >= 1 && channels >= 1; }
    bool operator==(const TensorShape&) const = default;
};

} // namespace skipopt
