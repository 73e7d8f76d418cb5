#pragma once

#include <string>
#include <vector>

#include "skipopt/tensor.hpp"

namespace skipopt {

/// Labeled 2D point set; features are (1,1,2) tensors fed to the MLP builders.
struct Dataset {
    std::vector<Tensor> x;
    std::vector<int> y;
    int classes = 0;

    size_t size() const { return x.size(); }
};

/// Interleaved spiral arms, one per class.
Dataset make_spiral(int points, int classes, unsigned long long seed,
                    double noise = 0.05);
/// Two interleaving half-circles, two classes.
Dataset make_moons(int points, unsigned long long seed, double noise = 0.08);
/// Isotropic Gaussian clusters, one per class.
Dataset make_blobs(int points, int classes, unsigned long long seed,
                   double noise = 0.25);

/// Lookup by name ("spiral", "moons", "blobs"); throws std::invalid_argument
/// for unknown names.
Dataset make_dataset(const std::string& name, int points, int classes,
                     unsigned long long seed);

/// CSV rows "x0,x1,label". Throws std::runtime_error on I/O or parse failure.
Dataset load_dataset_csv(const std::string& path);

} // namespace skipopt
