#include "skipopt/datasets.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace skipopt {

namespace {

Tensor point(double a, double b) {
    Tensor t({1, 1, 2});
    t.v[0] = a;
    t.v[1] = b;
    return t;
}

constexpr double kPi = 3.14159265358979323846;

} // namespace

Dataset make_spiral(int points, int classes, unsigned long long seed, double noise) {
    if (points < classes || classes < 2)
        throw std::invalid_argument("spiral: need classes >= 2 and points >= classes");
    Dataset d;
    d.classes = classes;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, noise);
    int per_class = points / classes;
    for (int c = 0; c < classes; ++c) {
        int n = (c == classes - 1) ? points - per_class * (classes - 1) : per_class;
        for (int i = 0; i < n; ++i) {
            double t = static_cast<double>(i) / std::max(1, n - 1);
            double r = 0.1 + 0.9 * t;
            double theta = 2.0 * kPi * c / classes + t * 1.5 * kPi;
            d.x.push_back(point(r * std::cos(theta) + jitter(rng),
                                r * std::sin(theta) + jitter(rng)));
            d.y.push_back(c);
        }
    }
    return d;
}

Dataset make_moons(int points, unsigned long long seed, double noise) {
    if (points < 2) throw std::invalid_argument("moons: need points >= 2");
    Dataset d;
    d.classes = 2;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, noise);
    int half = points / 2;
    for (int i = 0; i < points; ++i) {
        bool top = i < half;
        int n = top ? half : points - half;
        double t = kPi * static_cast<double>(top ? i : i - half) / std::max(1, n - 1);
        double x = top ? std::cos(t) : 1.0 - std::cos(t);
        double y = top ? std::sin(t) : 0.5 - std::sin(t);
        d.x.push_back(point(x + jitter(rng), y + jitter(rng)));
        d.y.push_back(top ? 0 : 1);
    }
    return d;
}

Dataset make_blobs(int points, int classes, unsigned long long seed, double noise) {
    if (points < classes || classes < 2)
        throw std::invalid_argument("blobs: need classes >= 2 and points >= classes");
    Dataset d;
    d.classes = classes;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, noise);
    int per_class = points / classes;
    for (int c = 0; c < classes; ++c) {
        double theta = 2.0 * kPi * c / classes;
        double cx = 1.5 * std::cos(theta), cy = 1.5 * std::sin(theta);
        int n = (c == classes - 1) ? points - per_class * (classes - 1) : per_class;
        for (int i = 0; i < n; ++i) {
            d.x.push_back(point(cx + jitter(rng), cy + jitter(rng)));
            d.y.push_back(c);
        }
    }
    return d;
}

Dataset make_dataset(const std::string& name, int points, int classes,
                     unsigned long long seed) {
    if (name == "spiral") return make_spiral(points, classes, seed);
    if (name == "moons") return make_moons(points, seed);
    if (name == "blobs") return make_blobs(points, classes, seed);
    throw std::invalid_argument("unknown dataset: " + name +
                                " (expected spiral, moons, or blobs)");
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    Dataset d;
    std::string line;
    int max_label = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') ||
            !std::getline(row, c))
            throw std::runtime_error("bad CSV row (want x0,x1,label): " + line);
        d.x.push_back(point(std::stod(a), std::stod(b)));
        d.y.push_back(std::stoi(c));
        max_label = std::max(max_label, d.y.back());
    }
    if (d.x.empty()) throw std::runtime_error("dataset is empty: " + path);
    d.classes = max_label + 1;
    return d;
}

} // namespace skipopt
