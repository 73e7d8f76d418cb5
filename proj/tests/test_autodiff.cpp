#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <skipopt/builders.hpp>
#include <skipopt/evaluator.hpp>
#include <skipopt/quantize.hpp>

using namespace skipopt;

namespace {

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

Tensor random_tensor(std::vector<int> dims, std::mt19937_64& rng, double scale = 1.0) {
    Tensor t(std::move(dims));
    std::normal_distribution<double> dist(0.0, scale);
    for (double& v : t.v) v = dist(rng);
    return t;
}

// Straight-line oracle: a residual MLP evaluated with plain loops, no tape.
std::vector<double> straightline_residual_mlp(const std::vector<double>& x,
                                              const Tensor& w_in, const Tensor& w1,
                                              const Tensor& w2, const Tensor& w_out) {
    auto matvec = [](const Tensor& w, const std::vector<double>& in) {
        int out = w.dims[1];
        std::vector<double> y(out, 0.0);
        for (size_t i = 0; i < in.size(); ++i)
            for (int j = 0; j < out; ++j) y[j] += in[i] * w.v[i * out + j];
        return y;
    };
    auto relu = [](std::vector<double> v) {
        for (double& x : v) x = std::max(0.0, x);
        return v;
    };
    std::vector<double> h = relu(matvec(w_in, x));
    std::vector<double> t = matvec(w2, relu(matvec(w1, h)));
    for (size_t i = 0; i < h.size(); ++i) t[i] += h[i]; // residual join
    return matvec(w_out, relu(t));
}

// Small random graphs mixing dense and conv paths, all [validate]-clean.
NetworkGraph random_small_graph(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, 2);
    std::uniform_int_distribution<int> hidden_dist(3, 16);
    std::uniform_int_distribution<int> chan_dist(1, 3);
    switch (pick(rng)) {
        case 0:
            return build_residual_mlp(1, hidden_dist(rng), 3, 2);
        case 1: {
            // conv stem -> residual conv block (identity, span 1) -> dense
            int c = chan_dist(rng);
            NetworkGraph g;
            g.name = "rand_conv";
            TensorShape in{3, 3, 2};
            LayerGroup stem{0, LayerOp::Conv, 3, c, 1, 0, 0, 0, in, {3, 3, c}};
            LayerGroup body{1, LayerOp::Conv, 3, c, 1, 0, 0, 0, {3, 3, c}, {3, 3, c}};
            LayerGroup join{2, LayerOp::Add, 0, 0, 1, 0, 0, 0, {3, 3, c}, {3, 3, c}};
            LayerGroup act{3, LayerOp::ReLU, 0, 0, 1, 0, 0, 0, {3, 3, c}, {3, 3, c}};
            LayerGroup head{4, LayerOp::Dense, 0, 0, 1, 3, 0, 0, {3, 3, c}, {1, 1, 3}};
            g.layers = {stem, body, join, act, head};
            g.skips = {{0, 0, 2, 1, SkipKind::Identity, 0, 1}};
            return g;
        }
        default: {
            // strided conv with a projection skip
            int c = chan_dist(rng) + 1;
            NetworkGraph g;
            g.name = "rand_proj";
            TensorShape in{4, 4, 2};
            LayerGroup stem{0, LayerOp::Conv, 1, 2, 1, 0, 0, 0, in, {4, 4, 2}};
            LayerGroup body{1, LayerOp::Conv, 3, c, 2, 0, 0, 0, {4, 4, 2}, {2, 2, c}};
            LayerGroup join{2, LayerOp::Add, 0, 0, 1, 0, 0, 0, {2, 2, c}, {2, 2, c}};
            LayerGroup head{3, LayerOp::Dense, 0, 0, 1, 2, 0, 0, {2, 2, c}, {1, 1, 2}};
            g.layers = {stem, body, join, head};
            g.skips = {{0, 0, 2, 1, SkipKind::Projection1x1, c, 2}};
            return g;
        }
    }
}

double loss_value(const NetworkGraph& g, const ParamSet& p, const Tensor& x, int label) {
    ForwardPass pass = forward(g, p, x, /*train=*/false);
    Tape::NodeId loss = pass.tape->cross_entropy_with_softmax(pass.output, label);
    return pass.tape->value(loss).v[0];
}

} // namespace

TEST_CASE("identity dense passes the input through") {
    NetworkGraph g;
    g.name = "identity";
    g.layers = {{0, LayerOp::Dense, 0, 0, 1, 4, 0, 0, {1, 1, 4}, {1, 1, 4}}};
    ParamSet p;
    p.layer[0] = Tensor({4, 4});
    for (int i = 0; i < 4; ++i) p.layer[0].v[i * 4 + i] = 1.0;

    Tensor x({1, 1, 4});
    x.v = {0.5, -1.0, 2.0, 0.0};
    Tensor y = forward_value(g, p, x);
    for (int i = 0; i < 4; ++i) CHECK(y.v[i] == doctest::Approx(x.v[i]).epsilon(1e-15));
}

TEST_CASE("span-1 identity skip around a zero-weight dense: output == input") {
    NetworkGraph g;
    g.name = "zero_residual";
    g.layers = {{0, LayerOp::Dense, 0, 0, 1, 4, 0, 0, {1, 1, 4}, {1, 1, 4}},
                {1, LayerOp::Dense, 0, 0, 1, 4, 0, 0, {1, 1, 4}, {1, 1, 4}},
                {2, LayerOp::Add, 0, 0, 1, 0, 0, 0, {1, 1, 4}, {1, 1, 4}}};
    g.skips = {{0, 0, 2, 1, SkipKind::Identity, 0, 1}};
    REQUIRE(validate(g).empty());

    ParamSet p;
    p.layer[0] = Tensor({4, 4});
    for (int i = 0; i < 4; ++i) p.layer[0].v[i * 4 + i] = 1.0; // stem = identity
    p.layer[1] = Tensor({4, 4});                               // body = zero

    Tensor x({1, 1, 4});
    x.v = {1.0, -2.0, 3.0, 4.0};
    Tensor y = forward_value(g, p, x);
    for (int i = 0; i < 4; ++i) CHECK(y.v[i] == doctest::Approx(x.v[i]).epsilon(1e-15));
}

TEST_CASE("forward matches a straight-line re-implementation to 1e-12") {
    std::mt19937_64 rng(7);
    NetworkGraph g = build_residual_mlp(1, 5, 3, 2);
    for (int trial = 0; trial < 20; ++trial) {
        ParamSet p = init_params(g, 100 + trial);
        Tensor x = random_tensor({1, 1, 2}, rng);
        Tensor y = forward_value(g, p, x);

        // layer ids: 0 stem dense, 1 relu, 2 dense, 3 relu, 4 dense, 5 add, 6 relu, 7 head
        auto oracle = straightline_residual_mlp({x.v[0], x.v[1]}, p.layer.at(0),
                                                p.layer.at(2), p.layer.at(4), p.layer.at(7));
        REQUIRE(oracle.size() == y.size());
        for (size_t i = 0; i < oracle.size(); ++i)
            CHECK(std::abs(y.v[i] - oracle[i]) < 1e-12);
    }
}

TEST_CASE("dense weight gradient is the outer product with the input") {
    // loss = mean(output) over 2 outputs => dL/dw_ij = x_i / 2
    Tape tape;
    Tensor x({1, 1, 3});
    x.v = {0.5, -1.5, 2.0};
    Tensor w({3, 2});
    for (size_t i = 0; i < w.v.size(); ++i) w.v[i] = 0.1 * static_cast<double>(i);

    Tape::NodeId xn = tape.leaf(x, false);
    Tape::NodeId wn = tape.leaf(w, true);
    Tape::NodeId y = tape.dense(xn, wn);
    tape.backward(tape.mean(y));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(tape.grad(wn).v[i * 2 + j] ==
                  doctest::Approx(x.v[i] / 2.0).epsilon(1e-12));
}

TEST_CASE("gradients match central finite differences on 100 random graphs") {
    std::mt19937_64 rng(42);
    const double fd_step = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        NetworkGraph g = random_small_graph(rng);
        REQUIRE(validate(g).empty());
        ParamSet p = init_params(g, 1000 + trial);
        TensorShape in = g.input_shape();
        Tensor x = random_tensor({in.height, in.width, in.channels}, rng);
        int label = static_cast<int>(rng() % g.output_shape().elements());

        ForwardPass pass = forward(g, p, x);
        Tape::NodeId loss = pass.tape->cross_entropy_with_softmax(pass.output, label);
        pass.tape->backward(loss);
        ParamSet analytic = collect_gradients(pass);

        auto check_block = [&](Tensor& param, const Tensor& grad) {
            for (size_t i = 0; i < param.v.size(); ++i) {
                double keep = param.v[i];
                param.v[i] = keep + fd_step;
                double up = loss_value(g, p, x, label);
                param.v[i] = keep - fd_step;
                double down = loss_value(g, p, x, label);
                param.v[i] = keep;
                double fd = (up - down) / (2.0 * fd_step);
                worst = std::max(worst, rel_err(grad.v[i], fd));
            }
        };
        for (auto& [id, w] : p.layer) check_block(w, analytic.layer.at(id));
        for (auto& [id, w] : p.skip) check_block(w, analytic.skip.at(id));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("parameters off the loss path get zero gradient") {
    std::mt19937_64 rng(3);
    Tape tape;
    Tensor x({1, 1, 2});
    x.v = {1.0, 2.0};
    Tape::NodeId xn = tape.leaf(x, false);
    Tape::NodeId used = tape.leaf(random_tensor({2, 2}, rng), true);
    Tape::NodeId unused = tape.leaf(Tensor({2, 2}), true);
    Tape::NodeId y = tape.dense(xn, used);
    tape.backward(tape.mean(y));
    for (double gv : tape.grad(unused).v) CHECK(gv == 0.0);
    bool any = false;
    for (double gv : tape.grad(used).v) any = any || gv != 0.0;
    CHECK(any);
}

TEST_CASE("sgd_step arithmetic") {
    Tensor p({1});
    p.v = {1.0};
    Tensor g({1});
    g.v = {2.0};
    sgd_step(p, g, 0.1);
    CHECK(p.v[0] == doctest::Approx(0.8).epsilon(1e-15));

    Tensor q = p;
    sgd_step(q, g, 0.0);
    CHECK(q.v[0] == p.v[0]);
}

TEST_CASE("sgd converges monotonically on a convex quadratic") {
    // f(p) = 0.5*(p - 3)^2, grad = p - 3; closed form: p_k -> 3 geometrically.
    Tensor p({1});
    p.v = {0.0};
    double prev_gap = std::abs(p.v[0] - 3.0);
    for (int k = 0; k < 50; ++k) {
        Tensor g({1});
        g.v = {p.v[0] - 3.0};
        sgd_step(p, g, 0.2);
        double gap = std::abs(p.v[0] - 3.0);
        CHECK(gap <= prev_gap + 1e-15);
        // closed form: gap_k = 0.8^k * 3
        CHECK(gap == doctest::Approx(std::pow(0.8, k + 1) * 3.0).epsilon(1e-9));
        prev_gap = gap;
    }
}

TEST_CASE("fake_quantize <8,3>: rounding, saturation, grid") {
    QuantSpec spec{8, 3};
    CHECK(spec.step() == std::ldexp(1.0, -5));
    CHECK(fake_quantize(0.1, spec) == 0.09375);
    CHECK(fake_quantize(10.0, spec) == 3.96875);
    CHECK(fake_quantize(-10.0, spec) == -4.0);
    CHECK(spec.max_value() == 3.96875);

    // Enumerated grid oracle: every representable value maps to itself
    // (exactly: the grid is binary fractions).
    for (double v = spec.min_value(); v <= spec.max_value(); v += spec.step()) {
        CHECK(fake_quantize(v, spec) == v);
    }
}

TEST_CASE("fake_quantize is idempotent and non-expansive") {
    std::mt19937_64 rng(11);
    QuantSpec spec{8, 3};
    Tensor t = random_tensor({64}, rng, 3.0);
    Tensor q1 = fake_quantize(t, spec);
    Tensor q2 = fake_quantize(q1, spec);
    for (size_t i = 0; i < t.size(); ++i) {
        CHECK(q1.v[i] == q2.v[i]);
        CHECK(std::abs(q1.v[i]) <= std::max(std::abs(spec.min_value()), spec.max_value()));
    }
    CHECK_THROWS_AS(fake_quantize(t, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(fake_quantize(t, 8, 8), std::invalid_argument);
}

TEST_CASE("fake_quantize backward is straight-through") {
    Tape tape;
    Tensor x({3});
    x.v = {0.1, 2.7, 10.0};
    Tape::NodeId xn = tape.leaf(x, true);
    Tape::NodeId q = tape.fake_quantize(xn, QuantSpec{8, 3});
    tape.backward(tape.mean(q));
    for (double g : tape.grad(xn).v) CHECK(g == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("forward rejects mismatched shapes naming the layer") {
    NetworkGraph g = build_residual_mlp(1, 4, 2, 2);
    ParamSet p = init_params(g, 1);
    Tensor bad({1, 1, 3});
    CHECK_THROWS_WITH_AS(forward(g, p, bad), doctest::Contains("input"),
                         std::invalid_argument);

    p.layer.at(0) = Tensor({5, 4});
    Tensor x({1, 1, 2});
    CHECK_THROWS_WITH_AS(forward(g, p, x), doctest::Contains("layer 0"),
                         std::invalid_argument);
}
