#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include <skipopt/builders.hpp>
#include <skipopt/train.hpp>

using namespace skipopt;

namespace {

Tensor probs2(double a, double b) {
    Tensor t({1, 1, 2});
    t.v = {a, b};
    return t;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

bool params_equal(const ParamSet& a, const ParamSet& b) {
    if (a.layer.size() != b.layer.size() || a.skip.size() != b.skip.size()) return false;
    for (const auto& [id, t] : a.layer) {
        auto it = b.layer.find(id);
        if (it == b.layer.end() || it->second.v != t.v) return false;
    }
    for (const auto& [id, t] : a.skip) {
        auto it = b.skip.find(id);
        if (it == b.skip.end() || it->second.v != t.v) return false;
    }
    return true;
}

} // namespace

TEST_CASE("kd_loss boundaries: beta 0 is pure cross-entropy, beta 1 pure mse") {
    Tensor s = probs2(0.7, 0.3);
    Tensor t = probs2(0.6, 0.4);

    KDLossConfig ce_only{0.0};
    CHECK(kd_loss(s, t, 0, ce_only) == doctest::Approx(-std::log(0.7)).epsilon(1e-12));

    KDLossConfig mse_only{1.0};
    double mse = ((0.6 - 0.7) * (0.6 - 0.7) + (0.4 - 0.3) * (0.4 - 0.3)) / 2.0;
    CHECK(kd_loss(s, t, 0, mse_only) == doctest::Approx(mse).epsilon(1e-12));
}

TEST_CASE("kd_loss hand-computed blend") {
    // 0.65 * (-ln 0.7) + 0.35 * 0.01 = 0.235339 (to 1e-6)
    Tensor s = probs2(0.7, 0.3);
    Tensor t = probs2(0.6, 0.4);
    double loss = kd_loss(s, t, 0, KDLossConfig{0.35});
    CHECK(std::abs(loss - 0.235339) < 1e-6);
}

TEST_CASE("kd_loss input checking") {
    Tensor s = probs2(0.7, 0.3);
    Tensor t3({1, 1, 3});
    CHECK_THROWS_AS(kd_loss(s, t3, 0, KDLossConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(kd_loss(s, s, 5, KDLossConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(kd_loss(s, s, 0, KDLossConfig{1.5}), std::invalid_argument);
}

TEST_CASE("kd tape loss agrees with the scalar form on softmaxed logits") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor logits({1, 1, 4});
        Tensor teacher({1, 1, 4});
        for (double& v : logits.v) v = dist(rng);
        double mx = -1e9, sum = 0.0;
        for (double& v : teacher.v) v = dist(rng);
        for (double v : teacher.v) mx = std::max(mx, v);
        for (double& v : teacher.v) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : teacher.v) v /= sum;

        Tape tape;
        Tape::NodeId s = tape.leaf(logits, true);
        Tape::NodeId loss = kd_loss_node(tape, s, teacher, 1, KDLossConfig{0.35});

        Tape probe;
        Tensor sprobs = probe.value(probe.softmax(probe.leaf(logits)));
        double expect = kd_loss(sprobs, teacher, 1, KDLossConfig{0.35});
        CHECK(rel_err(tape.value(loss).v[0], expect) < 1e-12);
    }
}

TEST_CASE("kd objective gradients match finite differences on 100 random nets") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> hidden(3, 16);
    std::uniform_int_distribution<int> blocks(0, 1);
    const double fd_step = 1e-5;
    double worst = 0.0;

    for (int trial = 0; trial < 100; ++trial) {
        int b = blocks(rng);
        NetworkGraph g = b == 0 ? build_residual_mlp(1, hidden(rng), 3, 2)
                                : build_residual_mlp(2, hidden(rng) / 2 + 2, 3, 2);
        ParamSet p = init_params(g, 900 + trial);
        Tensor x({1, 1, 2});
        std::normal_distribution<double> dist(0.0, 1.0);
        x.v = {dist(rng), dist(rng)};
        int label = static_cast<int>(rng() % 3);

        Tensor teacher({1, 1, 3});
        for (double& v : teacher.v) v = dist(rng);
        double mx = *std::max_element(teacher.v.begin(), teacher.v.end());
        double sum = 0.0;
        for (double& v : teacher.v) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : teacher.v) v /= sum;

        KDLossConfig cfg{0.35};
        auto loss_at = [&]() {
            ForwardPass pass = forward(g, p, x, false);
            Tape::NodeId loss = kd_loss_node(*pass.tape, pass.output, teacher, label, cfg);
            return pass.tape->value(loss).v[0];
        };

        ForwardPass pass = forward(g, p, x);
        Tape::NodeId loss = kd_loss_node(*pass.tape, pass.output, teacher, label, cfg);
        pass.tape->backward(loss);
        ParamSet analytic = collect_gradients(pass);

        for (auto& [id, w] : p.layer) {
            const Tensor& grad = analytic.layer.at(id);
            for (size_t i = 0; i < w.v.size(); ++i) {
                double keep = w.v[i];
                w.v[i] = keep + fd_step;
                double up = loss_at();
                w.v[i] = keep - fd_step;
                double down = loss_at();
                w.v[i] = keep;
                worst = std::max(worst, rel_err(grad.v[i], (up - down) / (2 * fd_step)));
            }
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("no gradient path reaches the teacher, but its values move the loss") {
    NetworkGraph g = build_residual_mlp(1, 6, 3, 2);
    ParamSet p = init_params(g, 4);
    Tensor x({1, 1, 2});
    x.v = {0.3, -0.8};

    Tensor t1({1, 1, 3});
    t1.v = {0.2, 0.5, 0.3};
    Tensor t2({1, 1, 3});
    t2.v = {0.6, 0.2, 0.2};

    double l1, l2;
    {
        ForwardPass pass = forward(g, p, x);
        Tape::NodeId loss = kd_loss_node(*pass.tape, pass.output, t1, 0, KDLossConfig{0.5});
        l1 = pass.tape->value(loss).v[0];
        pass.tape->backward(loss);

        // The only gradient-tracked leaves are the student's parameters.
        std::set<Tape::NodeId> student_leaves;
        for (const auto& [id, node] : pass.layer_params) student_leaves.insert(node);
        for (Tape::NodeId n = 0; n < static_cast<Tape::NodeId>(pass.tape->node_count()); ++n) {
            if (pass.tape->is_leaf(n) && pass.tape->requires_grad(n))
                CHECK(student_leaves.count(n) == 1);
        }
    }
    {
        ForwardPass pass = forward(g, p, x);
        Tape::NodeId loss = kd_loss_node(*pass.tape, pass.output, t2, 0, KDLossConfig{0.5});
        l2 = pass.tape->value(loss).v[0];
    }
    CHECK(l1 != l2);
}

TEST_CASE("pretrain: zero epochs returns the untouched initialization") {
    NetworkGraph g = build_residual_mlp(2, 8, 3, 2);
    Dataset data = make_spiral(60, 3, 1);
    ParamSet p0 = pretrain(g, data, 0, 0.1, 9);
    CHECK(params_equal(p0, init_params(g, 9)));
}

TEST_CASE("pretrain: identical seeds give identical params") {
    NetworkGraph g = build_residual_mlp(2, 8, 3, 2);
    Dataset data = make_spiral(90, 3, 1);
    ParamSet a = pretrain(g, data, 10, 0.1, 7);
    ParamSet b = pretrain(g, data, 10, 0.1, 7);
    CHECK(params_equal(a, b));
    ParamSet c = pretrain(g, data, 10, 0.1, 8);
    CHECK(!params_equal(a, c));
}

TEST_CASE("pretrain reaches 0.95 train accuracy on a separable task") {
    NetworkGraph g = build_residual_mlp(1, 8, 2, 2);
    Dataset data = make_blobs(120, 2, 3);
    ParamSet p = pretrain(g, data, 200, 0.1, 5);
    CHECK(eval_accuracy(g, p, data) >= 0.95);
}

TEST_CASE("alteration schedule: 9 skips, alpha 3, 30 epochs") {
    NetworkGraph teacher = build_residual_mlp(9, 8, 3, 2);
    Dataset data = make_spiral(90, 3, 2);
    ParamSet tp = pretrain(teacher, data, 30, 0.08, 11);

    TrainPlan plan;
    plan.alpha = 3;
    plan.total_epochs = 30;
    plan.mode = AlterMode::Remove;
    plan.lr = 0.05;
    plan.seed = 11;

    TrainReport report = train_hardware_aware(teacher, tp, teacher, tp, plan, data);
    std::vector<int> expect = {3, 6, 9, 12, 15, 18, 21, 24, 27};
    CHECK(report.alteration_epochs == expect);
    REQUIRE(report.epochs.size() == 30);
    CHECK(report.epochs[26].epoch == 26);
    CHECK(report.epochs[26].skips_remaining > 0);
    CHECK(report.epochs[27].skips_remaining == 0);
    CHECK(report.final_graph.skips.empty());

    // skips_remaining never increases under Remove
    for (size_t i = 1; i < report.epochs.size(); ++i)
        CHECK(report.epochs[i].skips_remaining <= report.epochs[i - 1].skips_remaining);
}

TEST_CASE("alpha 1 shortener splits one original skip per epoch") {
    Dataset data = make_spiral(30, 3, 3);
    NetworkGraph student = build_residual_mlp(5, 6, 3, 2); // 5 skips, span 2 each
    ParamSet sp = init_params(student, 21);

    TrainPlan plan;
    plan.alpha = 1;
    plan.total_epochs = 6;
    plan.mode = AlterMode::Shorten;
    plan.lr = 0.02;
    plan.seed = 21;

    TrainReport report = train_hardware_aware(student, sp, student, sp, plan, data);
    CHECK(report.alteration_epochs == std::vector<int>{1, 2, 3, 4, 5});
    CHECK(report.final_graph.max_skip_span() == 1);
    CHECK(report.final_graph.skips.size() == 10);

    // spans never increase under Shorten
    for (size_t i = 1; i < report.epochs.size(); ++i)
        CHECK(report.epochs[i].max_span <= report.epochs[i - 1].max_span);
}

TEST_CASE("total_epochs below alpha performs zero alterations") {
    NetworkGraph g = build_residual_mlp(3, 6, 3, 2);
    ParamSet p = init_params(g, 2);
    Dataset data = make_spiral(30, 3, 4);

    TrainPlan plan;
    plan.alpha = 5;
    plan.total_epochs = 4;
    plan.mode = AlterMode::Remove;
    plan.seed = 2;

    TrainReport report = train_hardware_aware(g, p, g, p, plan, data);
    CHECK(report.alteration_epochs.empty());
    CHECK(report.final_graph.skips.size() == 3);
    CHECK(!report.warnings.empty());
}

TEST_CASE("teacher params are bit-identical before and after training") {
    NetworkGraph g = build_residual_mlp(2, 6, 3, 2);
    Dataset data = make_spiral(45, 3, 5);
    ParamSet tp = pretrain(g, data, 20, 0.08, 31);
    ParamSet snapshot = tp;

    TrainPlan plan;
    plan.alpha = 2;
    plan.total_epochs = 6;
    plan.seed = 31;
    train_hardware_aware(g, tp, g, tp, plan, data);
    CHECK(params_equal(tp, snapshot));
}

TEST_CASE("same seed, same trajectory, bit-identical") {
    NetworkGraph g = build_residual_mlp(3, 6, 3, 2);
    Dataset data = make_spiral(60, 3, 6);
    ParamSet tp = pretrain(g, data, 15, 0.08, 13);

    TrainPlan plan;
    plan.alpha = 2;
    plan.total_epochs = 8;
    plan.seed = 13;

    TrainReport a = train_hardware_aware(g, tp, g, tp, plan, data);
    TrainReport b = train_hardware_aware(g, tp, g, tp, plan, data);
    REQUIRE(a.epochs.size() == b.epochs.size());
    for (size_t i = 0; i < a.epochs.size(); ++i) {
        CHECK(a.epochs[i].train_loss == b.epochs[i].train_loss);
        CHECK(a.epochs[i].eval_accuracy == b.epochs[i].eval_accuracy);
    }
    CHECK(params_equal(a.final_params, b.final_params));
}

TEST_CASE("plan validation rejects bad fields") {
    NetworkGraph g = build_residual_mlp(2, 6, 3, 2);
    std::vector<std::string> warnings;
    TrainPlan plan;
    plan.alpha = 0;
    CHECK_THROWS_AS(validate_plan(plan, g, warnings), std::invalid_argument);
    plan.alpha = 1;
    plan.lr = 0.0;
    CHECK_THROWS_AS(validate_plan(plan, g, warnings), std::invalid_argument);
    plan.lr = 0.1;
    plan.loss.beta = 2.0;
    CHECK_THROWS_AS(validate_plan(plan, g, warnings), std::invalid_argument);
}

TEST_CASE("empty dataset is rejected") {
    NetworkGraph g = build_residual_mlp(2, 6, 3, 2);
    ParamSet p = init_params(g, 1);
    Dataset empty;
    TrainPlan plan;
    CHECK_THROWS_AS(train_hardware_aware(g, p, g, p, plan, empty), std::invalid_argument);
}

TEST_CASE("quantized student trains without divergence") {
    NetworkGraph g = build_residual_mlp(2, 8, 3, 2);
    Dataset data = make_spiral(60, 3, 8);
    ParamSet tp = pretrain(g, data, 30, 0.08, 17);

    TrainPlan plan;
    plan.alpha = 2;
    plan.total_epochs = 6;
    plan.quantize_student = QuantSpec{8, 3};
    plan.seed = 17;

    TrainReport report = train_hardware_aware(g, tp, g, tp, plan, data);
    for (const auto& e : report.epochs) CHECK(std::isfinite(e.train_loss));
}

TEST_CASE("report serialization carries the trajectory and final model") {
    NetworkGraph g = build_residual_mlp(2, 6, 3, 2);
    Dataset data = make_spiral(30, 3, 9);
    ParamSet p = init_params(g, 3);
    TrainPlan plan;
    plan.alpha = 2;
    plan.total_epochs = 4;
    plan.seed = 3;
    TrainReport report = train_hardware_aware(g, p, g, p, plan, data);

    auto j = train_report_to_json(report);
    CHECK(j.at("epochs").size() == 4);
    CHECK(j.at("final_graph").at("layers").size() == report.final_graph.layers.size());

    ParamSet back = params_from_json(j.at("final_params"));
    CHECK(params_equal(back, report.final_params));
}
