#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <skipopt/builders.hpp>
#include <skipopt/graph_json.hpp>

using namespace skipopt;

namespace {

// Counting oracle: blocks are recognized structurally, independent of the
// builders' own bookkeeping.
int count_add_layers(const NetworkGraph& g) {
    int n = 0;
    for (const auto& l : g.layers)
        if (l.op == LayerOp::Add) ++n;
    return n;
}

int count_trunk_convs(const NetworkGraph& g) {
    int n = 0;
    for (const auto& l : g.layers)
        if (l.op == LayerOp::Conv) ++n;
    return n;
}

} // namespace

TEST_CASE("resnet basic: skip counts follow the 3-stage block structure") {
    // depth 20 -> 3 stages x 3 blocks
    auto g20 = build_resnet_basic(20);
    CHECK(g20.skips.size() == 9);
    CHECK(count_add_layers(g20) == 9);

    auto g8 = build_resnet_basic(8, 16);
    CHECK(g8.skips.size() == 3);
    CHECK(count_add_layers(g8) == 3);

    CHECK_THROWS_AS(build_resnet_basic(21), std::invalid_argument);
    CHECK_THROWS_WITH_AS(build_resnet_basic(21), doctest::Contains("6k+2"),
                         std::invalid_argument);
}

TEST_CASE("resnet basic: stage-boundary skips are strided projections") {
    auto g = build_resnet_basic(20);
    int projections = 0;
    for (const auto& s : g.skips) {
        if (s.kind == SkipKind::Projection1x1) {
            ++projections;
            CHECK(s.proj_stride == 2);
        }
        CHECK(s.span == 2);
    }
    CHECK(projections == 2); // stages 2 and 3
}

TEST_CASE("resnet bottleneck: 16 skips, 53 conv groups, identity non-first blocks") {
    auto g = build_resnet_bottleneck();
    CHECK(g.skips.size() == 16);
    CHECK(count_add_layers(g) == 16);

    // 1 stem + 3 convs per block + 4 projection convs
    CHECK(count_trunk_convs(g) == 1 + 3 * 16);
    CHECK(g.conv_group_count() == 53);
    CHECK(g.projection_skip_count() == 4);

    // First block of each stage projects; the rest are identity.
    int seen = 0;
    for (const auto& s : g.skips) {
        bool first_of_stage = seen == 0 || seen == 3 || seen == 7 || seen == 13;
        CHECK(s.kind == (first_of_stage ? SkipKind::Projection1x1 : SkipKind::Identity));
        CHECK(s.span == 3);
        ++seen;
    }
}

TEST_CASE("quartznet: n blocks of the requested span") {
    auto g = build_quartznet(10, 5);
    CHECK(g.skips.size() == 10);
    for (const auto& s : g.skips) CHECK(s.span == 5);

    auto g55 = build_quartznet(5, 5);
    CHECK(g55.skips.size() == 5);

    auto g11 = build_quartznet(1, 1);
    CHECK(g11.skips.size() == 1);
    CHECK(g11.skips[0].span == 1);

    // 1D modeling: every activation keeps height 1
    for (const auto& l : g.layers) {
        CHECK(l.in_shape.height == 1);
        CHECK(l.out_shape.height == 1);
    }
}

TEST_CASE("validate: freshly built graphs are clean") {
    CHECK(validate(build_resnet_basic(20)).empty());
    CHECK(validate(build_resnet_bottleneck()).empty());
    CHECK(validate(build_quartznet(10, 5)).empty());
    CHECK(validate(build_residual_mlp(6, 16, 3)).empty());
    CHECK(validate(build_basic_block(16)).empty());
}

TEST_CASE("validate: property over the builder parameter grid") {
    for (int depth : {8, 20, 32, 44, 56, 110}) {
        auto g = build_resnet_basic(depth);
        CAPTURE(depth);
        CHECK(validate(g).empty());
        CHECK(static_cast<int>(g.skips.size()) == 3 * (depth - 2) / 6);
    }
    for (int n = 1; n <= 12; ++n) {
        for (int s = 1; s <= 6; ++s) {
            auto g = build_quartznet(n, s);
            CAPTURE(n);
            CAPTURE(s);
            CHECK(validate(g).empty());
            CHECK(static_cast<int>(g.skips.size()) == n);
        }
    }
}

TEST_CASE("validate: identity skip across mismatched shapes is one violation") {
    auto g = build_resnet_basic(20);
    // Point the second stage's projection skip at identity: shapes no longer
    // line up.
    for (auto& s : g.skips) {
        if (s.kind == SkipKind::Projection1x1) {
            s.kind = SkipKind::Identity;
            break;
        }
    }
    auto violations = validate(g);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].message == "identity skip across mismatched shapes");
    CHECK(violations[0].where.find("skip") == 0);
}

TEST_CASE("validate: an Add with one predecessor is flagged") {
    auto g = build_resnet_basic(8);
    SkipEdge dropped = g.skips.front();
    g.skips.erase(g.skips.begin());
    auto violations = validate(g);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].where == "layer " + std::to_string(dropped.sink));
    CHECK(violations[0].message.find("one predecessor") != std::string::npos);
}

TEST_CASE("skip ordering invariant holds for every builder") {
    for (const auto& g :
         {build_resnet_basic(56), build_resnet_bottleneck(), build_quartznet(12, 6),
          build_residual_mlp(9, 16, 3)}) {
        for (size_t i = 1; i < g.skips.size(); ++i) {
            CHECK(*g.layer_index(g.skips[i - 1].source) <
                  *g.layer_index(g.skips[i].source));
        }
    }
}

TEST_CASE("builders are deterministic: same parameters, same structure") {
    auto a = build_resnet_basic(32);
    auto b = build_resnet_basic(32);
    CHECK(graph_to_json(a) == graph_to_json(b));
}

TEST_CASE("json round-trip is lossless") {
    for (const auto& g :
         {build_resnet_basic(20), build_resnet_bottleneck(), build_quartznet(10, 5),
          build_residual_mlp(6, 16, 3)}) {
        auto j = graph_to_json(g);
        auto back = graph_from_json(j);
        CHECK(graph_to_json(back) == j);
        CHECK(validate(back).empty());
    }
}
