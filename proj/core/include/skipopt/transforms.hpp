#pragma once

#include <optional>
#include <vector>

#include "skipopt/graph.hpp"

namespace skipopt {

enum class AlterMode { Remove, Shorten };

struct RemoveResult {
    NetworkGraph graph;
    std::optional<SkipId> removed; // nullopt when the graph had no skips
};

struct ShortenResult {
    NetworkGraph graph;
    std::optional<SkipId> split;        // the skip that was split
    std::vector<SkipId> created_skips;  // span-1 replacements, input to output
    std::vector<LayerId> created_adds;  // intermediate Add layers inserted
};

/// Deletes the input-most skip: the edge goes away (a projection conv goes
/// with it) and its Add collapses to pass-through. Later skips that sourced
/// at the collapsed Add are re-sourced to its trunk predecessor. Returns the
/// graph unchanged when it has no skips.
RemoveResult remove_next_skip(const NetworkGraph& graph);

/// Splits the input-most skip of span > 1 into span span-1 skips, inserting
/// an Add after each bypassed parametric layer except the last (whose Add is
/// the original sink). Span-1 skips are passed over. A split skip becomes a
/// projection wherever its wrapped set changes the tensor shape, identity
/// otherwise.
ShortenResult shorten_next_skip(const NetworkGraph& graph);

/// Repeats the single-step pass for `mode` until fixed point.
NetworkGraph apply_all(const NetworkGraph& graph, AlterMode mode);

} // namespace skipopt
