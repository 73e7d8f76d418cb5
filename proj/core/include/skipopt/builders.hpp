#pragma once

#include "skipopt/graph.hpp"

namespace skipopt {

/// CIFAR-family ResNet: stem conv, then 3 stages of (depth-2)/6 basic blocks
/// with filter widths {base, 2*base, 4*base}. Stage-boundary blocks downsample
/// with stride 2 and a Projection1x1 skip; all other skips are identity.
/// Throws std::invalid_argument unless depth = 6k+2.
/// ResNet-110 filter widths are not universally documented; defaults follow
/// the standard CIFAR family {16,32,64}.
NetworkGraph build_resnet_basic(int depth, int base_filters = 16,
                                TensorShape input = {32, 32, 3});

/// ResNet-50-style bottleneck network: stem 7x7/2 conv, stage block counts
/// [3,4,6,3], each block 1x1 -> 3x3 -> 1x1 with the skip spanning the three
/// convs. The first block of every stage carries a Projection1x1 skip.
/// Pooling and the classifier head are not modeled.
NetworkGraph build_resnet_bottleneck(TensorShape input = {224, 224, 3});

/// QuartzNet-style 1D network (convs modeled with height 1): stem conv, then
/// n_blocks residual blocks, each a run of `span` conv(+ReLU) sets with an
/// identity skip over the whole run.
NetworkGraph build_quartznet(int n_blocks, int span,
                             TensorShape input = {1, 64, 32}, int kernel = 3,
                             int channels = 32);

/// Residual multilayer perceptron for the synthetic 2D tasks: Dense stem,
/// n_blocks of [Dense -> ReLU -> Dense -> Add -> ReLU] with identity skips,
/// Dense classifier head.
NetworkGraph build_residual_mlp(int n_blocks, int hidden, int classes,
                                int in_features = 2);

/// One calibration-unit residual block (conv3(f) -> ReLU -> conv3(f) -> Add
/// -> ReLU) behind a 1x1 unit stem so the skip has a producing layer.
NetworkGraph build_basic_block(int filters, int kernel = 3,
                               TensorShape input = {32, 32, 16});

} // namespace skipopt
