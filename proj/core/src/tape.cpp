#include "skipopt/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace skipopt {

namespace {

// TF-style SAME padding: output dim ceil(in/stride), window anchored so the
// total padding splits evenly with the extra row/column at the bottom/right.
struct SamePad {
    int out_h, out_w, pad_top, pad_left;
};

SamePad same_pad(int h, int w, int k, int stride) {
    SamePad p{};
    p.out_h = (h + stride - 1) / stride;
    p.out_w = (w + stride - 1) / stride;
    int pad_h = std::max((p.out_h - 1) * stride + k - h, 0);
    int pad_w = std::max((p.out_w - 1) * stride + k - w, 0);
    p.pad_top = pad_h / 2;
    p.pad_left = pad_w / 2;
    return p;
}

} // namespace

Tape::NodeId Tape::push(Node node) {
    node.grad = Tensor(node.value.dims);
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

Tape::NodeId Tape::conv2d(NodeId x, NodeId w, int stride) {
    const Tensor& xin = nodes_[x].value;
    const Tensor& wt = nodes_[w].value;
    if (xin.dims.size() != 3) throw std::invalid_argument("conv2d: input must be (H,W,C)");
    if (wt.dims.size() != 4) throw std::invalid_argument("conv2d: weight must be (K,K,Cin,Cout)");
    int h = xin.dims[0], wdt = xin.dims[1], cin = xin.dims[2];
    int k = wt.dims[0], cout = wt.dims[3];
    if (wt.dims[1] != k || wt.dims[2] != cin || k % 2 == 0)
        throw std::invalid_argument("conv2d: weight shape mismatch (odd K, Cin must agree)");

    SamePad p = same_pad(h, wdt, k, stride);
    Node n;
    n.op = Op::Conv2d;
    n.a = x;
    n.b = w;
    n.stride = stride;
    n.requires_grad = nodes_[x].requires_grad || nodes_[w].requires_grad;
    n.value = Tensor({p.out_h, p.out_w, cout});
    for (int oy = 0; oy < p.out_h; ++oy) {
        for (int ox = 0; ox < p.out_w; ++ox) {
            for (int ky = 0; ky < k; ++ky) {
                int iy = oy * stride - p.pad_top + ky;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < k; ++kx) {
                    int ix = ox * stride - p.pad_left + kx;
                    if (ix < 0 || ix >= wdt) continue;
                    const double* xrow = &xin.v[(static_cast<size_t>(iy) * wdt + ix) * cin];
                    const double* wrow = &wt.v[((static_cast<size_t>(ky) * k + kx) * cin) * cout];
                    double* orow = &n.value.v[(static_cast<size_t>(oy) * p.out_w + ox) * cout];
                    for (int ci = 0; ci < cin; ++ci)
                        for (int co = 0; co < cout; ++co)
                            orow[co] += xrow[ci] * wrow[ci * cout + co];
                }
            }
        }
    }
    return push(std::move(n));
}

Tape::NodeId Tape::dense(NodeId x, NodeId w) {
    const Tensor& xin = nodes_[x].value;
    const Tensor& wt = nodes_[w].value;
    if (wt.dims.size() != 2) throw std::invalid_argument("dense: weight must be (in, out)");
    if (static_cast<size_t>(wt.dims[0]) != xin.size())
        throw std::invalid_argument("dense: weight rows must match flattened input size");
    int out = wt.dims[1];
    Node n;
    n.op = Op::Dense;
    n.a = x;
    n.b = w;
    n.requires_grad = nodes_[x].requires_grad || nodes_[w].requires_grad;
    n.value = Tensor({1, 1, out});
    for (size_t i = 0; i < xin.size(); ++i) {
        double xi = xin.v[i];
        const double* wrow = &wt.v[i * out];
        for (int j = 0; j < out; ++j) n.value.v[j] += xi * wrow[j];
    }
    return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId x) {
    Node n;
    n.op = Op::ReLU;
    n.a = x;
    n.requires_grad = nodes_[x].requires_grad;
    n.value = nodes_[x].value;
    for (double& v : n.value.v) v = std::max(0.0, v);
    return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    if (!nodes_[a].value.same_dims(nodes_[b].value))
        throw std::invalid_argument("add: operand shape mismatch");
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    n.value = nodes_[a].value;
    for (size_t i = 0; i < n.value.v.size(); ++i) n.value.v[i] += nodes_[b].value.v[i];
    return push(std::move(n));
}

Tape::NodeId Tape::fake_quantize(NodeId x, const QuantSpec& spec) {
    Node n;
    n.op = Op::FakeQuantize;
    n.a = x;
    n.qspec = spec;
    n.requires_grad = nodes_[x].requires_grad;
    n.value = skipopt::fake_quantize(nodes_[x].value, spec);
    return push(std::move(n));
}

Tape::NodeId Tape::softmax(NodeId x) {
    Node n;
    n.op = Op::Softmax;
    n.a = x;
    n.requires_grad = nodes_[x].requires_grad;
    n.value = nodes_[x].value;
    double mx = *std::max_element(n.value.v.begin(), n.value.v.end());
    double sum = 0.0;
    for (double& v : n.value.v) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : n.value.v) v /= sum;
    return push(std::move(n));
}

Tape::NodeId Tape::cross_entropy_with_softmax(NodeId logits, int label) {
    const Tensor& x = nodes_[logits].value;
    if (label < 0 || static_cast<size_t>(label) >= x.size())
        throw std::invalid_argument("cross_entropy_with_softmax: label out of range");
    double mx = *std::max_element(x.v.begin(), x.v.end());
    double lse = 0.0;
    for (double v : x.v) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    Node n;
    n.op = Op::CrossEntropySoftmax;
    n.a = logits;
    n.label = label;
    n.requires_grad = nodes_[logits].requires_grad;
    n.value = Tensor::scalar(lse - x.v[label]);
    return push(std::move(n));
}

Tape::NodeId Tape::mse(NodeId a, NodeId b) {
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (!ta.same_dims(tb)) throw std::invalid_argument("mse: operand shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < ta.size(); ++i) {
        double d = ta.v[i] - tb.v[i];
        acc += d * d;
    }
    Node n;
    n.op = Op::Mse;
    n.a = a;
    n.b = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    n.value = Tensor::scalar(acc / static_cast<double>(ta.size()));
    return push(std::move(n));
}

Tape::NodeId Tape::mean(NodeId x) {
    const Tensor& t = nodes_[x].value;
    double acc = 0.0;
    for (double v : t.v) acc += v;
    Node n;
    n.op = Op::Mean;
    n.a = x;
    n.requires_grad = nodes_[x].requires_grad;
    n.value = Tensor::scalar(acc / static_cast<double>(t.size()));
    return push(std::move(n));
}

Tape::NodeId Tape::axpby(double ca, NodeId a, double cb, NodeId b) {
    if (!nodes_[a].value.same_dims(nodes_[b].value))
        throw std::invalid_argument("axpby: operand shape mismatch");
    Node n;
    n.op = Op::Axpby;
    n.a = a;
    n.b = b;
    n.ca = ca;
    n.cb = cb;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    n.value = nodes_[a].value;
    for (size_t i = 0; i < n.value.v.size(); ++i)
        n.value.v[i] = ca * nodes_[a].value.v[i] + cb * nodes_[b].value.v[i];
    return push(std::move(n));
}

void Tape::backward(NodeId loss) {
    if (backward_done_) throw std::logic_error("backward: tape already consumed");
    if (nodes_[loss].value.size() != 1)
        throw std::invalid_argument("backward: loss must be scalar");
    backward_done_ = true;
    nodes_[loss].grad.v[0] = 1.0;

    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.requires_grad || id > loss) continue;
        bool any = false;
        for (double g : n.grad.v)
            if (g != 0.0) {
                any = true;
                break;
            }
        if (!any) continue;

        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Conv2d: {
                Node& xn = nodes_[n.a];
                Node& wn = nodes_[n.b];
                const Tensor& xin = xn.value;
                const Tensor& wt = wn.value;
                int h = xin.dims[0], wdt = xin.dims[1], cin = xin.dims[2];
                int k = wt.dims[0], cout = wt.dims[3];
                SamePad p = same_pad(h, wdt, k, n.stride);
                for (int oy = 0; oy < p.out_h; ++oy) {
                    for (int ox = 0; ox < p.out_w; ++ox) {
                        const double* grow =
                            &n.grad.v[(static_cast<size_t>(oy) * p.out_w + ox) * cout];
                        for (int ky = 0; ky < k; ++ky) {
                            int iy = oy * n.stride - p.pad_top + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                int ix = ox * n.stride - p.pad_left + kx;
                                if (ix < 0 || ix >= wdt) continue;
                                size_t xoff = (static_cast<size_t>(iy) * wdt + ix) * cin;
                                size_t woff = (static_cast<size_t>(ky) * k + kx) * cin * cout;
                                for (int ci = 0; ci < cin; ++ci) {
                                    double xi = xin.v[xoff + ci];
                                    double dx = 0.0;
                                    for (int co = 0; co < cout; ++co) {
                                        double g = grow[co];
                                        if (wn.requires_grad)
                                            wn.grad.v[woff + ci * cout + co] += xi * g;
                                        dx += wt.v[woff + ci * cout + co] * g;
                                    }
                                    if (xn.requires_grad) xn.grad.v[xoff + ci] += dx;
                                }
                            }
                        }
                    }
                }
                break;
            }
            case Op::Dense: {
                Node& xn = nodes_[n.a];
                Node& wn = nodes_[n.b];
                int out = wn.value.dims[1];
                for (size_t i = 0; i < xn.value.size(); ++i) {
                    double xi = xn.value.v[i];
                    double dx = 0.0;
                    for (int j = 0; j < out; ++j) {
                        double g = n.grad.v[j];
                        if (wn.requires_grad) wn.grad.v[i * out + j] += xi * g;
                        dx += wn.value.v[i * out + j] * g;
                    }
                    if (xn.requires_grad) xn.grad.v[i] += dx;
                }
                break;
            }
            case Op::ReLU: {
                Node& xn = nodes_[n.a];
                if (xn.requires_grad)
                    for (size_t i = 0; i < n.grad.v.size(); ++i)
                        if (xn.value.v[i] > 0.0) xn.grad.v[i] += n.grad.v[i];
                break;
            }
            case Op::Add: {
                Node& an = nodes_[n.a];
                Node& bn = nodes_[n.b];
                for (size_t i = 0; i < n.grad.v.size(); ++i) {
                    if (an.requires_grad) an.grad.v[i] += n.grad.v[i];
                    if (bn.requires_grad) bn.grad.v[i] += n.grad.v[i];
                }
                break;
            }
            case Op::FakeQuantize: {
                // Straight-through estimator: gradient passes unchanged.
                Node& xn = nodes_[n.a];
                if (xn.requires_grad)
                    for (size_t i = 0; i < n.grad.v.size(); ++i) xn.grad.v[i] += n.grad.v[i];
                break;
            }
            case Op::Softmax: {
                Node& xn = nodes_[n.a];
                if (xn.requires_grad) {
                    double dot = 0.0;
                    for (size_t i = 0; i < n.value.v.size(); ++i)
                        dot += n.grad.v[i] * n.value.v[i];
                    for (size_t i = 0; i < n.value.v.size(); ++i)
                        xn.grad.v[i] += n.value.v[i] * (n.grad.v[i] - dot);
                }
                break;
            }
            case Op::CrossEntropySoftmax: {
                Node& xn = nodes_[n.a];
                if (xn.requires_grad) {
                    const Tensor& x = xn.value;
                    double mx = *std::max_element(x.v.begin(), x.v.end());
                    double sum = 0.0;
                    for (double v : x.v) sum += std::exp(v - mx);
                    double g = n.grad.v[0];
                    for (size_t i = 0; i < x.size(); ++i) {
                        double p = std::exp(x.v[i] - mx) / sum;
                        xn.grad.v[i] +=
                            g * (p - (static_cast<int>(i) == n.label ? 1.0 : 0.0));
                    }
                }
                break;
            }
            case Op::Mse: {
                Node& an = nodes_[n.a];
                Node& bn = nodes_[n.b];
                double scale = 2.0 * n.grad.v[0] / static_cast<double>(an.value.size());
                for (size_t i = 0; i < an.value.size(); ++i) {
                    double d = scale * (an.value.v[i] - bn.value.v[i]);
                    if (an.requires_grad) an.grad.v[i] += d;
                    if (bn.requires_grad) bn.grad.v[i] -= d;
                }
                break;
            }
            case Op::Mean: {
                Node& xn = nodes_[n.a];
                if (xn.requires_grad) {
                    double g = n.grad.v[0] / static_cast<double>(xn.value.size());
                    for (double& d : xn.grad.v) d += g;
                }
                break;
            }
            case Op::Axpby: {
                Node& an = nodes_[n.a];
                Node& bn = nodes_[n.b];
                for (size_t i = 0; i < n.grad.v.size(); ++i) {
                    if (an.requires_grad) an.grad.v[i] += n.ca * n.grad.v[i];
                    if (bn.requires_grad) bn.grad.v[i] += n.cb * n.grad.v[i];
                }
                break;
            }
        }
    }
}

} // namespace skipopt
