#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnet {

// Dense row-major n-d array. Instantiated with float for training and
// double for the gradient-check suites.
template <class Real>
struct TensorT {
    std::vector<int> shape;
    std::vector<Real> data;

    TensorT() = default;

    explicit TensorT(std::vector<int> s, Real fill = Real(0)) : shape(std::move(s)) {
        std::size_t n = 1;
        for (int e : shape) {
            if (e < 1) throw std::invalid_argument("tensor extent must be >= 1, got " + std::to_string(e));
            n *= static_cast<std::size_t>(e);
        }
        data.assign(n, fill);
    }

    TensorT(std::vector<int> s, std::vector<Real> d) : shape(std::move(s)), data(std::move(d)) {
        std::size_t n = 1;
        for (int e : shape) {
            if (e < 1) throw std::invalid_argument("tensor extent must be >= 1, got " + std::to_string(e));
            n *= static_cast<std::size_t>(e);
        }
        if (n != data.size())
            throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                        " does not match shape product " + std::to_string(n));
    }

    int rank() const { return static_cast<int>(shape.size()); }
    int extent(int d) const { return shape[static_cast<std::size_t>(d)]; }
    std::size_t size() const { return data.size(); }

    // rank-3 [c,i,j]
    Real& at(int c, int i, int j) {
        return data[(static_cast<std::size_t>(c) * shape[1] + i) * shape[2] + j];
    }
    const Real& at(int c, int i, int j) const {
        return data[(static_cast<std::size_t>(c) * shape[1] + i) * shape[2] + j];
    }
    // rank-4 [o,c,u,v]
    Real& at(int o, int c, int u, int v) {
        return data[((static_cast<std::size_t>(o) * shape[1] + c) * shape[2] + u) * shape[3] + v];
    }
    const Real& at(int o, int c, int u, int v) const {
        return data[((static_cast<std::size_t>(o) * shape[1] + c) * shape[2] + u) * shape[3] + v];
    }
    // rank-2 [r,c]
    Real& at(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
    const Real& at(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

inline TensorD to_double(const Tensor& t) {
    TensorD r;
    r.shape = t.shape;
    r.data.assign(t.data.begin(), t.data.end());
    return r;
}

inline Tensor to_float(const TensorD& t) {
    Tensor r;
    r.shape = t.shape;
    r.data.reserve(t.data.size());
    for (double v : t.data) r.data.push_back(static_cast<float>(v));
    return r;
}

namespace detail {

inline std::string shape_str(const std::vector<int>& s) {
    std::string r = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) r += ",";
        r += std::to_string(s[i]);
    }
    return r + "]";
}

}  // namespace detail

// Output spatial extent of a valid (unpadded) convolution.
inline int conv_out_extent(int in, int k, int stride) { return (in - k) / stride + 1; }

// Valid convolution, out[o,i,j] = bias[o] + sum_{c,u,v} in[c,i*s+u,j*s+v] * k[o,c,u,v].
template <class Real>
TensorT<Real> conv2d_forward(const TensorT<Real>& input, const TensorT<Real>& kernels,
                             std::span<const Real> bias, int stride) {
    if (input.rank() != 3)
        throw std::invalid_argument("conv2d: input rank must be 3 (C,H,W), got " + detail::shape_str(input.shape));
    if (kernels.rank() != 4)
        throw std::invalid_argument("conv2d: kernel rank must be 4 (O,C,k,k), got " + detail::shape_str(kernels.shape));
    const int c_in = input.extent(0), h = input.extent(1), w = input.extent(2);
    const int c_out = kernels.extent(0), kc = kernels.extent(1), kh = kernels.extent(2), kw = kernels.extent(3);
    if (kc != c_in)
        throw std::invalid_argument("conv2d: kernel input-channel extent " + std::to_string(kc) +
                                    " != input channel extent " + std::to_string(c_in));
    if (kh != kw)
        throw std::invalid_argument("conv2d: kernel must be square, got " + std::to_string(kh) + "x" + std::to_string(kw));
    if (kh > h)
        throw std::invalid_argument("conv2d: kernel extent " + std::to_string(kh) + " exceeds input height " + std::to_string(h));
    if (kw > w)
        throw std::invalid_argument("conv2d: kernel extent " + std::to_string(kw) + " exceeds input width " + std::to_string(w));
    if (static_cast<int>(bias.size()) != c_out)
        throw std::invalid_argument("conv2d: bias length " + std::to_string(bias.size()) +
                                    " != output channel extent " + std::to_string(c_out));
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1, got " + std::to_string(stride));

    const int oh = conv_out_extent(h, kh, stride);
    const int ow = conv_out_extent(w, kw, stride);
    TensorT<Real> out({c_out, oh, ow});

    for (int o = 0; o < c_out; ++o) {
        Real* op = &out.at(o, 0, 0);
        const Real b = bias[static_cast<std::size_t>(o)];
        for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) op[i] = b;
        for (int c = 0; c < c_in; ++c) {
            for (int u = 0; u < kh; ++u) {
                for (int v = 0; v < kw; ++v) {
                    const Real kval = kernels.at(o, c, u, v);
                    for (int i = 0; i < oh; ++i) {
                        const Real* ip = &input.at(c, i * stride + u, v);
                        Real* orow = op + static_cast<std::size_t>(i) * ow;
                        for (int j = 0; j < ow; ++j) orow[j] += kval * ip[static_cast<std::size_t>(j) * stride];
                    }
                }
            }
        }
    }
    return out;
}

template <class Real>
struct Conv2dGrads {
    TensorT<Real> grad_input;
    TensorT<Real> grad_kernels;
    std::vector<Real> grad_bias;
};

// Exact adjoint of conv2d_forward w.r.t. sum(grad_out .* out).
template <class Real>
Conv2dGrads<Real> conv2d_backward(const TensorT<Real>& input, const TensorT<Real>& kernels, int stride,
                                  const TensorT<Real>& grad_out) {
    const int c_in = input.extent(0), h = input.extent(1), w = input.extent(2);
    const int c_out = kernels.extent(0), kh = kernels.extent(2), kw = kernels.extent(3);
    const int oh = conv_out_extent(h, kh, stride);
    const int ow = conv_out_extent(w, kw, stride);
    if (grad_out.rank() != 3 || grad_out.extent(0) != c_out || grad_out.extent(1) != oh || grad_out.extent(2) != ow)
        throw std::invalid_argument("conv2d_backward: grad_out shape " + detail::shape_str(grad_out.shape) +
                                    " != forward output shape [" + std::to_string(c_out) + "," +
                                    std::to_string(oh) + "," + std::to_string(ow) + "]");
    if (kernels.extent(1) != c_in)
        throw std::invalid_argument("conv2d_backward: kernel input-channel extent " + std::to_string(kernels.extent(1)) +
                                    " != input channel extent " + std::to_string(c_in));

    Conv2dGrads<Real> g;
    g.grad_input = TensorT<Real>(input.shape);
    g.grad_kernels = TensorT<Real>(kernels.shape);
    g.grad_bias.assign(static_cast<std::size_t>(c_out), Real(0));

    for (int o = 0; o < c_out; ++o) {
        const Real* gp = &grad_out.at(o, 0, 0);
        Real bacc = 0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) bacc += gp[i];
        g.grad_bias[static_cast<std::size_t>(o)] = bacc;

        for (int c = 0; c < c_in; ++c) {
            for (int u = 0; u < kh; ++u) {
                for (int v = 0; v < kw; ++v) {
                    const Real kval = kernels.at(o, c, u, v);
                    Real kacc = 0;
                    for (int i = 0; i < oh; ++i) {
                        const Real* grow = gp + static_cast<std::size_t>(i) * ow;
                        const Real* irow = &input.at(c, i * stride + u, v);
                        Real* xrow = &g.grad_input.at(c, i * stride + u, v);
                        for (int j = 0; j < ow; ++j) {
                            kacc += grow[j] * irow[static_cast<std::size_t>(j) * stride];
                            xrow[static_cast<std::size_t>(j) * stride] += kval * grow[j];
                        }
                    }
                    g.grad_kernels.at(o, c, u, v) = kacc;
                }
            }
        }
    }
    return g;
}

enum class ElementwiseOp { mul, add };

template <class Real>
TensorT<Real> elementwise(const TensorT<Real>& a, const TensorT<Real>& b, ElementwiseOp op) {
    if (!a.same_shape(b))
        throw std::invalid_argument("elementwise: shape mismatch " + detail::shape_str(a.shape) + " vs " +
                                    detail::shape_str(b.shape));
    TensorT<Real> r = a;
    if (op == ElementwiseOp::mul) {
        for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] *= b.data[i];
    } else {
        for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] += b.data[i];
    }
    return r;
}

template <class Real>
TensorT<Real> relu(const TensorT<Real>& a) {
    TensorT<Real> r = a;
    for (Real& v : r.data) v = v > Real(0) ? v : Real(0);
    return r;
}

// 1 where preact > 0, else 0 (exactly 0 at 0).
template <class Real>
TensorT<Real> relu_grad(const TensorT<Real>& preact) {
    TensorT<Real> r = preact;
    for (Real& v : r.data) v = v > Real(0) ? Real(1) : Real(0);
    return r;
}

// TNT1 file format: "TNT1\n", ASCII header "rank d0 ... dn\n", then
// little-endian float32 payload, row-major. Round-trips bit-exactly.
void write_tnt(const std::string& path, const Tensor& t);
Tensor read_tnt(const std::string& path);

}  // namespace tnet
