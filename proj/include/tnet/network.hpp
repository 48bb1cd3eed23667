#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tnet/objective.hpp"
#include "tnet/rng.hpp"
#include "tnet/template_layer.hpp"
#include "tnet/tensor.hpp"

namespace tnet {

struct ConvSpec {
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
};

// Architecture description. Three base conv layers feed the template
// layer; two more conv layers, one fully connected stage and the two
// heads make up the classification network.
struct NetConfig {
    int in_channels = 3, in_h = 128, in_w = 128;
    std::vector<ConvSpec> base;  // conv1..3; base.back().out_channels = template count
    std::vector<ConvSpec> cls;   // conv4..5
    int fc_dim = 256;
    bool use_template_layer = true;

    int template_count() const { return base.back().out_channels; }

    // 128x128 input, template layer after conv3.
    static NetConfig desk(int templates = 27);
    // 64x64 input; same five-conv shape at half resolution.
    static NetConfig compact(int templates = 27);
    // 16x16 input, 3 templates; sized for gradient-check suites.
    static NetConfig mini();
};

struct LayerShape {
    int channels = 0, h = 0, w = 0;
};

struct ShapeInfo {
    std::vector<LayerShape> base_out;
    std::vector<LayerShape> cls_out;
    LayerShape template_in;  // output of the last base layer
    int flat_dim = 0;
};

ShapeInfo infer_shapes(const NetConfig& cfg);

std::string serialize_net_config(const NetConfig& cfg);
NetConfig parse_net_config(const std::string& text);
std::uint64_t net_config_hash(const NetConfig& cfg);

template <class Real>
struct ConvLayerT {
    TensorT<Real> kernels;  // [O, C, k, k]
    std::vector<Real> bias;
    int stride = 1;
};

template <class Real>
struct DenseT {
    TensorT<Real> w;  // [out, in]
    std::vector<Real> b;
};

template <class Real>
struct NetworkParamsT {
    NetConfig cfg;
    std::vector<ConvLayerT<Real>> base;
    std::vector<ConvLayerT<Real>> cls;
    DenseT<Real> fc;
    DenseT<Real> fg_head;    // 2 logits
    DenseT<Real> pose_head;  // 17 logits
    std::shared_ptr<const TemplateBankT<Real>> templates;  // fixed, never updated
};

using NetworkParams = NetworkParamsT<float>;

// Uniform zero-mean init scaled by 1/sqrt(fan_in); biases zero. Rejects a
// bank whose map count or spatial size disagrees with the base network.
template <class Real>
NetworkParamsT<Real> init_params(const NetConfig& cfg, std::shared_ptr<const TemplateBankT<Real>> bank,
                                 std::uint64_t seed);

template <class Real>
void validate_network(const NetworkParamsT<Real>& p);

template <class Real>
struct ForwardTraceT {
    TensorT<Real> input;
    std::vector<TensorT<Real>> base_pre, base_act;  // base_act.back() is zhat
    TensorT<Real> template_pre;                     // zhat .* T, the layer's rectifier input
    TensorT<Real> z;                                // template-layer output
    std::vector<TensorT<Real>> cls_pre, cls_act;
    std::vector<Real> fc_pre, fc_act;
    std::vector<Real> logits_c, logits_p;
    std::vector<Real> p_c, p_p;
};

template <class Real>
struct ParamGradsT {
    std::vector<ConvLayerT<Real>> base, cls;  // same shapes as the params, stride unused
    DenseT<Real> fc, fg_head, pose_head;
    TensorT<Real> grad_templates;  // verification only; the optimizer never reads it
};

// Flat view over every trainable parameter; template maps are excluded.
template <class Real>
struct ParamRef {
    std::string name;
    Real* data = nullptr;
    std::size_t size = 0;
};

template <class Real>
std::vector<ParamRef<Real>> trainable_refs(NetworkParamsT<Real>& p);
template <class Real>
std::vector<ParamRef<Real>> grad_refs(ParamGradsT<Real>& g);
template <class Real>
std::size_t trainable_parameter_count(const NetworkParamsT<Real>& p);

template <class Real>
std::vector<Real> dense_forward(const DenseT<Real>& d, std::span<const Real> in);

template <class Real>
std::vector<Real> softmax(std::span<const Real> logits);

// Stabilized softmax over W z + b.
template <class Real>
std::vector<Real> softmax_head(const DenseT<Real>& head, std::span<const Real> z);

template <class Real>
ForwardTraceT<Real> forward(const NetworkParamsT<Real>& p, const TensorT<Real>& input);

template <class Real>
ParamGradsT<Real> backward(const NetworkParamsT<Real>& p, const ForwardTraceT<Real>& trace,
                           const std::vector<Real>& grad_logits_c, const std::vector<Real>& grad_logits_p);

// Checkpoint directory: TNT1 file per tensor plus manifest.txt with layer
// order, shapes, strides and the config hash.
void save_checkpoint(const std::string& dir, const NetworkParams& p);
NetworkParams load_checkpoint(const std::string& dir);

// ---- implementation ----

template <class Real>
std::vector<Real> dense_forward(const DenseT<Real>& d, std::span<const Real> in) {
    const int out = d.w.extent(0), n = d.w.extent(1);
    if (static_cast<int>(in.size()) != n)
        throw std::invalid_argument("dense: input length " + std::to_string(in.size()) + " != weight columns " +
                                    std::to_string(n));
    std::vector<Real> r(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
        const Real* wrow = &d.w.at(o, 0);
        Real acc = d.b[static_cast<std::size_t>(o)];
        for (int k = 0; k < n; ++k) acc += wrow[k] * in[static_cast<std::size_t>(k)];
        r[static_cast<std::size_t>(o)] = acc;
    }
    return r;
}

template <class Real>
std::vector<Real> softmax(std::span<const Real> logits) {
    Real m = logits[0];
    for (Real v : logits) m = v > m ? v : m;
    std::vector<Real> p(logits.size());
    Real sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (Real& v : p) v /= sum;
    return p;
}

template <class Real>
std::vector<Real> softmax_head(const DenseT<Real>& head, std::span<const Real> z) {
    const std::vector<Real> logits = dense_forward(head, z);
    return softmax<Real>(logits);
}

template <class Real>
void validate_network(const NetworkParamsT<Real>& p) {
    const ShapeInfo s = infer_shapes(p.cfg);
    if (p.base.size() != p.cfg.base.size() || p.cls.size() != p.cfg.cls.size())
        throw std::invalid_argument("network: layer count does not match config");
    if (p.cfg.use_template_layer) {
        if (!p.templates) throw std::invalid_argument("network: template layer enabled but no bank attached");
        validate_bank(*p.templates);
        const int m = p.templates->map_count();
        if (m != p.cfg.template_count())
            throw std::invalid_argument("network: bank has " + std::to_string(m) +
                                        " maps but the base network emits " +
                                        std::to_string(p.cfg.template_count()) + " feature masks");
        if (p.templates->maps.extent(1) != s.template_in.h || p.templates->maps.extent(2) != s.template_in.w)
            throw std::invalid_argument(
                "network: template spatial size " + std::to_string(p.templates->maps.extent(1)) + "x" +
                std::to_string(p.templates->maps.extent(2)) + " != feature-mask size " +
                std::to_string(s.template_in.h) + "x" + std::to_string(s.template_in.w));
    }
    if (p.fc.w.extent(1) != s.flat_dim)
        throw std::invalid_argument("network: fc input " + std::to_string(p.fc.w.extent(1)) +
                                    " != flattened conv output " + std::to_string(s.flat_dim));
    if (p.fg_head.w.extent(0) != 2 || p.pose_head.w.extent(0) != kPoseLabels)
        throw std::invalid_argument("network: head logit counts must be 2 and 17");
}

template <class Real>
ForwardTraceT<Real> forward(const NetworkParamsT<Real>& p, const TensorT<Real>& input) {
    if (input.rank() != 3 || input.extent(0) != p.cfg.in_channels || input.extent(1) != p.cfg.in_h ||
        input.extent(2) != p.cfg.in_w)
        throw std::invalid_argument("forward: input shape " + detail::shape_str(input.shape) +
                                    " != configured [" + std::to_string(p.cfg.in_channels) + "," +
                                    std::to_string(p.cfg.in_h) + "," + std::to_string(p.cfg.in_w) + "]");
    ForwardTraceT<Real> t;
    t.input = input;

    const TensorT<Real>* cur = &t.input;
    for (const ConvLayerT<Real>& layer : p.base) {
        t.base_pre.push_back(conv2d_forward<Real>(*cur, layer.kernels, layer.bias, layer.stride));
        t.base_act.push_back(relu(t.base_pre.back()));
        cur = &t.base_act.back();
    }

    if (p.cfg.use_template_layer) {
        t.template_pre = elementwise(t.base_act.back(), p.templates->maps, ElementwiseOp::mul);
        t.z = relu(t.template_pre);
    } else {
        t.z = t.base_act.back();
    }
    cur = &t.z;

    for (const ConvLayerT<Real>& layer : p.cls) {
        t.cls_pre.push_back(conv2d_forward<Real>(*cur, layer.kernels, layer.bias, layer.stride));
        t.cls_act.push_back(relu(t.cls_pre.back()));
        cur = &t.cls_act.back();
    }

    t.fc_pre = dense_forward(p.fc, std::span<const Real>(cur->data.data(), cur->data.size()));
    t.fc_act = t.fc_pre;
    for (Real& v : t.fc_act) v = v > Real(0) ? v : Real(0);

    t.logits_c = dense_forward(p.fg_head, std::span<const Real>(t.fc_act.data(), t.fc_act.size()));
    t.logits_p = dense_forward(p.pose_head, std::span<const Real>(t.fc_act.data(), t.fc_act.size()));
    t.p_c = softmax<Real>(t.logits_c);
    t.p_p = softmax<Real>(t.logits_p);
    return t;
}

namespace detail {

template <class Real>
void dense_backward(const DenseT<Real>& d, std::span<const Real> in, std::span<const Real> grad_out,
                    DenseT<Real>& grad, std::vector<Real>& grad_in_accum) {
    const int out = d.w.extent(0), n = d.w.extent(1);
    for (int o = 0; o < out; ++o) {
        const Real g = grad_out[static_cast<std::size_t>(o)];
        grad.b[static_cast<std::size_t>(o)] += g;
        Real* grow = &grad.w.at(o, 0);
        const Real* wrow = &d.w.at(o, 0);
        for (int k = 0; k < n; ++k) {
            grow[k] += g * in[static_cast<std::size_t>(k)];
            grad_in_accum[static_cast<std::size_t>(k)] += g * wrow[k];
        }
    }
}

}  // namespace detail

template <class Real>
ParamGradsT<Real> backward(const NetworkParamsT<Real>& p, const ForwardTraceT<Real>& trace,
                           const std::vector<Real>& grad_logits_c, const std::vector<Real>& grad_logits_p) {
    if (trace.base_act.size() != p.base.size() || trace.cls_act.size() != p.cls.size())
        throw std::invalid_argument("backward: trace layer counts do not match params");
    if (trace.input.extent(0) != p.cfg.in_channels || trace.input.extent(1) != p.cfg.in_h ||
        trace.input.extent(2) != p.cfg.in_w)
        throw std::invalid_argument("backward: trace input shape does not match params");
    if (static_cast<int>(grad_logits_c.size()) != 2 ||
        static_cast<int>(grad_logits_p.size()) != kPoseLabels)
        throw std::invalid_argument("backward: head gradient sizes must be 2 and 17");
    if (trace.fc_act.size() != static_cast<std::size_t>(p.fc.w.extent(0)))
        throw std::invalid_argument("backward: trace fc width does not match params");

    ParamGradsT<Real> g;
    g.base.resize(p.base.size());
    g.cls.resize(p.cls.size());
    for (std::size_t i = 0; i < p.base.size(); ++i) {
        g.base[i].kernels = TensorT<Real>(p.base[i].kernels.shape);
        g.base[i].bias.assign(p.base[i].bias.size(), Real(0));
    }
    for (std::size_t i = 0; i < p.cls.size(); ++i) {
        g.cls[i].kernels = TensorT<Real>(p.cls[i].kernels.shape);
        g.cls[i].bias.assign(p.cls[i].bias.size(), Real(0));
    }
    g.fc.w = TensorT<Real>(p.fc.w.shape);
    g.fc.b.assign(p.fc.b.size(), Real(0));
    g.fg_head.w = TensorT<Real>(p.fg_head.w.shape);
    g.fg_head.b.assign(p.fg_head.b.size(), Real(0));
    g.pose_head.w = TensorT<Real>(p.pose_head.w.shape);
    g.pose_head.b.assign(p.pose_head.b.size(), Real(0));

    // Heads share the fc activation.
    std::vector<Real> grad_fc_act(trace.fc_act.size(), Real(0));
    detail::dense_backward(p.fg_head, std::span<const Real>(trace.fc_act.data(), trace.fc_act.size()),
                           std::span<const Real>(grad_logits_c.data(), grad_logits_c.size()), g.fg_head,
                           grad_fc_act);
    detail::dense_backward(p.pose_head, std::span<const Real>(trace.fc_act.data(), trace.fc_act.size()),
                           std::span<const Real>(grad_logits_p.data(), grad_logits_p.size()), g.pose_head,
                           grad_fc_act);

    // FC stage.
    std::vector<Real> grad_fc_pre(grad_fc_act.size());
    for (std::size_t i = 0; i < grad_fc_act.size(); ++i)
        grad_fc_pre[i] = trace.fc_pre[i] > Real(0) ? grad_fc_act[i] : Real(0);
    const TensorT<Real>& last_conv_act = p.cls.empty() ? trace.z : trace.cls_act.back();
    std::vector<Real> grad_flat(last_conv_act.size(), Real(0));
    detail::dense_backward(p.fc, std::span<const Real>(last_conv_act.data.data(), last_conv_act.size()),
                           std::span<const Real>(grad_fc_pre.data(), grad_fc_pre.size()), g.fc, grad_flat);

    // Classification convs, last to first.
    TensorT<Real> grad_act(last_conv_act.shape);
    grad_act.data = std::move(grad_flat);
    for (int l = static_cast<int>(p.cls.size()) - 1; l >= 0; --l) {
        const std::size_t li = static_cast<std::size_t>(l);
        TensorT<Real> grad_pre = grad_act;
        for (std::size_t i = 0; i < grad_pre.data.size(); ++i)
            if (!(trace.cls_pre[li].data[i] > Real(0))) grad_pre.data[i] = Real(0);
        const TensorT<Real>& layer_in = l == 0 ? trace.z : trace.cls_act[li - 1];
        Conv2dGrads<Real> cg = conv2d_backward(layer_in, p.cls[li].kernels, p.cls[li].stride, grad_pre);
        g.cls[li].kernels = std::move(cg.grad_kernels);
        g.cls[li].bias = std::move(cg.grad_bias);
        grad_act = std::move(cg.grad_input);
    }

    // Template layer: grad_act currently holds dL/dz.
    if (p.cfg.use_template_layer) {
        TemplateGrads<Real> tg = template_backward(*p.templates, trace.base_act.back(), grad_act);
        g.grad_templates = std::move(tg.grad_templates);
        grad_act = std::move(tg.grad_zhat);
    }

    // Base convs.
    for (int l = static_cast<int>(p.base.size()) - 1; l >= 0; --l) {
        const std::size_t li = static_cast<std::size_t>(l);
        TensorT<Real> grad_pre = grad_act;
        for (std::size_t i = 0; i < grad_pre.data.size(); ++i)
            if (!(trace.base_pre[li].data[i] > Real(0))) grad_pre.data[i] = Real(0);
        const TensorT<Real>& layer_in = l == 0 ? trace.input : trace.base_act[li - 1];
        Conv2dGrads<Real> cg = conv2d_backward(layer_in, p.base[li].kernels, p.base[li].stride, grad_pre);
        g.base[li].kernels = std::move(cg.grad_kernels);
        g.base[li].bias = std::move(cg.grad_bias);
        grad_act = std::move(cg.grad_input);
    }
    return g;
}

template <class Real>
std::vector<ParamRef<Real>> trainable_refs(NetworkParamsT<Real>& p) {
    std::vector<ParamRef<Real>> refs;
    auto add = [&refs](const std::string& name, std::vector<Real>& v) {
        refs.push_back({name, v.data(), v.size()});
    };
    for (std::size_t i = 0; i < p.base.size(); ++i) {
        add("conv" + std::to_string(i + 1) + ".kernels", p.base[i].kernels.data);
        add("conv" + std::to_string(i + 1) + ".bias", p.base[i].bias);
    }
    for (std::size_t i = 0; i < p.cls.size(); ++i) {
        add("conv" + std::to_string(p.base.size() + i + 1) + ".kernels", p.cls[i].kernels.data);
        add("conv" + std::to_string(p.base.size() + i + 1) + ".bias", p.cls[i].bias);
    }
    add("fc.w", p.fc.w.data);
    add("fc.b", p.fc.b);
    add("fg_head.w", p.fg_head.w.data);
    add("fg_head.b", p.fg_head.b);
    add("pose_head.w", p.pose_head.w.data);
    add("pose_head.b", p.pose_head.b);
    return refs;
}

template <class Real>
std::vector<ParamRef<Real>> grad_refs(ParamGradsT<Real>& g) {
    std::vector<ParamRef<Real>> refs;
    auto add = [&refs](const std::string& name, std::vector<Real>& v) {
        refs.push_back({name, v.data(), v.size()});
    };
    for (std::size_t i = 0; i < g.base.size(); ++i) {
        add("conv" + std::to_string(i + 1) + ".kernels", g.base[i].kernels.data);
        add("conv" + std::to_string(i + 1) + ".bias", g.base[i].bias);
    }
    for (std::size_t i = 0; i < g.cls.size(); ++i) {
        add("conv" + std::to_string(g.base.size() + i + 1) + ".kernels", g.cls[i].kernels.data);
        add("conv" + std::to_string(g.base.size() + i + 1) + ".bias", g.cls[i].bias);
    }
    add("fc.w", g.fc.w.data);
    add("fc.b", g.fc.b);
    add("fg_head.w", g.fg_head.w.data);
    add("fg_head.b", g.fg_head.b);
    add("pose_head.w", g.pose_head.w.data);
    add("pose_head.b", g.pose_head.b);
    return refs;
}

template <class Real>
std::size_t trainable_parameter_count(const NetworkParamsT<Real>& p) {
    std::size_t n = 0;
    for (const auto& l : p.base) n += l.kernels.size() + l.bias.size();
    for (const auto& l : p.cls) n += l.kernels.size() + l.bias.size();
    n += p.fc.w.size() + p.fc.b.size();
    n += p.fg_head.w.size() + p.fg_head.b.size();
    n += p.pose_head.w.size() + p.pose_head.b.size();
    return n;
}

template <class Real>
NetworkParamsT<Real> init_params(const NetConfig& cfg, std::shared_ptr<const TemplateBankT<Real>> bank,
                                 std::uint64_t seed) {
    const ShapeInfo shapes = infer_shapes(cfg);
    std::mt19937_64 rng = make_rng(seed);
    auto fill_uniform = [&rng](std::vector<Real>& v, int fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-s, s);
        for (Real& x : v) x = static_cast<Real>(dist(rng));
    };

    NetworkParamsT<Real> p;
    p.cfg = cfg;
    p.templates = std::move(bank);

    int in_c = cfg.in_channels;
    for (const ConvSpec& spec : cfg.base) {
        ConvLayerT<Real> l;
        l.kernels = TensorT<Real>({spec.out_channels, in_c, spec.kernel, spec.kernel});
        l.bias.assign(static_cast<std::size_t>(spec.out_channels), Real(0));
        l.stride = spec.stride;
        fill_uniform(l.kernels.data, in_c * spec.kernel * spec.kernel);
        p.base.push_back(std::move(l));
        in_c = spec.out_channels;
    }
    for (const ConvSpec& spec : cfg.cls) {
        ConvLayerT<Real> l;
        l.kernels = TensorT<Real>({spec.out_channels, in_c, spec.kernel, spec.kernel});
        l.bias.assign(static_cast<std::size_t>(spec.out_channels), Real(0));
        l.stride = spec.stride;
        fill_uniform(l.kernels.data, in_c * spec.kernel * spec.kernel);
        p.cls.push_back(std::move(l));
        in_c = spec.out_channels;
    }

    p.fc.w = TensorT<Real>({cfg.fc_dim, shapes.flat_dim});
    p.fc.b.assign(static_cast<std::size_t>(cfg.fc_dim), Real(0));
    fill_uniform(p.fc.w.data, shapes.flat_dim);
    p.fg_head.w = TensorT<Real>({2, cfg.fc_dim});
    p.fg_head.b.assign(2, Real(0));
    fill_uniform(p.fg_head.w.data, cfg.fc_dim);
    p.pose_head.w = TensorT<Real>({kPoseLabels, cfg.fc_dim});
    p.pose_head.b.assign(kPoseLabels, Real(0));
    fill_uniform(p.pose_head.w.data, cfg.fc_dim);

    validate_network(p);
    return p;
}

}  // namespace tnet
