#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tnet/geometry.hpp"
#include "tnet/synthgen.hpp"
#include "tnet/tensor.hpp"

namespace tnet {

// Fixed multiplicative layer weights: one down-sampled surface-normal map
// per (viewpoint, channel) pair. Never updated by the optimizer.
template <class Real>
struct TemplateBankT {
    TensorT<Real> maps;           // [M, h, w], M = 3 * viewpoints
    std::vector<Vec3> viewpoints; // (yaw, pitch, roll) per view
    int source_resolution = 128;

    int map_count() const { return maps.extent(0); }
};

using TemplateBank = TemplateBankT<float>;

template <class Real>
TemplateBankT<Real> bank_cast(const TemplateBank& b) {
    TemplateBankT<Real> r;
    r.maps.shape = b.maps.shape;
    r.maps.data.assign(b.maps.data.begin(), b.maps.data.end());
    r.viewpoints = b.viewpoints;
    r.source_resolution = b.source_resolution;
    return r;
}

template <class Real>
void validate_bank(const TemplateBankT<Real>& bank) {
    if (bank.maps.rank() != 3)
        throw std::invalid_argument("template bank maps must be rank 3 [M,h,w]");
    const int m = bank.maps.extent(0);
    if (m != 3 * static_cast<int>(bank.viewpoints.size()))
        throw std::invalid_argument("template bank has " + std::to_string(m) + " maps but " +
                                    std::to_string(bank.viewpoints.size()) + " viewpoints (need M = 3V)");
    for (Real v : bank.maps.data)
        if (v < Real(0) || v > Real(1))
            throw std::invalid_argument("template map values must lie in [0,1]");
    const std::size_t per_map = bank.maps.data.size() / static_cast<std::size_t>(m);
    for (int i = 0; i < m; ++i) {
        bool nonzero = false;
        for (std::size_t k = 0; k < per_map; ++k)
            if (bank.maps.data[static_cast<std::size_t>(i) * per_map + k] != Real(0)) {
                nonzero = true;
                break;
            }
        if (!nonzero)
            throw std::invalid_argument("template map " + std::to_string(i) + " is all zero");
    }
}

// z[m] = relu(zhat[m] .* maps[m]); support(z) is contained in support(maps).
template <class Real>
TensorT<Real> template_apply(const TemplateBankT<Real>& bank, const TensorT<Real>& zhat) {
    if (zhat.shape != bank.maps.shape)
        throw std::invalid_argument("template_apply: feature-mask shape " + detail::shape_str(zhat.shape) +
                                    " != bank map shape " + detail::shape_str(bank.maps.shape));
    TensorT<Real> z(zhat.shape);
    for (std::size_t i = 0; i < z.data.size(); ++i) {
        const Real p = zhat.data[i] * bank.maps.data[i];
        z.data[i] = p > Real(0) ? p : Real(0);
    }
    return z;
}

template <class Real>
struct TemplateGrads {
    TensorT<Real> grad_zhat;
    TensorT<Real> grad_templates;  // returned for verification only; not trainable
};

// grad_zhat = grad_z .* relu'(zhat .* T) .* T, grad_T likewise with zhat.
template <class Real>
TemplateGrads<Real> template_backward(const TemplateBankT<Real>& bank, const TensorT<Real>& zhat,
                                      const TensorT<Real>& grad_z) {
    if (zhat.shape != bank.maps.shape)
        throw std::invalid_argument("template_backward: feature-mask shape " + detail::shape_str(zhat.shape) +
                                    " != bank map shape " + detail::shape_str(bank.maps.shape));
    if (grad_z.shape != zhat.shape)
        throw std::invalid_argument("template_backward: grad shape " + detail::shape_str(grad_z.shape) +
                                    " != feature-mask shape " + detail::shape_str(zhat.shape));
    TemplateGrads<Real> g;
    g.grad_zhat = TensorT<Real>(zhat.shape);
    g.grad_templates = TensorT<Real>(zhat.shape);
    for (std::size_t i = 0; i < zhat.data.size(); ++i) {
        const Real active = zhat.data[i] * bank.maps.data[i] > Real(0) ? Real(1) : Real(0);
        g.grad_zhat.data[i] = grad_z.data[i] * active * bank.maps.data[i];
        g.grad_templates.data[i] = grad_z.data[i] * active * zhat.data[i];
    }
    return g;
}

// Box-filter resample handling fractional cell overlap; exact area average.
Tensor area_resample(const Tensor& map, int target_h, int target_w);

// Uniform (yaw, pitch, roll) viewpoint grids.
std::vector<Vec3> viewpoint_grid(int n_yaw, double yaw_lo, double yaw_hi, int n_pitch, double pitch_lo,
                                 double pitch_hi, int n_roll, double roll_lo, double roll_hi);
std::vector<Vec3> paper_viewpoint_grid();  // 5 yaw x 3 pitch x 3 roll = 45 views, 135 maps
std::vector<Vec3> desk_viewpoint_grid();   // 3 yaw x 3 pitch = 9 views, 27 maps

struct BankBuildConfig {
    CameraSpec camera{{525.0, 525.0, 319.5, 239.5}, 640, 480, {}};
    double distance = 1.0;   // meters from camera during the template render
    double scale = 0.005;    // meters per pixel of the source patch
};

// Renders the object from every viewpoint, converts to a surface-normal
// patch at render_res, then area-averages down to (target_h, target_w).
TemplateBank build_bank(const TriangleMesh& mesh, const std::vector<Vec3>& viewpoints, int render_res,
                        int target_h, int target_w, const BankBuildConfig& cfg = {});

// Bank directory: maps.tnt plus viewpoints.txt (one "yaw pitch roll" line
// per view and a source_resolution header).
void save_bank(const std::string& dir, const TemplateBank& bank);
TemplateBank load_bank(const std::string& dir);

}  // namespace tnet
