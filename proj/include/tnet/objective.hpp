#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tnet/geometry.hpp"

namespace tnet {

inline constexpr int kPoseClasses = 16;
inline constexpr int kPoseLabels = kPoseClasses + 1;  // + background
inline constexpr int kFgIndex = 0;                    // fg head: [foreground, background]
inline constexpr int kBgIndex = 1;

// Per-example targets: one-hot fg/bg plus a 17-way soft pose vector whose
// last entry is the background class.
struct SoftLabel {
    std::array<double, 2> fg{};
    std::array<double, kPoseLabels> pose{};

    bool is_foreground() const { return fg[kFgIndex] > 0.5; }
};

// 16 quantized rotations covering the viewing domain.
struct PoseGrid {
    std::vector<Mat3> poses;

    explicit PoseGrid(std::vector<Mat3> p);

    // Bin centers: n_yaw uniform yaw bins x n_pitch pitch bins, roll 0.
    static PoseGrid uniform(double yaw_lo, double yaw_hi, double pitch_lo, double pitch_hi,
                            int n_yaw = 8, int n_pitch = 2);
};

// Pose soft labels from the deviation of the canonical rotation (view ->
// grid pose) from the identity: d_j = ||I - R_j * R_view^T||_F, weight
// exp(-d_j^2), normalized over the 16 pose classes. fg = [1,0], pose[16] = 0.
SoftLabel soft_labels(const Mat3& view_rotation, const PoseGrid& grid);

SoftLabel background_label();

// Raw (unnormalized) pose weight for one grid entry; exposed for tests.
double pose_weight(const Mat3& view_rotation, const Mat3& grid_pose);

template <class Real>
struct MixedLossResult {
    double loss = 0.0;
    std::vector<Real> grad_logits_c;  // p^c - y^c
    std::vector<Real> grad_logits_p;  // lambda * (p^p - y^p)
};

// Number of times a non-positive probability reached the loss and was
// clamped; nonzero values signal upstream numeric trouble.
std::uint64_t clamp_warning_count();
void reset_clamp_warning_count();

namespace detail {
void count_clamp_warning();
}

// loss = -(sum_i y^c_i log p^c_i + lambda * sum_j y^p_j log p^p_j).
template <class Real>
MixedLossResult<Real> mixed_loss(std::span<const Real> p_c, std::span<const Real> p_p,
                                 const SoftLabel& label, double lambda) {
    if (p_c.size() != 2) throw std::invalid_argument("mixed_loss: fg head must have 2 probabilities");
    if (p_p.size() != kPoseLabels) throw std::invalid_argument("mixed_loss: pose head must have 17 probabilities");
    if (!(lambda >= 0.0)) throw std::invalid_argument("mixed_loss: lambda must be >= 0");

    constexpr double kFloor = 1e-12;
    MixedLossResult<Real> r;
    double loss = 0.0;
    for (int i = 0; i < 2; ++i) {
        double p = static_cast<double>(p_c[static_cast<std::size_t>(i)]);
        if (p <= 0.0) {
            detail::count_clamp_warning();
            p = kFloor;
        } else if (p < kFloor) {
            p = kFloor;
        }
        loss -= label.fg[static_cast<std::size_t>(i)] * std::log(p);
    }
    for (int j = 0; j < kPoseLabels; ++j) {
        double p = static_cast<double>(p_p[static_cast<std::size_t>(j)]);
        if (p <= 0.0) {
            detail::count_clamp_warning();
            p = kFloor;
        } else if (p < kFloor) {
            p = kFloor;
        }
        loss -= lambda * label.pose[static_cast<std::size_t>(j)] * std::log(p);
    }
    r.loss = loss;

    r.grad_logits_c.resize(2);
    for (int i = 0; i < 2; ++i)
        r.grad_logits_c[static_cast<std::size_t>(i)] =
            p_c[static_cast<std::size_t>(i)] - static_cast<Real>(label.fg[static_cast<std::size_t>(i)]);
    r.grad_logits_p.resize(kPoseLabels);
    for (int j = 0; j < kPoseLabels; ++j)
        r.grad_logits_p[static_cast<std::size_t>(j)] =
            static_cast<Real>(lambda) *
            (p_p[static_cast<std::size_t>(j)] - static_cast<Real>(label.pose[static_cast<std::size_t>(j)]));
    return r;
}

// Sum of pose probabilities over the 16 pose classes; the pose-only
// ablation reads its foreground score from this.
template <class Real>
double fg_probability(std::span<const Real> p_p) {
    if (p_p.size() != kPoseLabels) throw std::invalid_argument("fg_probability: expected 17 probabilities");
    double s = 0.0;
    for (int j = 0; j < kPoseClasses; ++j) s += static_cast<double>(p_p[static_cast<std::size_t>(j)]);
    return s;
}

}  // namespace tnet
