#include "tnet/objective.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tnet {

namespace {
std::atomic<std::uint64_t> g_clamp_warnings{0};
}

std::uint64_t clamp_warning_count() { return g_clamp_warnings.load(); }
void reset_clamp_warning_count() { g_clamp_warnings.store(0); }
void detail::count_clamp_warning() { g_clamp_warnings.fetch_add(1); }

PoseGrid::PoseGrid(std::vector<Mat3> p) : poses(std::move(p)) {
    if (poses.size() != kPoseClasses)
        throw std::invalid_argument("PoseGrid: expected " + std::to_string(kPoseClasses) + " poses, got " +
                                    std::to_string(poses.size()));
    for (std::size_t i = 0; i < poses.size(); ++i)
        if (!is_rotation(poses[i], 1e-9))
            throw std::invalid_argument("PoseGrid: entry " + std::to_string(i) + " is not a proper rotation");
}

PoseGrid PoseGrid::uniform(double yaw_lo, double yaw_hi, double pitch_lo, double pitch_hi,
                           int n_yaw, int n_pitch) {
    if (n_yaw * n_pitch != kPoseClasses)
        throw std::invalid_argument("PoseGrid: n_yaw * n_pitch must be " + std::to_string(kPoseClasses));
    std::vector<Mat3> poses;
    poses.reserve(kPoseClasses);
    const double dy = (yaw_hi - yaw_lo) / n_yaw;
    const double dp = (pitch_hi - pitch_lo) / n_pitch;
    for (int p = 0; p < n_pitch; ++p)
        for (int y = 0; y < n_yaw; ++y)
            poses.push_back(rot_ypr(yaw_lo + (y + 0.5) * dy, pitch_lo + (p + 0.5) * dp, 0.0));
    return PoseGrid(std::move(poses));
}

double pose_weight(const Mat3& view_rotation, const Mat3& grid_pose) {
    const Mat3 canonical = grid_pose * view_rotation.transposed();
    const double d = rotation_deviation(canonical);
    return std::exp(-d * d);
}

SoftLabel soft_labels(const Mat3& view_rotation, const PoseGrid& grid) {
    if (!is_rotation(view_rotation, 1e-6))
        throw std::invalid_argument("soft_labels: view rotation is not a proper rotation");
    SoftLabel l;
    l.fg = {1.0, 0.0};
    double total = 0.0;
    for (int j = 0; j < kPoseClasses; ++j) {
        const double w = pose_weight(view_rotation, grid.poses[static_cast<std::size_t>(j)]);
        l.pose[static_cast<std::size_t>(j)] = w;
        total += w;
    }
    for (int j = 0; j < kPoseClasses; ++j) l.pose[static_cast<std::size_t>(j)] /= total;
    l.pose[kPoseClasses] = 0.0;
    return l;
}

SoftLabel background_label() {
    SoftLabel l;
    l.fg = {0.0, 1.0};
    l.pose[kPoseClasses] = 1.0;
    return l;
}

}  // namespace tnet
