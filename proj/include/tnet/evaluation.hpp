#pragma once

#include <array>
#include <string>
#include <vector>

#include "tnet/network.hpp"
#include "tnet/objective.hpp"
#include "tnet/orthopatch.hpp"
#include "tnet/training.hpp"

namespace tnet {

struct Detection {
    int px = 0, py = 0;   // window center, patch pixels
    Vec3 world;           // orthographic position of the window center
    double p_fg = 0.0;
    int pose_class = 1;   // 1..16, argmax over the pose entries
    std::array<double, kPoseLabels> pose_scores{};
};

struct GroundTruth {
    Vec3 center;
    Vec3 bbox;  // (w, d, h) in meters
    Mat3 rotation = Mat3::identity();
};

// Evaluates every stride-spaced window of the model's input size over the
// scene patch, sorts by p_fg and applies greedy non-maximum suppression.
std::vector<Detection> detect(const NetworkParams& params, const OrthoPatch& scene, int stride,
                              HeadMode head = HeadMode::mixed, int workers = 1,
                              double nms_radius_px = 64.0);

// ||center - gt.center|| <= max(w,d,h)/3.
bool is_localized(const Detection& det, const GroundTruth& gt);

// Predicted pose class ranks first or second among grid poses ordered by
// Frobenius distance to the ground-truth rotation (ties break low-index).
bool is_pose_correct(const Detection& det, const GroundTruth& gt, const PoseGrid& grid);

struct PrPoint {
    double threshold = 0.0, precision = 0.0, recall = 0.0;
};

// Threshold sweep over p_fg; a detection is a true positive when localized
// (and pose-correct when require_pose), at most one per ground truth.
std::vector<PrPoint> pr_curve(const std::vector<std::vector<Detection>>& per_scene,
                              const std::vector<GroundTruth>& gts, const PoseGrid& grid,
                              bool require_pose);

struct Accuracy {
    double location_pct = 0.0;       // L
    double location_pose_pct = 0.0;  // L + P
};

// Fraction of scenes whose top detection is a true positive.
Accuracy accuracy_table(const std::vector<std::vector<Detection>>& per_scene,
                        const std::vector<GroundTruth>& gts, const PoseGrid& grid);

std::string pr_csv(const std::vector<PrPoint>& points);
std::string format_accuracy_table(const std::string& object_name, const Accuracy& acc);

}  // namespace tnet
