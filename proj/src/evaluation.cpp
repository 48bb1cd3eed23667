#include "tnet/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace tnet {

std::vector<Detection> detect(const NetworkParams& params, const OrthoPatch& scene, int stride,
                              HeadMode head, int workers, double nms_radius_px) {
    const int win_h = params.cfg.in_h, win_w = params.cfg.in_w;
    if (scene.height() < win_h || scene.width() < win_w)
        throw std::invalid_argument("detect: scene patch " + std::to_string(scene.height()) + "x" +
                                    std::to_string(scene.width()) + " smaller than the " +
                                    std::to_string(win_h) + "x" + std::to_string(win_w) + " window");
    if (stride < 1) throw std::invalid_argument("detect: stride must be >= 1");

    std::vector<std::pair<int, int>> offsets;
    for (int oy = 0; oy + win_h <= scene.height(); oy += stride)
        for (int ox = 0; ox + win_w <= scene.width(); ox += stride) offsets.push_back({oy, ox});

    std::vector<Detection> dets(offsets.size());
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= static_cast<int>(offsets.size())) return;
            try {
                const auto [oy, ox] = offsets[static_cast<std::size_t>(i)];
                Tensor window({3, win_h, win_w});
                for (int c = 0; c < 3; ++c)
                    for (int y = 0; y < win_h; ++y)
                        for (int x = 0; x < win_w; ++x)
                            window.at(c, y, x) = scene.normals.at(c, oy + y, ox + x);
                const ForwardTraceT<float> trace = forward(params, window);

                Detection d;
                d.py = oy + win_h / 2;
                d.px = ox + win_w / 2;
                d.world = {scene.origin.x + d.px * scene.scale, scene.origin.y + d.py * scene.scale, 0.0};
                for (int j = 0; j < kPoseLabels; ++j)
                    d.pose_scores[static_cast<std::size_t>(j)] = trace.p_p[static_cast<std::size_t>(j)];
                int best = 0;
                for (int j = 1; j < kPoseClasses; ++j)
                    if (d.pose_scores[static_cast<std::size_t>(j)] > d.pose_scores[static_cast<std::size_t>(best)])
                        best = j;
                d.pose_class = best + 1;
                d.p_fg = head == HeadMode::pose_only
                             ? fg_probability(std::span<const float>(trace.p_p.data(), trace.p_p.size()))
                             : trace.p_c[kFgIndex];
                dets[static_cast<std::size_t>(i)] = d;
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return dets[static_cast<std::size_t>(a)].p_fg > dets[static_cast<std::size_t>(b)].p_fg;
    });

    std::vector<Detection> kept;
    for (int i : order) {
        const Detection& d = dets[static_cast<std::size_t>(i)];
        bool suppressed = false;
        for (const Detection& k : kept) {
            const double dx = d.px - k.px, dy = d.py - k.py;
            if (std::sqrt(dx * dx + dy * dy) <= nms_radius_px) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

bool is_localized(const Detection& det, const GroundTruth& gt) {
    if (!(gt.bbox.x > 0.0 && gt.bbox.y > 0.0 && gt.bbox.z > 0.0))
        throw std::invalid_argument("is_localized: ground-truth bbox extents must be positive");
    const double radius = std::max(gt.bbox.x, std::max(gt.bbox.y, gt.bbox.z)) / 3.0;
    return norm(det.world - gt.center) <= radius;
}

bool is_pose_correct(const Detection& det, const GroundTruth& gt, const PoseGrid& grid) {
    if (det.pose_class < 1 || det.pose_class > kPoseClasses)
        throw std::invalid_argument("is_pose_correct: pose class out of range");
    std::vector<int> order(grid.poses.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dist(grid.poses.size());
    for (std::size_t j = 0; j < grid.poses.size(); ++j)
        dist[j] = rotation_deviation(grid.poses[j] * gt.rotation.transposed());
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
    });
    const int predicted = det.pose_class - 1;
    return predicted == order[0] || predicted == order[1];
}

namespace {

struct ScoredDet {
    double score;
    std::size_t scene;
    bool localized;
    bool pose_ok;
};

std::vector<PrPoint> sweep(std::vector<ScoredDet> all, std::size_t n_gt, bool require_pose) {
    std::stable_sort(all.begin(), all.end(), [](const ScoredDet& a, const ScoredDet& b) {
        return a.score > b.score;
    });
    std::vector<PrPoint> out;
    std::vector<std::uint8_t> matched(n_gt, 0);
    int tp = 0, fp = 0;
    for (const ScoredDet& d : all) {
        const bool good = d.localized && (!require_pose || d.pose_ok);
        if (good && !matched[d.scene]) {
            matched[d.scene] = 1;  // one true positive per ground truth
            ++tp;
        } else {
            ++fp;
        }
        out.push_back({d.score, static_cast<double>(tp) / (tp + fp),
                       static_cast<double>(tp) / static_cast<double>(n_gt)});
    }
    return out;
}

}  // namespace

std::vector<PrPoint> pr_curve(const std::vector<std::vector<Detection>>& per_scene,
                              const std::vector<GroundTruth>& gts, const PoseGrid& grid,
                              bool require_pose) {
    if (gts.empty()) throw std::invalid_argument("pr_curve: need at least one ground truth");
    if (per_scene.size() != gts.size())
        throw std::invalid_argument("pr_curve: detections and ground truths must align per scene");
    std::vector<ScoredDet> all;
    for (std::size_t s = 0; s < per_scene.size(); ++s)
        for (const Detection& d : per_scene[s])
            all.push_back({d.p_fg, s, is_localized(d, gts[s]), is_pose_correct(d, gts[s], grid)});
    return sweep(std::move(all), gts.size(), require_pose);
}

Accuracy accuracy_table(const std::vector<std::vector<Detection>>& per_scene,
                        const std::vector<GroundTruth>& gts, const PoseGrid& grid) {
    if (gts.empty()) throw std::invalid_argument("accuracy_table: need at least one ground truth");
    if (per_scene.size() != gts.size())
        throw std::invalid_argument("accuracy_table: detections and ground truths must align per scene");
    int loc = 0, loc_pose = 0;
    for (std::size_t s = 0; s < per_scene.size(); ++s) {
        if (per_scene[s].empty()) continue;
        const Detection& top = per_scene[s].front();
        if (is_localized(top, gts[s])) {
            ++loc;
            if (is_pose_correct(top, gts[s], grid)) ++loc_pose;
        }
    }
    Accuracy a;
    a.location_pct = 100.0 * loc / static_cast<double>(gts.size());
    a.location_pose_pct = 100.0 * loc_pose / static_cast<double>(gts.size());
    return a;
}

std::string pr_csv(const std::vector<PrPoint>& points) {
    std::ostringstream os;
    os << "threshold,precision,recall\n";
    char buf[128];
    for (const PrPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", p.threshold, p.precision, p.recall);
        os << buf;
    }
    return os.str();
}

std::string format_accuracy_table(const std::string& object_name, const Accuracy& acc) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-16s %8s %8s\n", "Object", "L", "L+P");
    os << buf;
    std::snprintf(buf, sizeof(buf), "%-16s %8.2f %8.2f\n", object_name.c_str(), acc.location_pct,
                  acc.location_pose_pct);
    os << buf;
    return os.str();
}

}  // namespace tnet
