#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tnet/objective.hpp"

using namespace tnet;

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    return rot_ypr(d(rng), d(rng) * 0.5, d(rng));
}

}  // namespace

TEST_CASE("pose grid entries are proper rotations") {
    const PoseGrid grid = PoseGrid::uniform(deg2rad(-60), deg2rad(60), deg2rad(-30), deg2rad(30));
    REQUIRE(grid.poses.size() == 16);
    for (const Mat3& r : grid.poses) CHECK(is_rotation(r, 1e-9));

    Mat3 bad = Mat3::identity();
    bad.m[0][0] = 1.1;
    std::vector<Mat3> poses(16, Mat3::identity());
    poses[3] = bad;
    CHECK_THROWS_AS(PoseGrid{poses}, std::invalid_argument);
}

TEST_CASE("label at a grid pose peaks there") {
    const PoseGrid grid = PoseGrid::uniform(deg2rad(-60), deg2rad(60), deg2rad(-30), deg2rad(30));
    for (std::size_t j = 0; j < grid.poses.size(); ++j) {
        const SoftLabel l = soft_labels(grid.poses[j], grid);
        CHECK(pose_weight(grid.poses[j], grid.poses[j]) == doctest::Approx(1.0).epsilon(1e-12));
        std::size_t best = 0;
        for (std::size_t k = 1; k < 16; ++k)
            if (l.pose[k] > l.pose[best]) best = k;
        CHECK(best == j);
        CHECK(l.fg[0] == 1.0);
        CHECK(l.fg[1] == 0.0);
        CHECK(l.pose[16] == 0.0);
    }
}

TEST_CASE("90 degree yaw deviation weighs exp(-4)") {
    // Direct 3x3 arithmetic: R_y(90) applied to the identity view.
    const Mat3 view = Mat3::identity();
    const Mat3 pose = rot_y(deg2rad(90));
    double frob2 = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double d = (i == j ? 1.0 : 0.0) - pose.m[i][j];
            frob2 += d * d;
        }
    CHECK(frob2 == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(pose_weight(view, pose) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
}

TEST_CASE("view equidistant between adjacent grid poses splits the label") {
    const PoseGrid grid = PoseGrid::uniform(deg2rad(-60), deg2rad(60), deg2rad(-30), deg2rad(30));
    // Grid yaw centers are 15 degrees apart at fixed pitch; halfway lands
    // between entries 0 and 1.
    const Mat3 view = rot_ypr(deg2rad(-45.0), deg2rad(-15.0), 0.0);
    const SoftLabel l = soft_labels(view, grid);
    CHECK(l.pose[0] == doctest::Approx(l.pose[1]).epsilon(1e-12));
}

TEST_CASE("soft labels sum to one and survive a global rotation") {
    std::mt19937_64 rng(9);
    const PoseGrid grid = PoseGrid::uniform(deg2rad(-60), deg2rad(60), deg2rad(-30), deg2rad(30));
    for (int trial = 0; trial < 20; ++trial) {
        const Mat3 view = random_rotation(rng);
        const SoftLabel l = soft_labels(view, grid);
        double s = 0.0;
        for (double v : l.pose) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-12);

        const Mat3 g = random_rotation(rng);
        std::vector<Mat3> rotated;
        for (const Mat3& p : grid.poses) rotated.push_back(g * p);
        const PoseGrid grid2(rotated);
        const SoftLabel l2 = soft_labels(g * view, grid2);
        for (int j = 0; j < kPoseLabels; ++j)
            CHECK(l.pose[static_cast<std::size_t>(j)] ==
                  doctest::Approx(l2.pose[static_cast<std::size_t>(j)]).epsilon(1e-9));
    }
}

TEST_CASE("pose weight strictly decreases with deviation") {
    double prev = pose_weight(Mat3::identity(), Mat3::identity());
    for (int deg = 10; deg <= 170; deg += 10) {
        const double w = pose_weight(Mat3::identity(), rot_y(deg2rad(deg)));
        CHECK(w < prev);
        prev = w;
    }
}

TEST_CASE("background label is one-hot on the extra class") {
    const SoftLabel l = background_label();
    CHECK(l.fg[0] == 0.0);
    CHECK(l.fg[1] == 1.0);
    CHECK(l.pose[16] == 1.0);
    for (int j = 0; j < 16; ++j) CHECK(l.pose[static_cast<std::size_t>(j)] == 0.0);
}

TEST_CASE("non-rotation inputs are rejected") {
    Mat3 scaled = Mat3::identity();
    for (auto& row : scaled.m)
        for (double& v : row) v *= 1.1;
    const PoseGrid grid = PoseGrid::uniform(deg2rad(-60), deg2rad(60), deg2rad(-30), deg2rad(30));
    CHECK_THROWS_AS(soft_labels(scaled, grid), std::invalid_argument);
}

TEST_CASE("uniform predictor loss is ln 2 + lambda ln 17") {
    const double lambda = 0.7;
    std::vector<double> pc{0.5, 0.5};
    std::vector<double> pp(17, 1.0 / 17.0);
    const PoseGrid grid = PoseGrid::uniform(deg2rad(-60), deg2rad(60), deg2rad(-30), deg2rad(30));
    const SoftLabel l = soft_labels(grid.poses[5], grid);
    const MixedLossResult<double> r = mixed_loss<double>(pc, pp, l, lambda);
    CHECK(std::abs(r.loss - (std::log(2.0) + lambda * std::log(17.0))) <= 1e-12);
}

TEST_CASE("exact prediction has zero logit gradients and zero loss") {
    SoftLabel l;
    l.fg = {1.0, 0.0};
    l.pose[3] = 1.0;
    std::vector<double> pc{1.0, 0.0};
    std::vector<double> pp(17, 0.0);
    pp[3] = 1.0;
    const MixedLossResult<double> r = mixed_loss<double>(pc, pp, l, 1.0);
    for (double g : r.grad_logits_c) CHECK(g == 0.0);
    for (double g : r.grad_logits_p) CHECK(g == 0.0);
    CHECK(r.loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("lambda zero decouples the pose head") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(0.01, 1.0);
    std::vector<double> pc{0.3, 0.7};
    std::vector<double> pp(17);
    double s = 0.0;
    for (double& v : pp) s += (v = d(rng));
    for (double& v : pp) v /= s;
    const PoseGrid grid = PoseGrid::uniform(deg2rad(-60), deg2rad(60), deg2rad(-30), deg2rad(30));
    const SoftLabel l = soft_labels(grid.poses[2], grid);
    const MixedLossResult<double> r = mixed_loss<double>(pc, pp, l, 0.0);
    CHECK(r.loss == doctest::Approx(-std::log(pc[0])).epsilon(1e-12));
    for (double g : r.grad_logits_p) CHECK(g == 0.0);
}

TEST_CASE("logit gradients match finite differences of the loss") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    const PoseGrid grid = PoseGrid::uniform(deg2rad(-60), deg2rad(60), deg2rad(-30), deg2rad(30));
    const SoftLabel label = soft_labels(rot_ypr(0.3, -0.2, 0.1), grid);
    const double lambda = 1.3;

    std::vector<double> lc{d(rng), d(rng)};
    std::vector<double> lp(17);
    for (double& v : lp) v = d(rng);

    auto softmax_of = [](const std::vector<double>& logits) {
        double m = logits[0];
        for (double v : logits) m = std::max(m, v);
        std::vector<double> p(logits.size());
        double s = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) s += (p[i] = std::exp(logits[i] - m));
        for (double& v : p) v /= s;
        return p;
    };
    auto loss_of = [&]() {
        const auto pc = softmax_of(lc);
        const auto pp = softmax_of(lp);
        return mixed_loss<double>(pc, pp, label, lambda).loss;
    };

    const auto pc = softmax_of(lc);
    const auto pp = softmax_of(lp);
    const MixedLossResult<double> r = mixed_loss<double>(pc, pp, label, lambda);

    // Fourth-order stencil keeps finite-difference noise below the 1e-8
    // relative tolerance; plain central differences bottom out near 1e-7.
    const double h = 1e-3;
    auto numeric_grad = [&](double& coord) {
        const double saved = coord;
        coord = saved + h;
        const double f1 = loss_of();
        coord = saved - h;
        const double f2 = loss_of();
        coord = saved + 2 * h;
        const double f3 = loss_of();
        coord = saved - 2 * h;
        const double f4 = loss_of();
        coord = saved;
        return (8.0 * (f1 - f2) - (f3 - f4)) / (12.0 * h);
    };
    for (std::size_t i = 0; i < lc.size(); ++i) {
        const double numeric = numeric_grad(lc[i]);
        CHECK(std::abs(r.grad_logits_c[i] - numeric) / std::max(std::abs(numeric), 1e-8) <= 1e-8);
    }
    for (std::size_t j = 0; j < lp.size(); ++j) {
        const double numeric = numeric_grad(lp[j]);
        CHECK(std::abs(r.grad_logits_p[j] - numeric) / std::max(std::abs(numeric), 1e-8) <= 1e-8);
    }
}

TEST_CASE("non-positive probabilities are clamped and counted") {
    reset_clamp_warning_count();
    std::vector<double> pc{0.0, 1.0};
    std::vector<double> pp(17, 1.0 / 17.0);
    SoftLabel l;
    l.fg = {1.0, 0.0};
    l.pose[16] = 1.0;
    const MixedLossResult<double> r = mixed_loss<double>(pc, pp, l, 1.0);
    CHECK(std::isfinite(r.loss));
    CHECK(clamp_warning_count() == 1);
    reset_clamp_warning_count();
}

TEST_CASE("pose-mass foreground probability") {
    std::vector<double> uniform(17, 1.0 / 17.0);
    CHECK(fg_probability<double>(uniform) == doctest::Approx(16.0 / 17.0).epsilon(1e-12));
    std::vector<double> bg(17, 0.0);
    bg[16] = 1.0;
    CHECK(fg_probability<double>(bg) == 0.0);
    std::vector<double> pose3(17, 0.0);
    pose3[2] = 1.0;
    CHECK(fg_probability<double>(pose3) == 1.0);
}
