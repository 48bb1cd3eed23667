#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tnet/geometry.hpp"
#include "tnet/objective.hpp"
#include "tnet/orthopatch.hpp"
#include "tnet/tensor.hpp"

namespace tnet {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
};

// Drops zero-area triangles, validates index ranges.
TriangleMesh cleanup_mesh(TriangleMesh m);

// Built-in parametric object library. Meshes are centered on their
// bounding-box center, dimensions in meters.
TriangleMesh make_box(double w, double h, double d);
TriangleMesh make_cylinder(double radius, double height, int segments = 24);
TriangleMesh make_l_bracket(double arm_len, double arm_width, double depth, double thickness);
TriangleMesh make_stepped_block(double w, double h, double d, double step_w, double step_h);
TriangleMesh make_capped_cone(double r_bottom, double r_top, double height, int segments = 24);
TriangleMesh make_plate(double w, double h, double thickness);

// Lookup by CLI name: box, cylinder, l-bracket, stepped-block, capped-cone, plate.
TriangleMesh shape_by_name(const std::string& name);
std::vector<std::string> shape_names();

// ASCII OBJ subset: "v x y z" and triangle-only "f a b c" (1-based).
TriangleMesh load_obj(const std::string& path);

Vec3 mesh_extent(const TriangleMesh& m);  // axis-aligned bounding-box size

struct MeshPose {
    Mat3 rotation = Mat3::identity();
    Vec3 translation;
};

struct CameraSpec {
    Intrinsics intrinsics{262.5, 262.5, 159.5, 119.5};
    int width = 320, height = 240;
    MeshPose pose;  // camera-to-world; identity = meshes given in camera frame
};

struct SceneSpec {
    TriangleMesh target;
    MeshPose target_pose;
    std::vector<TriangleMesh> clutter;
    std::vector<MeshPose> clutter_poses;
    bool floor = false;
    double floor_y = 0.20;  // +y is down in the camera frame
    CameraSpec camera;
    std::array<int, 2> shift{0, 0};  // patch-center offset in pixels
    bool has_target = true;          // false for clutter-only background scenes
};

// Per-pixel nearest ray-triangle hit over every mesh plus the floor.
DepthImage render_depth(const SceneSpec& scene, int width, int height);

struct RenderResult {
    DepthImage depth;
    std::vector<std::int32_t> hit_id;  // -1 none, -2 floor, 0 target, 1.. clutter
};

RenderResult render_scene(const SceneSpec& scene, int width, int height);

struct ViewRange {
    double yaw_lo = deg2rad(-60), yaw_hi = deg2rad(60);
    double pitch_lo = deg2rad(-30), pitch_hi = deg2rad(30);
    double roll_lo = deg2rad(-30), roll_hi = deg2rad(30);
};

struct ClutterConfig {
    int min_objects = 1, max_objects = 3;
    std::vector<std::string> shapes = {"cylinder", "l-bracket", "capped-cone"};
    std::string always_include;  // extra distractor placed in every scene
    bool floor = true;
    double lateral_min = 0.16, lateral_max = 0.45;
};

struct ExampleConfig {
    CameraSpec camera;
    double target_distance = 1.0;  // meters along the optical axis
    int patch_h = 128, patch_w = 128;
    double scale = 0.005;  // meters per patch pixel
    int shift_max = 8;     // random shifts uniform in [-shift_max, +shift_max]
    ViewRange views;
    ClutterConfig clutter;
    int min_visible_px = 40;  // smaller target silhouettes count as occluded
    int max_retries = 8;
};

struct LabeledExample {
    Tensor patch;  // [3, H, W]
    SoftLabel label;
    bool foreground = false;
    double yaw = 0.0, pitch = 0.0, roll = 0.0;  // ground-truth view (fg only)
    Mat3 rotation = Mat3::identity();
    std::uint64_t seed = 0;
};

// Renders one labeled foreground example. The seed drives every random
// draw; when view_angles is absent the view itself is sampled from it.
LabeledExample make_example(const TriangleMesh& object, std::optional<Vec3> view_angles,
                            const ExampleConfig& cfg, const PoseGrid& grid, std::uint64_t seed);

// Clutter-only scene labeled background.
LabeledExample make_background(const ExampleConfig& cfg, std::uint64_t seed);

struct Dataset {
    std::vector<LabeledExample> examples;
};

Dataset make_dataset(const TriangleMesh& object, int n_fg, int n_bg, const ExampleConfig& cfg,
                     const PoseGrid& grid, std::uint64_t seed, int workers = 1);

// On-disk layout: manifest.txt plus one TNT1 tensor per example. Manifest
// data lines are "id seed fg yaw pitch roll p0 .. p16".
void write_dataset(const std::string& dir, const Dataset& ds);
Dataset read_dataset(const std::string& dir);

// Rebuilds every example from the seeds recorded in a manifest; byte-identical
// to the original dataset.
Dataset regenerate_dataset(const std::string& manifest_path, const TriangleMesh& object,
                           const ExampleConfig& cfg, const PoseGrid& grid, int workers = 1);

}  // namespace tnet
