#include <cmath>
#include <limits>

#include "tnet/synthgen.hpp"

namespace tnet {

namespace {

struct PlacedMesh {
    std::vector<Vec3> verts;  // camera frame
    const std::vector<std::array<int, 3>>* tris = nullptr;
    Vec3 lo, hi;  // AABB
    std::int32_t id = -1;
};

// Möller-Trumbore with an unnormalized direction whose z component is 1,
// so the hit parameter t is the planar depth directly.
inline bool ray_triangle(const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c, double& t) {
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 pvec = cross(dir, e1);
    const double det = dot(e2, pvec);
    if (std::abs(det) < 1e-14) return false;
    const double inv_det = 1.0 / det;
    const Vec3 tvec = Vec3{} - a;  // ray origin is the camera center
    const double u = dot(tvec, pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return false;
    const Vec3 qvec = cross(tvec, e2);
    const double v = dot(dir, qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return false;
    t = dot(e1, qvec) * inv_det;
    return t > 1e-9;
}

// Slab test against an AABB for a ray from the origin.
inline bool ray_aabb(const Vec3& dir, const Vec3& lo, const Vec3& hi) {
    double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
    const double d[3] = {dir.x, dir.y, dir.z};
    const double l[3] = {lo.x, lo.y, lo.z};
    const double h[3] = {hi.x, hi.y, hi.z};
    for (int k = 0; k < 3; ++k) {
        if (std::abs(d[k]) < 1e-18) {
            if (0.0 < l[k] || 0.0 > h[k]) return false;
        } else {
            double t0 = l[k] / d[k], t1 = h[k] / d[k];
            if (t0 > t1) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
            if (tmin > tmax) return false;
        }
    }
    return true;
}

PlacedMesh place(const TriangleMesh& m, const MeshPose& pose, const MeshPose& camera, std::int32_t id) {
    PlacedMesh p;
    p.tris = &m.triangles;
    p.id = id;
    p.verts.reserve(m.vertices.size());
    const Mat3 cam_rot_t = camera.rotation.transposed();
    for (const Vec3& v : m.vertices) {
        const Vec3 world = pose.rotation * v + pose.translation;
        p.verts.push_back(cam_rot_t * (world - camera.translation));
    }
    p.lo = p.hi = p.verts.front();
    for (const Vec3& v : p.verts) {
        p.lo = {std::min(p.lo.x, v.x), std::min(p.lo.y, v.y), std::min(p.lo.z, v.z)};
        p.hi = {std::max(p.hi.x, v.x), std::max(p.hi.y, v.y), std::max(p.hi.z, v.z)};
    }
    return p;
}

}  // namespace

RenderResult render_scene(const SceneSpec& scene, int width, int height) {
    if (scene.has_target && !(scene.target_pose.translation.z > 0.0))
        throw std::invalid_argument("scene target must be at positive depth in front of the camera");
    if (scene.clutter.size() != scene.clutter_poses.size())
        throw std::invalid_argument("scene clutter meshes and poses differ in count");

    TriangleMesh floor_mesh;  // must outlive `placed`, which borrows its triangles
    std::vector<PlacedMesh> placed;
    if (scene.has_target) placed.push_back(place(scene.target, scene.target_pose, scene.camera.pose, 0));
    for (std::size_t i = 0; i < scene.clutter.size(); ++i)
        placed.push_back(place(scene.clutter[i], scene.clutter_poses[i], scene.camera.pose,
                               static_cast<std::int32_t>(i) + 1));
    if (scene.floor) {
        floor_mesh.vertices = {{-2.0, scene.floor_y, 0.25}, {2.0, scene.floor_y, 0.25},
                               {2.0, scene.floor_y, 4.0}, {-2.0, scene.floor_y, 4.0}};
        floor_mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
        placed.push_back(place(floor_mesh, MeshPose{}, scene.camera.pose, -2));
    }

    RenderResult r;
    r.depth = DepthImage(width, height, scene.camera.intrinsics);
    r.hit_id.assign(static_cast<std::size_t>(width) * height, -1);

    const Intrinsics& k = scene.camera.intrinsics;
    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            const Vec3 dir{(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0};
            double best = std::numeric_limits<double>::infinity();
            std::int32_t best_id = -1;
            for (const PlacedMesh& pm : placed) {
                if (!ray_aabb(dir, pm.lo, pm.hi)) continue;
                for (const auto& t : *pm.tris) {
                    double hit;
                    if (ray_triangle(dir, pm.verts[static_cast<std::size_t>(t[0])],
                                     pm.verts[static_cast<std::size_t>(t[1])],
                                     pm.verts[static_cast<std::size_t>(t[2])], hit) &&
                        hit < best) {
                        best = hit;
                        best_id = pm.id;
                    }
                }
            }
            if (best_id != -1) {
                r.depth.at(u, v) = static_cast<float>(best);
                r.hit_id[static_cast<std::size_t>(v) * width + u] = best_id;
            }
        }
    }
    return r;
}

DepthImage render_depth(const SceneSpec& scene, int width, int height) {
    return render_scene(scene, width, height).depth;
}

}  // namespace tnet
