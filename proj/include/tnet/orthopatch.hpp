#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tnet/geometry.hpp"
#include "tnet/tensor.hpp"

namespace tnet {

struct Intrinsics {
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
};

// Calibrated depth frame; depth is planar Z in meters, 0 = missing.
struct DepthImage {
    int width = 0, height = 0;
    std::vector<float> depth;
    Intrinsics intrinsics;

    DepthImage() = default;
    DepthImage(int w, int h, Intrinsics k);

    float at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
    float& at(int u, int v) { return depth[static_cast<std::size_t>(v) * width + u]; }
};

// Organized point cloud; pixel adjacency preserved, invalid entries flagged.
struct PointCloud {
    int width = 0, height = 0;
    std::vector<Vec3> points;
    std::vector<std::uint8_t> valid;

    const Vec3& at(int u, int v) const { return points[static_cast<std::size_t>(v) * width + u]; }
    bool is_valid(int u, int v) const { return valid[static_cast<std::size_t>(v) * width + u] != 0; }
};

// Per-pixel unit normals, sign-canonicalized (n_z >= 0 after flipping the
// camera-facing vector); invalid where neighbors are missing or across
// depth discontinuities.
struct NormalMap {
    int width = 0, height = 0;
    std::vector<Vec3> normals;
    std::vector<std::uint8_t> valid;

    const Vec3& at(int u, int v) const { return normals[static_cast<std::size_t>(v) * width + u]; }
    bool is_valid(int u, int v) const { return valid[static_cast<std::size_t>(v) * width + u] != 0; }
};

// Metric orthographic surface-normal patch. normals is [3,H,W] with
// channels (n+1)/2 in [0,1]; cells with no surface are exactly 0.
struct OrthoPatch {
    Tensor normals;
    double scale = 0.0;  // meters per pixel
    Vec3 origin;         // world coordinates of pixel (0,0)

    int height() const { return normals.extent(1); }
    int width() const { return normals.extent(2); }
    bool occupied(int i, int j) const {
        return normals.at(0, i, j) != 0.0f || normals.at(1, i, j) != 0.0f || normals.at(2, i, j) != 0.0f;
    }
};

// X = (u - cx) * Z / fx, Y = (v - cy) * Z / fy; missing depth skipped.
PointCloud backproject(const DepthImage& d);

// Central-difference tangents; neighbors across a depth jump larger than
// max_depth_jump are treated as missing.
NormalMap estimate_normals(const PointCloud& cloud, double max_depth_jump = 0.04);

// Bins points onto an axis-aligned orthographic grid (projecting out the
// camera Z axis); nearest-to-camera point wins each cell and contributes
// its mapped normal. Cells whose winning point lacks a valid normal stay
// zero.
OrthoPatch orthoproject(const PointCloud& cloud, const NormalMap& normals, double scale, int patch_h,
                        int patch_w, const Vec3& center);

OrthoPatch depth_to_orthopatch(const DepthImage& d, double scale, int patch_h, int patch_w,
                               const Vec3& center, double max_depth_jump = 0.04);

int foreground_pixel_count(const OrthoPatch& p);

// DPT1 file format: ASCII header "DPT1 w h\n" then w*h little-endian
// uint16 millimeters. Intrinsics live in a sidecar text file "fx fy cx cy".
void write_dpt(const std::string& path, const DepthImage& d);
DepthImage read_dpt(const std::string& path, Intrinsics k);
void write_intrinsics(const std::string& path, const Intrinsics& k);
Intrinsics read_intrinsics(const std::string& path);

}  // namespace tnet
