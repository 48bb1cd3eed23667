#include "tnet/orthopatch.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tnet {

DepthImage::DepthImage(int w, int h, Intrinsics k) : width(w), height(h), intrinsics(k) {
    if (w < 2 || h < 2) throw std::invalid_argument("DepthImage: dimensions must be >= 2");
    if (!(k.fx > 0.0) || !(k.fy > 0.0)) throw std::invalid_argument("DepthImage: fx and fy must be > 0");
    depth.assign(static_cast<std::size_t>(w) * h, 0.0f);
}

PointCloud backproject(const DepthImage& d) {
    if (!(d.intrinsics.fx > 0.0) || !(d.intrinsics.fy > 0.0))
        throw std::invalid_argument("backproject: fx and fy must be > 0");
    PointCloud c;
    c.width = d.width;
    c.height = d.height;
    c.points.assign(static_cast<std::size_t>(d.width) * d.height, Vec3{});
    c.valid.assign(c.points.size(), 0);
    for (int v = 0; v < d.height; ++v) {
        for (int u = 0; u < d.width; ++u) {
            const double z = d.at(u, v);
            if (z <= 0.0) continue;
            const std::size_t i = static_cast<std::size_t>(v) * d.width + u;
            c.points[i] = {(u - d.intrinsics.cx) * z / d.intrinsics.fx,
                           (v - d.intrinsics.cy) * z / d.intrinsics.fy, z};
            c.valid[i] = 1;
        }
    }
    return c;
}

namespace {

// Flip so that (n_z, n_y, n_x) is lexicographically >= 0. The cross product
// sign is arbitrary and the camera-facing vector has n_z <= 0; storing the
// flipped vector keeps facing surfaces at mapped z-channel 1.
Vec3 canonical_sign(Vec3 n) {
    bool flip;
    if (n.z != 0.0)
        flip = n.z < 0.0;
    else if (n.y != 0.0)
        flip = n.y < 0.0;
    else
        flip = n.x < 0.0;
    return flip ? -n : n;
}

}  // namespace

NormalMap estimate_normals(const PointCloud& cloud, double max_depth_jump) {
    NormalMap m;
    m.width = cloud.width;
    m.height = cloud.height;
    m.normals.assign(static_cast<std::size_t>(cloud.width) * cloud.height, Vec3{});
    m.valid.assign(m.normals.size(), 0);

    for (int v = 1; v + 1 < cloud.height; ++v) {
        for (int u = 1; u + 1 < cloud.width; ++u) {
            if (!cloud.is_valid(u, v) || !cloud.is_valid(u - 1, v) || !cloud.is_valid(u + 1, v) ||
                !cloud.is_valid(u, v - 1) || !cloud.is_valid(u, v + 1))
                continue;
            const double z = cloud.at(u, v).z;
            if (std::abs(cloud.at(u - 1, v).z - z) > max_depth_jump ||
                std::abs(cloud.at(u + 1, v).z - z) > max_depth_jump ||
                std::abs(cloud.at(u, v - 1).z - z) > max_depth_jump ||
                std::abs(cloud.at(u, v + 1).z - z) > max_depth_jump)
                continue;
            const Vec3 du = cloud.at(u + 1, v) - cloud.at(u - 1, v);
            const Vec3 dv = cloud.at(u, v + 1) - cloud.at(u, v - 1);
            const Vec3 n = cross(du, dv);
            const double len = norm(n);
            if (len <= 0.0) continue;
            const std::size_t i = static_cast<std::size_t>(v) * cloud.width + u;
            m.normals[i] = canonical_sign(n * (1.0 / len));
            m.valid[i] = 1;
        }
    }
    return m;
}

OrthoPatch orthoproject(const PointCloud& cloud, const NormalMap& normals, double scale, int patch_h,
                        int patch_w, const Vec3& center) {
    if (!(scale > 0.0)) throw std::invalid_argument("orthoproject: scale must be > 0");
    if (cloud.width != normals.width || cloud.height != normals.height)
        throw std::invalid_argument("orthoproject: cloud and normal map dimensions differ");

    OrthoPatch p;
    p.scale = scale;
    p.origin = {center.x - 0.5 * patch_w * scale, center.y - 0.5 * patch_h * scale, 0.0};
    p.normals = Tensor({3, patch_h, patch_w});

    std::vector<float> zbuf(static_cast<std::size_t>(patch_h) * patch_w,
                            std::numeric_limits<float>::infinity());

    for (int v = 0; v < cloud.height; ++v) {
        for (int u = 0; u < cloud.width; ++u) {
            if (!cloud.is_valid(u, v)) continue;
            const Vec3& pt = cloud.at(u, v);
            const int j = static_cast<int>(std::floor((pt.x - p.origin.x) / scale));
            const int i = static_cast<int>(std::floor((pt.y - p.origin.y) / scale));
            if (i < 0 || i >= patch_h || j < 0 || j >= patch_w) continue;
            const std::size_t cell = static_cast<std::size_t>(i) * patch_w + j;
            if (static_cast<float>(pt.z) >= zbuf[cell]) continue;
            zbuf[cell] = static_cast<float>(pt.z);
            if (normals.is_valid(u, v)) {
                const Vec3& n = normals.at(u, v);
                p.normals.at(0, i, j) = static_cast<float>(0.5 * (n.x + 1.0));
                p.normals.at(1, i, j) = static_cast<float>(0.5 * (n.y + 1.0));
                p.normals.at(2, i, j) = static_cast<float>(0.5 * (n.z + 1.0));
            } else {
                p.normals.at(0, i, j) = 0.0f;
                p.normals.at(1, i, j) = 0.0f;
                p.normals.at(2, i, j) = 0.0f;
            }
        }
    }
    return p;
}

OrthoPatch depth_to_orthopatch(const DepthImage& d, double scale, int patch_h, int patch_w,
                               const Vec3& center, double max_depth_jump) {
    const PointCloud cloud = backproject(d);
    const NormalMap nm = estimate_normals(cloud, max_depth_jump);
    return orthoproject(cloud, nm, scale, patch_h, patch_w, center);
}

int foreground_pixel_count(const OrthoPatch& p) {
    int n = 0;
    for (int i = 0; i < p.height(); ++i)
        for (int j = 0; j < p.width(); ++j)
            if (p.occupied(i, j)) ++n;
    return n;
}

static_assert(std::endian::native == std::endian::little, "DPT1 I/O assumes a little-endian host");

void write_dpt(const std::string& path, const DepthImage& d) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "DPT1 " << d.width << ' ' << d.height << '\n';
    std::vector<std::uint16_t> mm(d.depth.size());
    for (std::size_t i = 0; i < d.depth.size(); ++i) {
        const double v = std::lround(d.depth[i] * 1000.0);
        mm[i] = static_cast<std::uint16_t>(v < 0.0 ? 0.0 : (v > 65535.0 ? 65535.0 : v));
    }
    f.write(reinterpret_cast<const char*>(mm.data()), static_cast<std::streamsize>(mm.size() * 2));
    if (!f) throw std::runtime_error("short write: " + path);
}

DepthImage read_dpt(const std::string& path, Intrinsics k) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for read: " + path);
    std::string header;
    if (!std::getline(f, header)) throw std::runtime_error("missing DPT1 header in " + path);
    std::istringstream hs(header);
    std::string magic;
    int w = 0, h = 0;
    if (!(hs >> magic >> w >> h) || magic != "DPT1" || w < 2 || h < 2)
        throw std::runtime_error("bad DPT1 header in " + path);
    DepthImage d(w, h, k);
    std::vector<std::uint16_t> mm(static_cast<std::size_t>(w) * h);
    f.read(reinterpret_cast<char*>(mm.data()), static_cast<std::streamsize>(mm.size() * 2));
    if (f.gcount() != static_cast<std::streamsize>(mm.size() * 2))
        throw std::runtime_error("DPT1 payload truncated in " + path);
    for (std::size_t i = 0; i < mm.size(); ++i) d.depth[i] = static_cast<float>(mm[i]) / 1000.0f;
    return d;
}

void write_intrinsics(const std::string& path, const Intrinsics& k) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", k.fx, k.fy, k.cx, k.cy);
    f << buf;
}

Intrinsics read_intrinsics(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for read: " + path);
    Intrinsics k;
    if (!(f >> k.fx >> k.fy >> k.cx >> k.cy)) throw std::runtime_error("bad intrinsics file: " + path);
    if (!(k.fx > 0.0) || !(k.fy > 0.0)) throw std::runtime_error("non-positive focal length in " + path);
    return k;
}

}  // namespace tnet
