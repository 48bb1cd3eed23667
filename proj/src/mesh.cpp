#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tnet/synthgen.hpp"

namespace tnet {

TriangleMesh cleanup_mesh(TriangleMesh m) {
    const int nv = static_cast<int>(m.vertices.size());
    std::vector<std::array<int, 3>> kept;
    kept.reserve(m.triangles.size());
    for (const auto& t : m.triangles) {
        for (int idx : t)
            if (idx < 0 || idx >= nv)
                throw std::invalid_argument("mesh triangle index " + std::to_string(idx) + " out of range");
        const Vec3 e1 = m.vertices[static_cast<std::size_t>(t[1])] - m.vertices[static_cast<std::size_t>(t[0])];
        const Vec3 e2 = m.vertices[static_cast<std::size_t>(t[2])] - m.vertices[static_cast<std::size_t>(t[0])];
        if (norm(cross(e1, e2)) <= 1e-14) continue;  // degenerate
        kept.push_back(t);
    }
    m.triangles = std::move(kept);
    if (m.triangles.empty()) throw std::invalid_argument("mesh has no non-degenerate triangles");
    return m;
}

namespace {

void center_mesh(TriangleMesh& m) {
    Vec3 lo = m.vertices.front(), hi = lo;
    for (const Vec3& v : m.vertices) {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    const Vec3 c = (lo + hi) * 0.5;
    for (Vec3& v : m.vertices) v = v - c;
}

void add_box(TriangleMesh& m, Vec3 lo, Vec3 hi) {
    const int b = static_cast<int>(m.vertices.size());
    m.vertices.push_back({lo.x, lo.y, lo.z});
    m.vertices.push_back({hi.x, lo.y, lo.z});
    m.vertices.push_back({hi.x, hi.y, lo.z});
    m.vertices.push_back({lo.x, hi.y, lo.z});
    m.vertices.push_back({lo.x, lo.y, hi.z});
    m.vertices.push_back({hi.x, lo.y, hi.z});
    m.vertices.push_back({hi.x, hi.y, hi.z});
    m.vertices.push_back({lo.x, hi.y, hi.z});
    const int f[12][3] = {{0, 1, 2}, {0, 2, 3}, {4, 6, 5}, {4, 7, 6}, {0, 4, 5}, {0, 5, 1},
                          {3, 2, 6}, {3, 6, 7}, {0, 3, 7}, {0, 7, 4}, {1, 5, 6}, {1, 6, 2}};
    for (const auto& t : f) m.triangles.push_back({b + t[0], b + t[1], b + t[2]});
}

}  // namespace

TriangleMesh make_box(double w, double h, double d) {
    TriangleMesh m;
    add_box(m, {-w / 2, -h / 2, -d / 2}, {w / 2, h / 2, d / 2});
    return cleanup_mesh(std::move(m));
}

TriangleMesh make_plate(double w, double h, double thickness) { return make_box(w, h, thickness); }

TriangleMesh make_cylinder(double radius, double height, int segments) {
    TriangleMesh m;
    const double h2 = height / 2;
    for (int i = 0; i < segments; ++i) {
        const double a = 2.0 * 3.14159265358979323846 * i / segments;
        m.vertices.push_back({radius * std::cos(a), -h2, radius * std::sin(a)});
        m.vertices.push_back({radius * std::cos(a), h2, radius * std::sin(a)});
    }
    const int top = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, -h2, 0});
    m.vertices.push_back({0, h2, 0});
    for (int i = 0; i < segments; ++i) {
        const int j = (i + 1) % segments;
        m.triangles.push_back({2 * i, 2 * j, 2 * i + 1});
        m.triangles.push_back({2 * i + 1, 2 * j, 2 * j + 1});
        m.triangles.push_back({top, 2 * j, 2 * i});          // bottom cap
        m.triangles.push_back({top + 1, 2 * i + 1, 2 * j + 1});  // top cap
    }
    return cleanup_mesh(std::move(m));
}

TriangleMesh make_l_bracket(double arm_len, double arm_width, double depth, double thickness) {
    TriangleMesh m;
    add_box(m, {0, 0, -depth / 2}, {arm_len, thickness, depth / 2});
    add_box(m, {0, 0, -depth / 2}, {thickness, arm_width, depth / 2});
    center_mesh(m);
    return cleanup_mesh(std::move(m));
}

TriangleMesh make_stepped_block(double w, double h, double d, double step_w, double step_h) {
    TriangleMesh m;
    add_box(m, {-w / 2, -h / 2, -d / 2}, {w / 2, h / 2 - step_h, d / 2});
    add_box(m, {-w / 2, h / 2 - step_h, -d / 2}, {-w / 2 + step_w, h / 2, d / 2});
    center_mesh(m);
    return cleanup_mesh(std::move(m));
}

TriangleMesh make_capped_cone(double r_bottom, double r_top, double height, int segments) {
    TriangleMesh m;
    const double h2 = height / 2;
    for (int i = 0; i < segments; ++i) {
        const double a = 2.0 * 3.14159265358979323846 * i / segments;
        m.vertices.push_back({r_bottom * std::cos(a), h2, r_bottom * std::sin(a)});
        m.vertices.push_back({r_top * std::cos(a), -h2, r_top * std::sin(a)});
    }
    const int centers = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, h2, 0});
    m.vertices.push_back({0, -h2, 0});
    for (int i = 0; i < segments; ++i) {
        const int j = (i + 1) % segments;
        m.triangles.push_back({2 * i, 2 * i + 1, 2 * j});
        m.triangles.push_back({2 * i + 1, 2 * j + 1, 2 * j});
        m.triangles.push_back({centers, 2 * j, 2 * i});
        m.triangles.push_back({centers + 1, 2 * i + 1, 2 * j + 1});
    }
    return cleanup_mesh(std::move(m));
}

TriangleMesh shape_by_name(const std::string& name) {
    if (name == "box") return make_box(0.20, 0.12, 0.08);
    if (name == "cylinder") return make_cylinder(0.05, 0.18);
    if (name == "l-bracket") return make_l_bracket(0.18, 0.12, 0.06, 0.035);
    if (name == "stepped-block") return make_stepped_block(0.20, 0.12, 0.08, 0.12, 0.05);
    if (name == "capped-cone") return make_capped_cone(0.07, 0.03, 0.15);
    if (name == "plate") return make_plate(0.30, 0.30, 0.02);
    throw std::invalid_argument("unknown shape: " + name + " (expected one of box, cylinder, l-bracket, "
                                "stepped-block, capped-cone, plate)");
}

std::vector<std::string> shape_names() {
    return {"box", "cylinder", "l-bracket", "stepped-block", "capped-cone", "plate"};
}

TriangleMesh load_obj(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open OBJ file: " + path);
    TriangleMesh m;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z))
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad vertex line");
            m.vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> t{};
            if (!(ls >> t[0] >> t[1] >> t[2]))
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": bad face line (triangles with plain indices only)");
            int extra;
            if (ls >> extra)
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": only triangles supported");
            for (int& idx : t) idx -= 1;  // 1-based in the file
            m.triangles.push_back(t);
        }
        // other tags ignored
    }
    return cleanup_mesh(std::move(m));
}

Vec3 mesh_extent(const TriangleMesh& m) {
    if (m.vertices.empty()) return {};
    Vec3 lo = m.vertices.front(), hi = lo;
    for (const Vec3& v : m.vertices) {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    return hi - lo;
}

}  // namespace tnet
