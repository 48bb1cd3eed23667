#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tnet/template_layer.hpp"

namespace tnet {

Tensor area_resample(const Tensor& map, int target_h, int target_w) {
    if (map.rank() != 2) throw std::invalid_argument("area_resample expects a rank-2 map");
    const int sh = map.extent(0), sw = map.extent(1);
    Tensor out({target_h, target_w});
    const double ry = static_cast<double>(sh) / target_h;
    const double rx = static_cast<double>(sw) / target_w;
    for (int ti = 0; ti < target_h; ++ti) {
        const double y0 = ti * ry, y1 = (ti + 1) * ry;
        for (int tj = 0; tj < target_w; ++tj) {
            const double x0 = tj * rx, x1 = (tj + 1) * rx;
            double acc = 0.0;
            for (int si = static_cast<int>(std::floor(y0)); si < sh && si < y1; ++si) {
                const double oy = std::min<double>(si + 1, y1) - std::max<double>(si, y0);
                if (oy <= 0.0) continue;
                for (int sj = static_cast<int>(std::floor(x0)); sj < sw && sj < x1; ++sj) {
                    const double ox = std::min<double>(sj + 1, x1) - std::max<double>(sj, x0);
                    if (ox <= 0.0) continue;
                    acc += oy * ox * map.at(si, sj);
                }
            }
            out.at(ti, tj) = static_cast<float>(acc / (ry * rx));
        }
    }
    return out;
}

std::vector<Vec3> viewpoint_grid(int n_yaw, double yaw_lo, double yaw_hi, int n_pitch, double pitch_lo,
                                 double pitch_hi, int n_roll, double roll_lo, double roll_hi) {
    auto steps = [](int n, double lo, double hi, int i) {
        return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
    };
    std::vector<Vec3> views;
    views.reserve(static_cast<std::size_t>(n_yaw) * n_pitch * n_roll);
    for (int r = 0; r < n_roll; ++r)
        for (int p = 0; p < n_pitch; ++p)
            for (int y = 0; y < n_yaw; ++y)
                views.push_back({steps(n_yaw, yaw_lo, yaw_hi, y), steps(n_pitch, pitch_lo, pitch_hi, p),
                                 steps(n_roll, roll_lo, roll_hi, r)});
    return views;
}

std::vector<Vec3> paper_viewpoint_grid() {
    return viewpoint_grid(5, deg2rad(-60), deg2rad(60), 3, deg2rad(-30), deg2rad(30), 3, deg2rad(-30),
                          deg2rad(30));
}

std::vector<Vec3> desk_viewpoint_grid() {
    return viewpoint_grid(3, deg2rad(-60), deg2rad(60), 3, deg2rad(-30), deg2rad(30), 1, 0.0, 0.0);
}

TemplateBank build_bank(const TriangleMesh& mesh, const std::vector<Vec3>& viewpoints, int render_res,
                        int target_h, int target_w, const BankBuildConfig& cfg) {
    if (viewpoints.empty()) throw std::invalid_argument("build_bank: no viewpoints");
    if (mesh.triangles.empty()) throw std::invalid_argument("build_bank: mesh has no triangles");

    TemplateBank bank;
    bank.viewpoints = viewpoints;
    bank.source_resolution = render_res;
    bank.maps = Tensor({static_cast<int>(viewpoints.size()) * 3, target_h, target_w});

    SceneSpec scene;
    scene.camera = cfg.camera;
    scene.target = mesh;
    scene.target_pose.translation = {0.0, 0.0, cfg.distance};
    scene.floor = false;

    for (std::size_t v = 0; v < viewpoints.size(); ++v) {
        scene.target_pose.rotation = rot_ypr(viewpoints[v].x, viewpoints[v].y, viewpoints[v].z);
        const DepthImage depth = render_depth(scene, cfg.camera.width, cfg.camera.height);
        const OrthoPatch patch = depth_to_orthopatch(depth, cfg.scale, render_res, render_res,
                                                     scene.target_pose.translation);
        if (foreground_pixel_count(patch) == 0) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "build_bank: empty render for viewpoint %zu (yaw %.4f pitch %.4f roll %.4f)", v,
                          viewpoints[v].x, viewpoints[v].y, viewpoints[v].z);
            throw std::runtime_error(buf);
        }
        for (int c = 0; c < 3; ++c) {
            Tensor channel({render_res, render_res});
            for (int i = 0; i < render_res; ++i)
                for (int j = 0; j < render_res; ++j) channel.at(i, j) = patch.normals.at(c, i, j);
            const Tensor small = area_resample(channel, target_h, target_w);
            const int m = static_cast<int>(v) * 3 + c;
            for (int i = 0; i < target_h; ++i)
                for (int j = 0; j < target_w; ++j) bank.maps.at(m, i, j) = small.at(i, j);
        }
    }
    validate_bank(bank);
    return bank;
}

void save_bank(const std::string& dir, const TemplateBank& bank) {
    std::filesystem::create_directories(dir);
    write_tnt(dir + "/maps.tnt", bank.maps);
    std::ofstream f(dir + "/viewpoints.txt");
    if (!f) throw std::runtime_error("cannot open for write: " + dir + "/viewpoints.txt");
    f << "source_resolution " << bank.source_resolution << '\n';
    char buf[128];
    for (const Vec3& v : bank.viewpoints) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v.x, v.y, v.z);
        f << buf;
    }
}

TemplateBank load_bank(const std::string& dir) {
    TemplateBank bank;
    bank.maps = read_tnt(dir + "/maps.tnt");
    std::ifstream f(dir + "/viewpoints.txt");
    if (!f) throw std::runtime_error("cannot open for read: " + dir + "/viewpoints.txt");
    std::string tag;
    if (!(f >> tag >> bank.source_resolution) || tag != "source_resolution")
        throw std::runtime_error("bad viewpoints header in " + dir);
    Vec3 v;
    while (f >> v.x >> v.y >> v.z) bank.viewpoints.push_back(v);
    validate_bank(bank);
    return bank;
}

}  // namespace tnet
