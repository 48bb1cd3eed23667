#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tnet/rng.hpp"
#include "tnet/synthgen.hpp"
#include "tnet/version.hpp"

namespace tnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

void check_view_in_range(const Vec3& v, const ViewRange& r) {
    const double eps = 1e-9;
    if (v.x < r.yaw_lo - eps || v.x > r.yaw_hi + eps || v.y < r.pitch_lo - eps ||
        v.y > r.pitch_hi + eps || v.z < r.roll_lo - eps || v.z > r.roll_hi + eps)
        throw std::invalid_argument("view angles outside the configured range");
}

MeshPose sample_clutter_pose(std::mt19937_64& rng, const Vec3& around, const ClutterConfig& cc) {
    MeshPose p;
    p.rotation = rot_ypr(uniform(rng, -kPi, kPi), uniform(rng, -0.4, 0.4), uniform(rng, -kPi, kPi));
    const double theta = uniform(rng, 0.0, 2.0 * kPi);
    const double r = uniform(rng, cc.lateral_min, cc.lateral_max);
    p.translation = around + Vec3{r * std::cos(theta), 0.6 * r * std::sin(theta), uniform(rng, -0.12, 0.30)};
    return p;
}

void sample_clutter(std::mt19937_64& rng, const Vec3& around, const ClutterConfig& cc,
                    SceneSpec& scene) {
    scene.clutter.clear();
    scene.clutter_poses.clear();
    if (!cc.always_include.empty()) {
        scene.clutter.push_back(shape_by_name(cc.always_include));
        scene.clutter_poses.push_back(sample_clutter_pose(rng, around, cc));
    }
    const int n = cc.max_objects >= cc.min_objects ? uniform_int(rng, cc.min_objects, cc.max_objects) : 0;
    for (int i = 0; i < n; ++i) {
        const int pick = uniform_int(rng, 0, static_cast<int>(cc.shapes.size()) - 1);
        scene.clutter.push_back(shape_by_name(cc.shapes[static_cast<std::size_t>(pick)]));
        scene.clutter_poses.push_back(sample_clutter_pose(rng, around, cc));
    }
}

Tensor render_patch(const SceneSpec& scene, const ExampleConfig& cfg, const Vec3& center) {
    const DepthImage depth = render_depth(scene, cfg.camera.width, cfg.camera.height);
    const OrthoPatch patch = depth_to_orthopatch(depth, cfg.scale, cfg.patch_h, cfg.patch_w, center);
    return patch.normals;
}

}  // namespace

LabeledExample make_example(const TriangleMesh& object, std::optional<Vec3> view_angles,
                            const ExampleConfig& cfg, const PoseGrid& grid, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);

    Vec3 view;
    if (view_angles) {
        view = *view_angles;
    } else {
        view = {uniform(rng, cfg.views.yaw_lo, cfg.views.yaw_hi),
                uniform(rng, cfg.views.pitch_lo, cfg.views.pitch_hi),
                uniform(rng, cfg.views.roll_lo, cfg.views.roll_hi)};
    }
    check_view_in_range(view, cfg.views);

    LabeledExample ex;
    ex.seed = seed;
    ex.foreground = true;
    ex.yaw = view.x;
    ex.pitch = view.y;
    ex.roll = view.z;
    ex.rotation = rot_ypr(view.x, view.y, view.z);
    ex.label = soft_labels(ex.rotation, grid);

    SceneSpec scene;
    scene.camera = cfg.camera;
    scene.target = object;
    scene.target_pose.rotation = ex.rotation;
    scene.target_pose.translation = {0.0, 0.0, cfg.target_distance};
    scene.floor = cfg.clutter.floor;
    scene.shift = {uniform_int(rng, -cfg.shift_max, cfg.shift_max),
                   uniform_int(rng, -cfg.shift_max, cfg.shift_max)};

    for (int attempt = 0;; ++attempt) {
        sample_clutter(rng, scene.target_pose.translation, cfg.clutter, scene);
        const RenderResult r = render_scene(scene, cfg.camera.width, cfg.camera.height);
        int visible = 0;
        for (std::int32_t id : r.hit_id)
            if (id == 0) ++visible;
        if (visible >= cfg.min_visible_px) {
            const Vec3 center = scene.target_pose.translation +
                                Vec3{scene.shift[0] * cfg.scale, scene.shift[1] * cfg.scale, 0.0};
            const OrthoPatch patch =
                depth_to_orthopatch(r.depth, cfg.scale, cfg.patch_h, cfg.patch_w, center);
            ex.patch = patch.normals;
            return ex;
        }
        if (attempt + 1 >= cfg.max_retries)
            throw std::runtime_error("target stayed occluded after " + std::to_string(cfg.max_retries) +
                                     " clutter resamples (seed " + std::to_string(seed) + ")");
    }
}

LabeledExample make_background(const ExampleConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);

    LabeledExample ex;
    ex.seed = seed;
    ex.foreground = false;
    ex.label = background_label();

    SceneSpec scene;
    scene.camera = cfg.camera;
    scene.has_target = false;
    scene.floor = cfg.clutter.floor;
    scene.shift = {uniform_int(rng, -cfg.shift_max, cfg.shift_max),
                   uniform_int(rng, -cfg.shift_max, cfg.shift_max)};

    const Vec3 around{0.0, 0.0, cfg.target_distance};
    ClutterConfig cc = cfg.clutter;
    cc.lateral_min = 0.0;  // background clutter may sit anywhere in the patch
    cc.min_objects = std::max(1, cc.min_objects);
    sample_clutter(rng, around, cc, scene);

    const Vec3 center = around + Vec3{scene.shift[0] * cfg.scale, scene.shift[1] * cfg.scale, 0.0};
    ex.patch = render_patch(scene, cfg, center);
    return ex;
}

Dataset make_dataset(const TriangleMesh& object, int n_fg, int n_bg, const ExampleConfig& cfg,
                     const PoseGrid& grid, std::uint64_t seed, int workers) {
    if (n_fg < 1 || n_bg < 1) throw std::invalid_argument("make_dataset: n_fg and n_bg must be >= 1");

    Dataset ds;
    ds.examples.resize(static_cast<std::size_t>(n_fg + n_bg));

    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_fg + n_bg) return;
            try {
                if (i < n_fg)
                    ds.examples[static_cast<std::size_t>(i)] =
                        make_example(object, std::nullopt, cfg, grid, mix_seed(seed, 1, static_cast<std::uint64_t>(i)));
                else
                    ds.examples[static_cast<std::size_t>(i)] =
                        make_background(cfg, mix_seed(seed, 2, static_cast<std::uint64_t>(i - n_fg)));
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

    std::mt19937_64 rng = make_rng(mix_seed(seed, 3, 0));
    std::shuffle(ds.examples.begin(), ds.examples.end(), rng);
    return ds;
}

namespace {

std::string example_filename(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ex%05zu.tnt", i);
    return buf;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_dataset(const std::string& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir);
    std::ofstream mf(dir + "/manifest.txt");
    if (!mf) throw std::runtime_error("cannot open for write: " + dir + "/manifest.txt");
    mf << "# " << kVersion << " dataset\n";
    mf << "# count = " << ds.examples.size() << "\n";
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
        const LabeledExample& ex = ds.examples[i];
        mf << i << ' ' << ex.seed << ' ' << (ex.foreground ? 1 : 0) << ' ' << fmt17(ex.yaw) << ' '
           << fmt17(ex.pitch) << ' ' << fmt17(ex.roll);
        for (double p : ex.label.pose) mf << ' ' << fmt17(p);
        mf << '\n';
        write_tnt(dir + "/" + example_filename(i), ex.patch);
    }
}

Dataset read_dataset(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.txt");
    if (!mf) throw std::runtime_error("cannot open for read: " + dir + "/manifest.txt");
    Dataset ds;
    std::string line;
    while (std::getline(mf, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::size_t id;
        LabeledExample ex;
        int fg;
        if (!(ls >> id >> ex.seed >> fg >> ex.yaw >> ex.pitch >> ex.roll))
            throw std::runtime_error("bad dataset manifest line: " + line);
        ex.foreground = fg != 0;
        for (double& p : ex.label.pose)
            if (!(ls >> p)) throw std::runtime_error("bad dataset manifest label in line: " + line);
        ex.label.fg = ex.foreground ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
        ex.rotation = rot_ypr(ex.yaw, ex.pitch, ex.roll);
        ex.patch = read_tnt(dir + "/" + example_filename(id));
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) throw std::runtime_error("dataset manifest has no examples: " + dir);
    return ds;
}

Dataset regenerate_dataset(const std::string& manifest_path, const TriangleMesh& object,
                           const ExampleConfig& cfg, const PoseGrid& grid, int workers) {
    std::ifstream mf(manifest_path);
    if (!mf) throw std::runtime_error("cannot open for read: " + manifest_path);
    struct Row {
        std::uint64_t seed;
        bool fg;
    };
    std::vector<Row> rows;
    std::string line;
    while (std::getline(mf, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::size_t id;
        Row r;
        int fg;
        if (!(ls >> id >> r.seed >> fg)) throw std::runtime_error("bad dataset manifest line: " + line);
        r.fg = fg != 0;
        rows.push_back(r);
    }

    Dataset ds;
    ds.examples.resize(rows.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= rows.size()) return;
            try {
                ds.examples[i] = rows[i].fg ? make_example(object, std::nullopt, cfg, grid, rows[i].seed)
                                            : make_background(cfg, rows[i].seed);
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
    return ds;
}

}  // namespace tnet
