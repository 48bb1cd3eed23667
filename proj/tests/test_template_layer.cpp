#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "tnet/network.hpp"
#include "tnet/template_layer.hpp"

using namespace tnet;

namespace {

TemplateBankT<double> tiny_bank(std::vector<double> maps, int h, int w) {
    TemplateBankT<double> b;
    const int m = static_cast<int>(maps.size()) / (h * w);
    b.maps = TensorD({m, h, w}, std::move(maps));
    b.viewpoints.assign(static_cast<std::size_t>(m) / 3, Vec3{});
    return b;
}

TemplateBankT<double> random_bank(int m, int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TemplateBankT<double> b;
    b.maps = TensorD({m, h, w});
    b.viewpoints.assign(static_cast<std::size_t>(m) / 3, Vec3{});
    for (double& v : b.maps.data) {
        const double x = u(rng);
        v = x < 0.4 ? 0.0 : u(rng);
    }
    return b;
}

}  // namespace

TEST_CASE("template apply gates features by the map") {
    const TemplateBankT<double> bank = tiny_bank({0.5, 1.0, 0.0}, 1, 1);
    TensorD zhat({3, 1, 1}, {1.0, -2.0, 3.0});
    const TensorD z = template_apply(bank, zhat);
    CHECK(z.data == std::vector<double>{0.5, 0.0, 0.0});

    TensorD ones({3, 1, 1}, 1.0);
    const TensorD z2 = template_apply(bank, ones);
    CHECK(z2.data == bank.maps.data);  // identity feature mask exposes the templates
}

TEST_CASE("all-zero map silences its channel") {
    TemplateBankT<double> bank = random_bank(3, 4, 4, 5);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) bank.maps.at(1, i, j) = 0.0;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    TensorD zhat({3, 4, 4});
    for (double& v : zhat.data) v = u(rng);
    const TensorD z = template_apply(bank, zhat);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(z.at(1, i, j) == 0.0);
}

TEST_CASE("backward matches the hand-evaluated product rule") {
    const TemplateBankT<double> bank = tiny_bank({0.5, 1.0, 0.0}, 1, 1);
    TensorD zhat({3, 1, 1}, {1.0, -2.0, 3.0});
    TensorD grad_z({3, 1, 1}, {1.0, 1.0, 1.0});
    const TemplateGrads<double> g = template_backward(bank, zhat, grad_z);
    CHECK(g.grad_zhat.data == std::vector<double>{0.5, 0.0, 0.0});
    CHECK(g.grad_templates.data == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("strictly positive inputs make the rectifier transparent") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    TemplateBankT<double> bank;
    bank.maps = TensorD({6, 3, 3});
    bank.viewpoints.assign(2, Vec3{});
    TensorD zhat({6, 3, 3}), grad_z({6, 3, 3});
    for (double& v : bank.maps.data) v = u(rng);
    for (double& v : zhat.data) v = u(rng);
    for (double& v : grad_z.data) v = u(rng) - 0.5;
    const TemplateGrads<double> g = template_backward(bank, zhat, grad_z);
    for (std::size_t i = 0; i < zhat.data.size(); ++i)
        CHECK(g.grad_zhat.data[i] == doctest::Approx(grad_z.data[i] * bank.maps.data[i]).epsilon(1e-15));
}

TEST_CASE("backward agrees with finite differences") {
    const TemplateBankT<double> bank = random_bank(6, 5, 5, 11);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TensorD zhat({6, 5, 5}), grad_z({6, 5, 5});
    for (double& v : zhat.data) v = u(rng);
    for (double& v : grad_z.data) v = u(rng);

    auto objective = [&]() {
        const TensorD z = template_apply(bank, zhat);
        double s = 0.0;
        for (std::size_t i = 0; i < z.data.size(); ++i) s += z.data[i] * grad_z.data[i];
        return s;
    };
    const TemplateGrads<double> g = template_backward(bank, zhat, grad_z);

    const double eps = 1e-6;
    for (std::size_t i = 0; i < zhat.data.size(); ++i) {
        const double prod = zhat.data[i] * bank.maps.data[i];
        if (std::abs(prod) < 1e-4) continue;  // kink guard
        const double saved = zhat.data[i];
        zhat.data[i] = saved + eps;
        const double a = objective();
        zhat.data[i] = saved - eps;
        const double b = objective();
        zhat.data[i] = saved;
        const double numeric = (a - b) / (2 * eps);
        CHECK(std::abs(g.grad_zhat.data[i] - numeric) / std::max(std::abs(numeric), 1e-8) <= 1e-6);
    }
}

TEST_CASE("support containment and positive homogeneity") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        const TemplateBankT<double> bank = random_bank(9, 6, 6, 100 + static_cast<std::uint64_t>(trial));
        TensorD zhat({9, 6, 6});
        for (double& v : zhat.data) v = u(rng);
        const TensorD z = template_apply(bank, zhat);

        std::size_t z_nonzero = 0, map_nonzero = 0;
        for (std::size_t i = 0; i < z.data.size(); ++i) {
            if (z.data[i] != 0.0) {
                ++z_nonzero;
                CHECK(bank.maps.data[i] != 0.0);  // support containment, exact
            }
            if (bank.maps.data[i] != 0.0) ++map_nonzero;
        }
        CHECK(z_nonzero <= map_nonzero);

        const double alpha = 2.75;
        TensorD scaled = zhat;
        for (double& v : scaled.data) v *= alpha;
        const TensorD za = template_apply(bank, scaled);
        for (std::size_t i = 0; i < z.data.size(); ++i)
            CHECK(za.data[i] == doctest::Approx(alpha * z.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("the template layer adds no trainable parameters") {
    NetConfig with = NetConfig::mini();
    NetConfig without = NetConfig::mini();
    without.use_template_layer = false;

    auto bank = std::make_shared<TemplateBankT<double>>(random_bank(3, 10, 10, 21));
    for (int m = 0; m < 3; ++m) bank->maps.at(m, 0, 0) = 0.7;  // keep every map nonzero
    const auto params_with = init_params<double>(with, bank, 1);
    const auto params_without = init_params<double>(without, nullptr, 1);
    CHECK(trainable_parameter_count(params_with) == trainable_parameter_count(params_without));
}

TEST_CASE("shape mismatches are rejected") {
    const TemplateBankT<double> bank = random_bank(3, 4, 4, 31);
    TensorD wrong({3, 5, 5}, 1.0);
    CHECK_THROWS_AS(template_apply(bank, wrong), std::invalid_argument);
    TensorD zhat({3, 4, 4}, 1.0);
    TensorD bad_grad({3, 4, 5}, 1.0);
    CHECK_THROWS_AS(template_backward(bank, zhat, bad_grad), std::invalid_argument);
}

TEST_CASE("area averaging is exact on aligned blocks") {
    Tensor m({2, 2}, {1.0f, 1.0f, 0.0f, 0.0f});
    const Tensor out = area_resample(m, 1, 1);
    CHECK(out.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

    // Fractional overlap: 3 cells {0,1,0} into 2 -> averages (1/3, 1/3) of a one.
    Tensor row({1, 3}, {0.0f, 1.0f, 0.0f});
    const Tensor half = area_resample(row, 1, 2);
    CHECK(half.at(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(half.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

    // Constant maps stay constant under any resampling.
    Tensor c({5, 7}, 0.37f);
    const Tensor rc = area_resample(c, 3, 2);
    for (float v : rc.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-6));
}

TEST_CASE("viewpoint grids carry the documented counts") {
    CHECK(paper_viewpoint_grid().size() == 45);
    CHECK(desk_viewpoint_grid().size() == 9);
    const auto grid = viewpoint_grid(5, -1.0, 1.0, 3, -0.5, 0.5, 3, -0.5, 0.5);
    CHECK(grid.size() == 45);
    CHECK(grid.front().x == doctest::Approx(-1.0));
    CHECK(grid.back().x == doctest::Approx(1.0));
}

TEST_CASE("bank built from a face-on cube has a saturated depth channel") {
    BankBuildConfig cfg;
    cfg.camera.intrinsics = {262.5, 262.5, 159.5, 119.5};
    cfg.camera.width = 320;
    cfg.camera.height = 240;
    const TriangleMesh cube = make_box(0.16, 0.16, 0.16);
    const TemplateBank bank = build_bank(cube, {{0.0, 0.0, 0.0}}, 64, 16, 16, cfg);
    REQUIRE(bank.map_count() == 3);

    // z channel of the face-on view: facing surface maps to exactly 1.
    int saturated = 0, background = 0;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            const float v = bank.maps.at(2, i, j);
            if (v == 1.0f) ++saturated;
            if (v == 0.0f) ++background;
        }
    CHECK(saturated > 10);   // interior of the facing surface
    CHECK(background > 10);  // area around the silhouette stays exactly 0
    for (float v : bank.maps.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("paper-scale bank has 135 maps") {
    BankBuildConfig cfg;
    cfg.camera.intrinsics = {131.25, 131.25, 79.5, 59.5};
    cfg.camera.width = 160;
    cfg.camera.height = 120;
    const TemplateBank bank = build_bank(shape_by_name("box"), paper_viewpoint_grid(), 32, 8, 8, cfg);
    CHECK(bank.map_count() == 135);
    CHECK(bank.viewpoints.size() == 45);
}

TEST_CASE("empty renders name the offending viewpoint") {
    BankBuildConfig cfg;
    cfg.camera.intrinsics = {131.25, 131.25, -5000.0, 59.5};  // object projects off-frame
    cfg.camera.width = 160;
    cfg.camera.height = 120;
    bool threw = false;
    try {
        build_bank(shape_by_name("box"), {{0.1, 0.2, 0.0}}, 32, 8, 8, cfg);
    } catch (const std::runtime_error& e) {
        threw = true;
        const std::string msg = e.what();
        CHECK(msg.find("viewpoint 0") != std::string::npos);
        CHECK(msg.find("0.1") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("bank serialization round-trips") {
    BankBuildConfig cfg;
    cfg.camera.intrinsics = {131.25, 131.25, 79.5, 59.5};
    cfg.camera.width = 160;
    cfg.camera.height = 120;
    const TemplateBank bank = build_bank(shape_by_name("box"), desk_viewpoint_grid(), 32, 8, 8, cfg);
    const std::string dir = (std::filesystem::temp_directory_path() / "bank_roundtrip").string();
    std::filesystem::remove_all(dir);
    save_bank(dir, bank);
    const TemplateBank back = load_bank(dir);
    CHECK(back.maps.shape == bank.maps.shape);
    CHECK(std::memcmp(back.maps.data.data(), bank.maps.data.data(),
                      bank.maps.data.size() * sizeof(float)) == 0);
    REQUIRE(back.viewpoints.size() == bank.viewpoints.size());
    for (std::size_t i = 0; i < bank.viewpoints.size(); ++i) {
        CHECK(back.viewpoints[i].x == bank.viewpoints[i].x);
        CHECK(back.viewpoints[i].y == bank.viewpoints[i].y);
    }
    CHECK(back.source_resolution == bank.source_resolution);
}

TEST_CASE("bank invariants are enforced") {
    TemplateBankT<double> bad = random_bank(6, 3, 3, 51);
    bad.viewpoints.resize(1);  // M != 3V
    CHECK_THROWS_AS(validate_bank(bad), std::invalid_argument);

    TemplateBankT<double> zeros = random_bank(3, 3, 3, 52);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) zeros.maps.at(0, i, j) = 0.0;
    CHECK_THROWS_AS(validate_bank(zeros), std::invalid_argument);

    TemplateBankT<double> range = random_bank(3, 3, 3, 53);
    range.maps.at(1, 1, 1) = 1.5;
    CHECK_THROWS_AS(validate_bank(range), std::invalid_argument);
}
