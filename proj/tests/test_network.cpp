#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "tnet/network.hpp"

using namespace tnet;

namespace {

template <class Real>
std::shared_ptr<TemplateBankT<Real>> synthetic_bank(const NetConfig& cfg, std::uint64_t seed) {
    const ShapeInfo s = infer_shapes(cfg);
    auto bank = std::make_shared<TemplateBankT<Real>>();
    const int m = cfg.template_count();
    bank->maps = TensorT<Real>({m, s.template_in.h, s.template_in.w});
    bank->viewpoints.assign(static_cast<std::size_t>(m) / 3, Vec3{});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Real& v : bank->maps.data) {
        const double x = u(rng);
        v = static_cast<Real>(x < 0.3 ? 0.0 : u(rng));
    }
    for (int i = 0; i < m; ++i) bank->maps.at(i, 0, 0) = Real(0.5);
    return bank;
}

TensorD random_input(const NetConfig& cfg, std::uint64_t seed) {
    TensorD t({cfg.in_channels, cfg.in_h, cfg.in_w});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : t.data) v = u(rng);
    return t;
}

}  // namespace

TEST_CASE("configured shapes chain through the stack") {
    const NetConfig desk = NetConfig::desk();
    const ShapeInfo s = infer_shapes(desk);
    CHECK(s.base_out[0].h == 62);
    CHECK(s.base_out[1].h == 29);
    CHECK(s.template_in.h == 27);
    CHECK(s.template_in.channels == 27);
    CHECK(s.cls_out[0].h == 25);
    CHECK(s.cls_out[1].h == 12);
    CHECK(s.flat_dim == 64 * 12 * 12);

    const NetConfig mini = NetConfig::mini();
    const ShapeInfo sm = infer_shapes(mini);
    CHECK(sm.template_in.h == 10);
    CHECK(sm.template_in.channels == 3);

    NetConfig bad = NetConfig::mini();
    bad.base[0].kernel = 40;
    CHECK_THROWS_AS(infer_shapes(bad), std::invalid_argument);
}

TEST_CASE("zero input with zero biases drives bias-only head outputs") {
    const NetConfig cfg = NetConfig::mini();
    const auto params = init_params<double>(cfg, synthetic_bank<double>(cfg, 3), 7);
    const TensorD input({3, 16, 16}, 0.0);
    const ForwardTraceT<double> t = forward(params, input);

    for (double v : t.base_act.back().data) CHECK(v == 0.0);
    for (double v : t.z.data) CHECK(v == 0.0);
    // init biases are zero, so both heads sit at the uniform distribution
    for (double v : t.p_c) CHECK(v == 0.5);
    for (double v : t.p_p) CHECK(v == doctest::Approx(1.0 / 17.0).epsilon(1e-15));
}

TEST_CASE("head outputs are normalized distributions") {
    const NetConfig cfg = NetConfig::mini();
    const auto params = init_params<double>(cfg, synthetic_bank<double>(cfg, 4), 11);
    for (int trial = 0; trial < 5; ++trial) {
        const ForwardTraceT<double> t = forward(params, random_input(cfg, 100 + static_cast<std::uint64_t>(trial)));
        double sc = 0.0, sp = 0.0;
        for (double v : t.p_c) {
            CHECK(v > 0.0);
            sc += v;
        }
        for (double v : t.p_p) {
            CHECK(v > 0.0);
            sp += v;
        }
        CHECK(std::abs(sc - 1.0) <= 1e-12);
        CHECK(std::abs(sp - 1.0) <= 1e-12);
    }
}

TEST_CASE("softmax handles extreme logits and closed forms") {
    std::vector<double> two{0.3, 0.3};
    const auto p2 = softmax<double>(two);
    CHECK(p2[0] == 0.5);
    CHECK(p2[1] == 0.5);

    std::vector<double> seventeen(17, -4.2);
    for (double v : softmax<double>(seventeen)) CHECK(v == doctest::Approx(1.0 / 17.0).epsilon(1e-15));

    std::vector<double> closed{0.0, std::log(3.0)};
    const auto p = softmax<double>(closed);
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));

    std::vector<double> huge{700.0, -700.0};
    const auto ph = softmax<double>(huge);
    CHECK(std::isfinite(ph[0]));
    CHECK(ph[0] == doctest::Approx(1.0));
}

TEST_CASE("forward is deterministic") {
    const NetConfig cfg = NetConfig::mini();
    const auto params = init_params<float>(cfg, synthetic_bank<float>(cfg, 9), 13);
    Tensor input({3, 16, 16});
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (float& v : input.data) v = u(rng);

    const ForwardTraceT<float> a = forward(params, input);
    const ForwardTraceT<float> b = forward(params, input);
    CHECK(std::memcmp(a.z.data.data(), b.z.data.data(), a.z.data.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(a.p_p.data(), b.p_p.data(), a.p_p.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(a.p_c.data(), b.p_c.data(), a.p_c.size() * sizeof(float)) == 0);
}

TEST_CASE("zero head gradients produce zero parameter gradients") {
    const NetConfig cfg = NetConfig::mini();
    auto params = init_params<double>(cfg, synthetic_bank<double>(cfg, 19), 23);
    const ForwardTraceT<double> t = forward(params, random_input(cfg, 29));
    std::vector<double> zc(2, 0.0), zp(17, 0.0);
    ParamGradsT<double> g = backward(params, t, zc, zp);
    for (const auto& ref : grad_refs(g))
        for (std::size_t i = 0; i < ref.size; ++i) CHECK(ref.data[i] == 0.0);
    for (double v : g.grad_templates.data) CHECK(v == 0.0);
}

TEST_CASE("template bank mismatches are rejected at construction") {
    const NetConfig cfg = NetConfig::mini();

    auto wrong_spatial = synthetic_bank<double>(cfg, 31);
    wrong_spatial->maps = TensorD({3, 9, 9}, 0.5);
    CHECK_THROWS_WITH_AS(init_params<double>(cfg, wrong_spatial, 1),
                         doctest::Contains("template spatial size"), std::invalid_argument);

    NetConfig more = cfg;
    more.base[2].out_channels = 6;
    auto bank3 = synthetic_bank<double>(cfg, 37);  // 3 maps for a 6-mask network
    CHECK_THROWS_WITH_AS(init_params<double>(more, bank3, 1), doctest::Contains("feature masks"),
                         std::invalid_argument);

    CHECK_THROWS_AS(init_params<double>(cfg, nullptr, 1), std::invalid_argument);
}

TEST_CASE("trainable parameter count excludes the bank") {
    const NetConfig cfg = NetConfig::mini();
    auto bank = synthetic_bank<float>(cfg, 41);
    auto params = init_params<float>(cfg, bank, 43);
    std::size_t named = 0;
    for (const auto& ref : trainable_refs(params)) named += ref.size;
    CHECK(named == trainable_parameter_count(params));
    // 300 map values sit in the bank and none of them are trainable.
    CHECK(bank->maps.size() == 300);
    NetConfig plain = cfg;
    plain.use_template_layer = false;
    CHECK(trainable_parameter_count(init_params<float>(plain, nullptr, 43)) == named);
}

TEST_CASE("config text and hash round-trip") {
    const NetConfig cfg = NetConfig::desk(45);
    const std::string text = serialize_net_config(cfg);
    const NetConfig back = parse_net_config(text);
    CHECK(serialize_net_config(back) == text);
    CHECK(net_config_hash(back) == net_config_hash(cfg));

    NetConfig other = cfg;
    other.fc_dim = 128;
    CHECK(net_config_hash(other) != net_config_hash(cfg));

    CHECK_THROWS_AS(parse_net_config("bogus_key 3\n"), std::invalid_argument);
}

TEST_CASE("checkpoints restore parameters exactly") {
    const NetConfig cfg = NetConfig::mini();
    auto params = init_params<float>(cfg, synthetic_bank<float>(cfg, 47), 53);
    const std::string dir = (std::filesystem::temp_directory_path() / "ckpt_roundtrip").string();
    std::filesystem::remove_all(dir);
    save_checkpoint(dir, params);
    NetworkParams back = load_checkpoint(dir);

    auto a = trainable_refs(params);
    auto b = trainable_refs(back);
    REQUIRE(a.size() == b.size());
    for (std::size_t r = 0; r < a.size(); ++r) {
        CHECK(a[r].name == b[r].name);
        REQUIRE(a[r].size == b[r].size);
        CHECK(std::memcmp(a[r].data, b[r].data, a[r].size * sizeof(float)) == 0);
    }
    CHECK(std::memcmp(back.templates->maps.data.data(), params.templates->maps.data.data(),
                      params.templates->maps.size() * sizeof(float)) == 0);

    Tensor input({3, 16, 16});
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (float& v : input.data) v = u(rng);
    const auto ta = forward(params, input);
    const auto tb = forward(back, input);
    CHECK(std::memcmp(ta.p_p.data(), tb.p_p.data(), ta.p_p.size() * sizeof(float)) == 0);

    // Tampering with the stored config breaks the hash.
    {
        std::ifstream in(dir + "/manifest.txt");
        std::stringstream ss;
        ss << in.rdbuf();
        std::string text = ss.str();
        const auto pos = text.find("fc_dim 32");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 9, "fc_dim 16");
        std::ofstream out(dir + "/manifest.txt");
        out << text;
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(dir), doctest::Contains("hash"), std::runtime_error);
}

TEST_CASE("traces reject mismatched params") {
    const NetConfig cfg = NetConfig::mini();
    auto params = init_params<double>(cfg, synthetic_bank<double>(cfg, 61), 67);
    const ForwardTraceT<double> t = forward(params, random_input(cfg, 71));

    NetConfig other_cfg = NetConfig::mini();
    other_cfg.in_h = other_cfg.in_w = 18;
    auto other = init_params<double>(other_cfg, synthetic_bank<double>(other_cfg, 73), 79);
    std::vector<double> gc(2, 0.1), gp(17, 0.1);
    CHECK_THROWS_AS(backward(other, t, gc, gp), std::invalid_argument);

    const TensorD bad_input({3, 18, 18}, 0.0);
    CHECK_THROWS_AS(forward(params, bad_input), std::invalid_argument);
}
