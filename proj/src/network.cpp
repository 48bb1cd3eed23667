#include "tnet/network.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tnet {

NetConfig NetConfig::desk(int templates) {
    NetConfig c;
    c.in_channels = 3;
    c.in_h = c.in_w = 128;
    c.base = {{16, 5, 2}, {32, 5, 2}, {templates, 3, 1}};
    c.cls = {{64, 3, 1}, {64, 3, 2}};
    c.fc_dim = 256;
    return c;
}

NetConfig NetConfig::compact(int templates) {
    NetConfig c;
    c.in_channels = 3;
    c.in_h = c.in_w = 64;
    c.base = {{16, 5, 2}, {32, 5, 2}, {templates, 3, 1}};
    c.cls = {{48, 3, 1}, {48, 3, 2}};
    c.fc_dim = 128;
    return c;
}

NetConfig NetConfig::mini() {
    NetConfig c;
    c.in_channels = 3;
    c.in_h = c.in_w = 16;
    c.base = {{8, 3, 1}, {8, 3, 1}, {3, 3, 1}};
    c.cls = {{8, 3, 1}, {8, 3, 2}};
    c.fc_dim = 32;
    return c;
}

ShapeInfo infer_shapes(const NetConfig& cfg) {
    if (cfg.base.empty() || cfg.cls.empty())
        throw std::invalid_argument("net config needs base and classification conv layers");
    ShapeInfo s;
    LayerShape cur{cfg.in_channels, cfg.in_h, cfg.in_w};
    auto step = [](LayerShape in, const ConvSpec& spec, const char* what) {
        if (spec.kernel > in.h || spec.kernel > in.w)
            throw std::invalid_argument(std::string(what) + ": kernel " + std::to_string(spec.kernel) +
                                        " exceeds input " + std::to_string(in.h) + "x" + std::to_string(in.w));
        if (spec.stride < 1) throw std::invalid_argument(std::string(what) + ": stride must be >= 1");
        if (spec.out_channels < 1) throw std::invalid_argument(std::string(what) + ": channels must be >= 1");
        return LayerShape{spec.out_channels, conv_out_extent(in.h, spec.kernel, spec.stride),
                          conv_out_extent(in.w, spec.kernel, spec.stride)};
    };
    for (std::size_t i = 0; i < cfg.base.size(); ++i) {
        cur = step(cur, cfg.base[i], ("base conv " + std::to_string(i + 1)).c_str());
        s.base_out.push_back(cur);
    }
    s.template_in = cur;
    for (std::size_t i = 0; i < cfg.cls.size(); ++i) {
        cur = step(cur, cfg.cls[i], ("classification conv " + std::to_string(i + 1)).c_str());
        s.cls_out.push_back(cur);
    }
    s.flat_dim = cur.channels * cur.h * cur.w;
    if (cfg.fc_dim < 1) throw std::invalid_argument("net config fc_dim must be >= 1");
    return s;
}

std::string serialize_net_config(const NetConfig& cfg) {
    std::ostringstream os;
    os << "in_channels " << cfg.in_channels << '\n';
    os << "in_h " << cfg.in_h << '\n';
    os << "in_w " << cfg.in_w << '\n';
    os << "fc_dim " << cfg.fc_dim << '\n';
    os << "use_template_layer " << (cfg.use_template_layer ? 1 : 0) << '\n';
    for (const ConvSpec& s : cfg.base)
        os << "base " << s.out_channels << ' ' << s.kernel << ' ' << s.stride << '\n';
    for (const ConvSpec& s : cfg.cls)
        os << "cls " << s.out_channels << ' ' << s.kernel << ' ' << s.stride << '\n';
    return os.str();
}

NetConfig parse_net_config(const std::string& text) {
    NetConfig cfg;
    cfg.base.clear();
    cfg.cls.clear();
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "in_channels") ls >> cfg.in_channels;
        else if (key == "in_h") ls >> cfg.in_h;
        else if (key == "in_w") ls >> cfg.in_w;
        else if (key == "fc_dim") ls >> cfg.fc_dim;
        else if (key == "use_template_layer") {
            int v = 1;
            ls >> v;
            cfg.use_template_layer = v != 0;
        } else if (key == "base" || key == "cls") {
            ConvSpec s;
            if (!(ls >> s.out_channels >> s.kernel >> s.stride))
                throw std::invalid_argument("bad net config conv line: " + line);
            (key == "base" ? cfg.base : cfg.cls).push_back(s);
        } else {
            throw std::invalid_argument("unknown net config key: " + key);
        }
        if (ls.fail()) throw std::invalid_argument("bad net config line: " + line);
    }
    infer_shapes(cfg);  // validates
    return cfg;
}

std::uint64_t net_config_hash(const NetConfig& cfg) {
    // FNV-1a over the serialized text.
    const std::string text = serialize_net_config(cfg);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

Tensor vec_tensor(const std::vector<float>& v) {
    return Tensor({static_cast<int>(v.size())}, v);
}

}  // namespace

void save_checkpoint(const std::string& dir, const NetworkParams& p) {
    validate_network(p);
    std::filesystem::create_directories(dir);
    std::ofstream mf(dir + "/manifest.txt");
    if (!mf) throw std::runtime_error("cannot open for write: " + dir + "/manifest.txt");

    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(net_config_hash(p.cfg)));
    mf << "config_hash " << hash << '\n';
    mf << serialize_net_config(p.cfg);

    auto dump = [&](const std::string& name, const Tensor& t, int stride) {
        mf << "tensor " << name;
        for (int e : t.shape) mf << ' ' << e;
        mf << " stride " << stride << '\n';
        write_tnt(dir + "/" + name + ".tnt", t);
    };
    for (std::size_t i = 0; i < p.base.size(); ++i) {
        dump("conv" + std::to_string(i + 1) + ".kernels", p.base[i].kernels, p.base[i].stride);
        dump("conv" + std::to_string(i + 1) + ".bias", vec_tensor(p.base[i].bias), 0);
    }
    for (std::size_t i = 0; i < p.cls.size(); ++i) {
        const std::string n = "conv" + std::to_string(p.base.size() + i + 1);
        dump(n + ".kernels", p.cls[i].kernels, p.cls[i].stride);
        dump(n + ".bias", vec_tensor(p.cls[i].bias), 0);
    }
    dump("fc.w", p.fc.w, 0);
    dump("fc.b", vec_tensor(p.fc.b), 0);
    dump("fg_head.w", p.fg_head.w, 0);
    dump("fg_head.b", vec_tensor(p.fg_head.b), 0);
    dump("pose_head.w", p.pose_head.w, 0);
    dump("pose_head.b", vec_tensor(p.pose_head.b), 0);

    if (p.cfg.use_template_layer) save_bank(dir + "/bank", *p.templates);
}

NetworkParams load_checkpoint(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.txt");
    if (!mf) throw std::runtime_error("cannot open for read: " + dir + "/manifest.txt");
    std::string config_text, line, stored_hash;
    while (std::getline(mf, line)) {
        if (line.rfind("config_hash ", 0) == 0) {
            stored_hash = line.substr(12);
        } else if (line.rfind("tensor ", 0) != 0 && !line.empty()) {
            config_text += line + '\n';
        }
    }
    NetworkParams p;
    p.cfg = parse_net_config(config_text);

    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(net_config_hash(p.cfg)));
    if (stored_hash != hash)
        throw std::runtime_error("checkpoint config hash mismatch in " + dir + " (stored " + stored_hash +
                                 ", computed " + hash + ")");

    auto load_conv = [&](const std::string& name, const ConvSpec& spec) {
        ConvLayerT<float> l;
        l.kernels = read_tnt(dir + "/" + name + ".kernels.tnt");
        l.bias = read_tnt(dir + "/" + name + ".bias.tnt").data;
        l.stride = spec.stride;
        return l;
    };
    for (std::size_t i = 0; i < p.cfg.base.size(); ++i)
        p.base.push_back(load_conv("conv" + std::to_string(i + 1), p.cfg.base[i]));
    for (std::size_t i = 0; i < p.cfg.cls.size(); ++i)
        p.cls.push_back(load_conv("conv" + std::to_string(p.cfg.base.size() + i + 1), p.cfg.cls[i]));
    p.fc.w = read_tnt(dir + "/fc.w.tnt");
    p.fc.b = read_tnt(dir + "/fc.b.tnt").data;
    p.fg_head.w = read_tnt(dir + "/fg_head.w.tnt");
    p.fg_head.b = read_tnt(dir + "/fg_head.b.tnt").data;
    p.pose_head.w = read_tnt(dir + "/pose_head.w.tnt");
    p.pose_head.b = read_tnt(dir + "/pose_head.b.tnt").data;

    if (p.cfg.use_template_layer)
        p.templates = std::make_shared<const TemplateBank>(load_bank(dir + "/bank"));
    validate_network(p);
    return p;
}

}  // namespace tnet
