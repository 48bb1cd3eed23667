#include "tnet/viz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tnet {

void write_pgm(const std::string& path, const ImageGray& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    if (!f) throw std::runtime_error("short write: " + path);
}

namespace {

void read_pnm_header(std::ifstream& f, const std::string& path, const char* magic, int& w, int& h) {
    std::string m;
    f >> m;
    if (m != magic) throw std::runtime_error("bad magic in " + path + " (want " + magic + ")");
    int maxval = 0;
    if (!(f >> w >> h >> maxval) || w < 1 || h < 1 || maxval != 255)
        throw std::runtime_error("bad header in " + path);
    f.get();  // single whitespace before payload
}

}  // namespace

ImageGray read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for read: " + path);
    ImageGray img;
    read_pnm_header(f, path, "P5", img.width, img.height);
    img.px.resize(static_cast<std::size_t>(img.width) * img.height);
    f.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.px.size()))
        throw std::runtime_error("PGM payload truncated in " + path);
    return img;
}

void write_ppm(const std::string& path, const ImageRGB& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    if (!f) throw std::runtime_error("short write: " + path);
}

ImageRGB read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for read: " + path);
    ImageRGB img;
    read_pnm_header(f, path, "P6", img.width, img.height);
    img.px.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    f.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.px.size()))
        throw std::runtime_error("PPM payload truncated in " + path);
    return img;
}

namespace {

// Min-max to [0,255]; a constant tile renders mid-gray.
void blit_tile_minmax(ImageGray& img, int x0, int y0, const float* src, int h, int w) {
    float lo = src[0], hi = src[0];
    for (int i = 1; i < h * w; ++i) {
        lo = std::min(lo, src[i]);
        hi = std::max(hi, src[i]);
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float v = src[y * w + x];
            const double n = hi > lo ? (v - lo) / (hi - lo) : 0.5;
            img.at(x0 + x, y0 + y) = static_cast<std::uint8_t>(std::lround(n * 255.0));
        }
}

// Exact zeros stay 0; nonzero values normalize into [1,255]. Keeps the
// support of a panel identical before and after quantization.
void blit_tile_support(ImageGray& img, int x0, int y0, const float* src, int h, int w) {
    float lo = 0.0f, hi = 0.0f;
    bool any = false;
    for (int i = 0; i < h * w; ++i) {
        if (src[i] == 0.0f) continue;
        if (!any) {
            lo = hi = src[i];
            any = true;
        } else {
            lo = std::min(lo, src[i]);
            hi = std::max(hi, src[i]);
        }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float v = src[y * w + x];
            if (v == 0.0f) {
                img.at(x0 + x, y0 + y) = 0;
            } else {
                const double n = hi > lo ? (v - lo) / (hi - lo) : 1.0;
                img.at(x0 + x, y0 + y) = static_cast<std::uint8_t>(1 + std::lround(n * 254.0));
            }
        }
}

}  // namespace

ImageGray dump_filters(const NetworkParams& params, int layer, FilterChannelMode mode,
                       const std::string& out_path) {
    const int n_layers = static_cast<int>(params.base.size() + params.cls.size());
    if (layer < 1 || layer > n_layers)
        throw std::invalid_argument("dump_filters: layer " + std::to_string(layer) + " out of range 1.." +
                                    std::to_string(n_layers));
    const ConvLayerT<float>& l = layer <= static_cast<int>(params.base.size())
                                     ? params.base[static_cast<std::size_t>(layer - 1)]
                                     : params.cls[static_cast<std::size_t>(layer - 1) - params.base.size()];
    const int o_count = l.kernels.extent(0), c_count = l.kernels.extent(1), k = l.kernels.extent(2);

    int rows, cols, tiles;
    if (mode == FilterChannelMode::per_channel) {
        rows = o_count;
        cols = c_count;
        tiles = o_count * c_count;
    } else {
        tiles = o_count;
        cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(tiles))));
        rows = (tiles + cols - 1) / cols;
    }

    ImageGray img;
    img.width = cols * k + cols + 1;
    img.height = rows * k + rows + 1;
    img.px.assign(static_cast<std::size_t>(img.width) * img.height, 0);

    std::vector<float> tile(static_cast<std::size_t>(k) * k);
    for (int t = 0; t < tiles; ++t) {
        const int r = t / cols, c = t % cols;
        if (mode == FilterChannelMode::per_channel) {
            const int o = t / c_count, ci = t % c_count;
            for (int u = 0; u < k; ++u)
                for (int v = 0; v < k; ++v) tile[static_cast<std::size_t>(u) * k + v] = l.kernels.at(o, ci, u, v);
        } else {
            for (int u = 0; u < k; ++u)
                for (int v = 0; v < k; ++v) {
                    float s = 0.0f;
                    for (int ci = 0; ci < c_count; ++ci) s += l.kernels.at(t, ci, u, v);
                    tile[static_cast<std::size_t>(u) * k + v] = s / static_cast<float>(c_count);
                }
        }
        blit_tile_minmax(img, 1 + c * (k + 1), 1 + r * (k + 1), tile.data(), k, k);
    }
    if (!out_path.empty()) write_pgm(out_path, img);
    return img;
}

ImageGray dump_template_response(const NetworkParams& params, const Tensor& input,
                                 const std::vector<int>& channels, const std::string& out_path) {
    if (!params.cfg.use_template_layer)
        throw std::invalid_argument("dump_template_response: model has no template layer");
    const ForwardTraceT<float> trace = forward(params, input);
    const Tensor& zhat = trace.base_act.back();
    const Tensor& maps = params.templates->maps;
    const Tensor& z = trace.z;
    const int h = maps.extent(1), w = maps.extent(2);

    std::vector<int> rows = channels;
    if (rows.empty())
        for (int m = 0; m < maps.extent(0); ++m) rows.push_back(m);
    for (int m : rows)
        if (m < 0 || m >= maps.extent(0))
            throw std::invalid_argument("dump_template_response: channel " + std::to_string(m) + " out of range");

    ImageGray img;
    img.width = 3 * w + 4;
    img.height = static_cast<int>(rows.size()) * h + static_cast<int>(rows.size()) + 1;
    img.px.assign(static_cast<std::size_t>(img.width) * img.height, 0);

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int m = rows[r];
        const int y0 = 1 + static_cast<int>(r) * (h + 1);
        blit_tile_support(img, 1, y0, &zhat.at(m, 0, 0), h, w);
        blit_tile_support(img, 2 + w, y0, &maps.at(m, 0, 0), h, w);
        blit_tile_support(img, 3 + 2 * w, y0, &z.at(m, 0, 0), h, w);
    }
    if (!out_path.empty()) write_pgm(out_path, img);
    return img;
}

ImageRGB patch_to_ppm(const OrthoPatch& patch, const std::string& out_path) {
    ImageRGB img;
    img.width = patch.width();
    img.height = patch.height();
    img.px.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                img.px[(static_cast<std::size_t>(y) * img.width + x) * 3 + c] = static_cast<std::uint8_t>(
                    std::lround(std::clamp(patch.normals.at(c, y, x), 0.0f, 1.0f) * 255.0));
    if (!out_path.empty()) write_ppm(out_path, img);
    return img;
}

}  // namespace tnet
