#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tnet/network.hpp"
#include "tnet/orthopatch.hpp"

namespace tnet {

struct ImageGray {
    int width = 0, height = 0;
    std::vector<std::uint8_t> px;

    std::uint8_t at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return px[static_cast<std::size_t>(y) * width + x]; }
};

struct ImageRGB {
    int width = 0, height = 0;
    std::vector<std::uint8_t> px;  // interleaved rgb
};

// Binary PGM (P5) / PPM (P6), maxval 255.
void write_pgm(const std::string& path, const ImageGray& img);
ImageGray read_pgm(const std::string& path);
void write_ppm(const std::string& path, const ImageRGB& img);
ImageRGB read_ppm(const std::string& path);

enum class FilterChannelMode { average, per_channel };

// Tiles layer kernels into a grid with 1-px separators, min-max normalized
// per tile (constant tiles render mid-gray). Layer index is 1-based over
// the conv stack.
ImageGray dump_filters(const NetworkParams& params, int layer, FilterChannelMode mode,
                       const std::string& out_path);

// One row per selected template channel, columns [feature mask | template |
// rectified product]; per-panel normalization with exact zeros kept black
// so support containment survives quantization.
ImageGray dump_template_response(const NetworkParams& params, const Tensor& input,
                                 const std::vector<int>& channels, const std::string& out_path);

// Normal-map patch rendered as an RGB image (channels scaled by 255).
ImageRGB patch_to_ppm(const OrthoPatch& patch, const std::string& out_path);

}  // namespace tnet
