#include "tnet/tensor.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little, "TNT1 I/O assumes a little-endian host");
static_assert(sizeof(float) == 4, "TNT1 payload is 32-bit IEEE floats");

namespace tnet {

void write_tnt(const std::string& path, const Tensor& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "TNT1\n" << t.rank();
    for (int e : t.shape) f << ' ' << e;
    f << '\n';
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!f) throw std::runtime_error("short write: " + path);
}

Tensor read_tnt(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for read: " + path);
    std::string magic;
    if (!std::getline(f, magic) || magic != "TNT1")
        throw std::runtime_error("bad TNT1 magic in " + path);
    std::string header;
    if (!std::getline(f, header)) throw std::runtime_error("missing TNT1 header in " + path);
    std::istringstream hs(header);
    int rank = 0;
    if (!(hs >> rank) || rank < 1) throw std::runtime_error("bad TNT1 rank in " + path);
    std::vector<int> shape(static_cast<std::size_t>(rank));
    std::size_t n = 1;
    for (int d = 0; d < rank; ++d) {
        if (!(hs >> shape[static_cast<std::size_t>(d)]) || shape[static_cast<std::size_t>(d)] < 1)
            throw std::runtime_error("bad TNT1 extent in " + path);
        n *= static_cast<std::size_t>(shape[static_cast<std::size_t>(d)]);
    }
    int extra = 0;
    if (hs >> extra) throw std::runtime_error("trailing TNT1 header fields in " + path);

    std::vector<float> data(n);
    f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (f.gcount() != static_cast<std::streamsize>(n * sizeof(float)))
        throw std::runtime_error("TNT1 payload truncated in " + path);
    char probe = 0;
    if (f.read(&probe, 1) && f.gcount() == 1)
        throw std::runtime_error("TNT1 payload has trailing bytes in " + path);
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace tnet
