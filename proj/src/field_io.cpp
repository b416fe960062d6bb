#include "grushin/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace grushin {

namespace {

constexpr std::size_t kHeader = 64;

std::uint64_t to_le(std::uint64_t v)
{
    if constexpr (std::endian::native == std::endian::little) return v;
    else return __builtin_bswap64(v);
}

}  // namespace

std::string field_header(const Grid& g)
{
    char buf[128];
    const int n = std::snprintf(buf, sizeof buf, "GRF1 %d %d %.12g %.12g %.12g %d %d", g.geom().m, g.geom().ell,
                                g.geom().gamma, g.box().x_half, g.box().y_half, g.n_x(), g.n_y());
    if (n < 0 || n > static_cast<int>(kHeader) - 1) throw std::runtime_error("field header does not fit in 64 bytes");
    std::string h(buf, n);
    h.resize(kHeader - 1, ' ');
    h.push_back('\n');
    return h;
}

void write_field(const std::string& path, const Grid& g, const Field& u)
{
    check_conformable(g, u, "write_field");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    const std::string h = field_header(g);
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (double v : u) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        bits = to_le(bits);
        out.write(reinterpret_cast<const char*>(&bits), 8);
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

FieldDump read_field(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open field dump " + path);
    char hb[kHeader];
    in.read(hb, kHeader);
    if (in.gcount() != static_cast<std::streamsize>(kHeader) || hb[kHeader - 1] != '\n')
        throw std::runtime_error(path + ": truncated or malformed header");
    std::istringstream hs(std::string(hb, kHeader));
    std::string magic;
    int m = 0, ell = 0, nx = 0, ny = 0;
    double gamma = 0.0, xh = 0.0, yh = 0.0;
    hs >> magic >> m >> ell >> gamma >> xh >> yh >> nx >> ny;
    if (!hs || magic != "GRF1") throw std::runtime_error(path + ": not a GRF1 field dump");
    FieldDump dump{Grid(make_geometry(m, ell, gamma), Box{xh, yh}, nx, ny), {}};
    dump.values.resize(dump.grid.size());
    for (double& v : dump.values) {
        std::uint64_t bits;
        in.read(reinterpret_cast<char*>(&bits), 8);
        if (!in) throw std::runtime_error(path + ": payload shorter than the header promises");
        bits = to_le(bits);
        std::memcpy(&v, &bits, 8);
    }
    return dump;
}

}  // namespace grushin
