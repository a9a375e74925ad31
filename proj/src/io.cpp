#include "lact/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <unistd.h>

namespace lact {

static_assert(std::endian::native == std::endian::little,
              "grid format is little-endian; byte swapping not implemented");

namespace {

constexpr char kMagic[8] = {'L', 'A', 'C', 'T', 'G', 'R', 'I', 'D'};
constexpr uint16_t kVersion = 1;

std::string temp_name(const std::string& path) {
    return path + ".tmp-" + std::to_string(static_cast<unsigned long>(::getpid()));
}

void atomic_rename(const std::string& tmp, const std::string& path) {
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw config_error("rename failed for '" + path + "': " + ec.message());
    }
}

} // namespace

void write_grid(const std::string& path, const Grid& grid) {
    std::string tmp = temp_name(path);
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw config_error("cannot open '" + tmp + "' for writing");
        f.write(kMagic, 8);
        uint16_t ver = kVersion;
        uint32_t rows = static_cast<uint32_t>(grid.rows());
        uint32_t cols = static_cast<uint32_t>(grid.cols());
        f.write(reinterpret_cast<const char*>(&ver), 2);
        f.write(reinterpret_cast<const char*>(&rows), 4);
        f.write(reinterpret_cast<const char*>(&cols), 4);
        std::vector<float> row(grid.cols());
        for (int r = 0; r < grid.rows(); ++r) {
            for (int c = 0; c < grid.cols(); ++c) row[c] = static_cast<float>(grid(r, c));
            f.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
        }
        if (!f) throw config_error("write failed for '" + tmp + "'");
    }
    atomic_rename(tmp, path);
}

Grid read_grid(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open grid file '" + path + "'");
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw config_error("'" + path + "' is not a LACTGRID file");
    uint16_t ver = 0;
    uint32_t rows = 0, cols = 0;
    f.read(reinterpret_cast<char*>(&ver), 2);
    f.read(reinterpret_cast<char*>(&rows), 4);
    f.read(reinterpret_cast<char*>(&cols), 4);
    if (!f || ver != kVersion)
        throw config_error("unsupported grid version in '" + path + "'");
    if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24))
        throw config_error("implausible grid dimensions in '" + path + "'");
    Grid g(static_cast<int>(rows), static_cast<int>(cols));
    std::vector<float> row(cols);
    for (uint32_t r = 0; r < rows; ++r) {
        f.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
        if (!f) throw config_error("truncated grid file '" + path + "'");
        for (uint32_t c = 0; c < cols; ++c) g(static_cast<int>(r), static_cast<int>(c)) = row[c];
    }
    return g;
}

void write_pgm16(const std::string& path, const Image& image, double window_lo,
                 double window_hi) {
    if (window_hi <= window_lo) throw config_error("write_pgm16: empty display window");
    std::string tmp = temp_name(path);
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw config_error("cannot open '" + tmp + "' for writing");
        f << "P5\n" << image.width() << " " << image.height() << "\n65535\n";
        double scale = 65535.0 / (window_hi - window_lo);
        for (int r = 0; r < image.height(); ++r) {
            for (int c = 0; c < image.width(); ++c) {
                double v = (image(r, c) - window_lo) * scale;
                int q = static_cast<int>(v + 0.5);
                if (q < 0) q = 0;
                if (q > 65535) q = 65535;
                // PGM stores the most significant byte first
                unsigned char hi = static_cast<unsigned char>(q >> 8);
                unsigned char lo = static_cast<unsigned char>(q & 0xff);
                f.put(static_cast<char>(hi));
                f.put(static_cast<char>(lo));
            }
        }
        if (!f) throw config_error("write failed for '" + tmp + "'");
    }
    atomic_rename(tmp, path);
}

void atomic_write_text(const std::string& path, const std::string& content) {
    std::string tmp = temp_name(path);
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw config_error("cannot open '" + tmp + "' for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw config_error("write failed for '" + tmp + "'");
    }
    atomic_rename(tmp, path);
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace lact
