#pragma once

#include <string>

#include "lact/geometry.hpp"
#include "lact/grid.hpp"

namespace lact {

// Binary grid format: magic "LACTGRID", u16 version, u32 rows, u32 cols,
// then rows*cols little-endian 32-bit floats, row-major.

void write_grid(const std::string& path, const Grid& grid);
Grid read_grid(const std::string& path);

inline void write_image(const std::string& path, const Image& im) { write_grid(path, im.grid); }
inline Image read_image(const std::string& path) { return Image(read_grid(path)); }
inline void write_sinogram(const std::string& path, const Sinogram& s) { write_grid(path, s.grid); }
inline Sinogram read_sinogram(const std::string& path) { return Sinogram(read_grid(path)); }

/// 16-bit grayscale PGM with a linear display window (default [-1000, 1000]).
void write_pgm16(const std::string& path, const Image& image, double window_lo = -1000.0,
                 double window_hi = 1000.0);

/// Write text via temp-file-then-rename so interrupted runs never leave
/// torn outputs. All writers in this module go through it.
void atomic_write_text(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

} // namespace lact
