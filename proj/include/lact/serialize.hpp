#pragma once

#include "lact/config.hpp"
#include "lact/geometry.hpp"

namespace lact {

/// Geometry <-> [geometry] section. Uniform angle sets are stored by their
/// generating parameters and regenerated bit-exactly; irregular sets are
/// stored as an explicit list.
void geometry_to_section(const ScanGeometry& g, ConfigSection& s);
ScanGeometry geometry_from_section(const ConfigSection& s);

/// Mask <-> [mask] section (keep vector stored as a 0/1 string).
void mask_to_section(const AngularMask& m, ConfigSection& s);
AngularMask mask_from_section(const ConfigSection& s);

void save_geometry(const std::string& path, const ScanGeometry& g);
ScanGeometry load_geometry(const std::string& path);
void save_mask(const std::string& path, const AngularMask& m);
AngularMask load_mask(const std::string& path);

} // namespace lact
