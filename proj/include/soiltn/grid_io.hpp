#pragma once

#include <string>
#include <vector>

#include "soiltn/spectral.hpp"

namespace soiltn {

// Raster interchange: a plain-text grid (one raster row per line,
// space-separated decimal values) plus a JSON header at <path>.json with
// {"width": W, "height": H, "role": "<role>"}. Zone masks use the same
// grid body with integer labels and role "zones".

struct Grid {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;  // row-major
    std::string role;
};

// `expected_role` empty accepts any role.
Grid read_grid(const std::string& path, const std::string& expected_role = "");

void write_grid(const std::string& path, std::size_t width, std::size_t height,
                const std::vector<double>& values, const std::string& role);

ZoneMask read_zone_mask(const std::string& path);

void write_zone_mask(const std::string& path, const ZoneMask& mask);

MultispectralFrame read_frame(const std::string& ch1_path,
                              const std::string& ch2_path,
                              const std::string& ch3_path);

}  // namespace soiltn
