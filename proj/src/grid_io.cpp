#include "soiltn/grid_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "soiltn/csv.hpp"
#include "soiltn/errors.hpp"

namespace soiltn {

namespace {

using nlohmann::json;

json read_header(const std::string& grid_path) {
    const std::string header_path = grid_path + ".json";
    std::ifstream in(header_path);
    if (!in) throw ValidationError("cannot open raster header: " + header_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(header_path + ": invalid JSON: " + e.what());
    }
    for (const char* key : {"width", "height", "role"}) {
        if (!j.contains(key)) {
            throw ParseError(header_path + ": missing key '" + key + "'");
        }
    }
    return j;
}

}  // namespace

Grid read_grid(const std::string& path, const std::string& expected_role) {
    const json header = read_header(path);
    Grid grid;
    grid.width = header.at("width").get<std::size_t>();
    grid.height = header.at("height").get<std::size_t>();
    grid.role = header.at("role").get<std::string>();
    if (!expected_role.empty() && grid.role != expected_role) {
        throw ValidationError(path + ": header role is '" + grid.role +
                              "', expected '" + expected_role + "'");
    }
    if (grid.width == 0 || grid.height == 0) {
        throw ValidationError(path + ": zero-sized raster");
    }

    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open raster grid: " + path);
    grid.values.reserve(grid.width * grid.height);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        std::size_t col = 0;
        while (ls >> token) {
            grid.values.push_back(parse_double(
                token, path + " row " + std::to_string(row) + " col " +
                           std::to_string(col)));
            ++col;
        }
        if (col != grid.width) {
            throw ParseError(path + " row " + std::to_string(row) + ": expected " +
                             std::to_string(grid.width) + " values, got " +
                             std::to_string(col));
        }
        ++row;
    }
    if (row != grid.height) {
        throw ParseError(path + ": expected " + std::to_string(grid.height) +
                         " rows, got " + std::to_string(row));
    }
    return grid;
}

void write_grid(const std::string& path, std::size_t width, std::size_t height,
                const std::vector<double>& values, const std::string& role) {
    if (values.size() != width * height) {
        throw ShapeError("grid value count does not match width*height");
    }
    std::ostringstream body;
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            if (x) body << ' ';
            body << format_double(values[y * width + x]);
        }
        body << '\n';
    }
    write_text_file(path, body.str());

    json header;
    header["width"] = width;
    header["height"] = height;
    header["role"] = role;
    write_text_file(path + ".json", header.dump(2) + "\n");
}

ZoneMask read_zone_mask(const std::string& path) {
    Grid grid = read_grid(path, "zones");
    std::vector<int> labels(grid.values.size());
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        const double v = grid.values[i];
        if (!(v >= 0.0) || v != std::floor(v)) {
            throw ParseError(path + ": zone label at pixel " + std::to_string(i) +
                             " is not a non-negative integer");
        }
        labels[i] = static_cast<int>(v);
    }
    return ZoneMask(grid.width, grid.height, std::move(labels));
}

void write_zone_mask(const std::string& path, const ZoneMask& mask) {
    std::vector<double> values(mask.labels.begin(), mask.labels.end());
    write_grid(path, mask.width, mask.height, values, "zones");
}

MultispectralFrame read_frame(const std::string& ch1_path,
                              const std::string& ch2_path,
                              const std::string& ch3_path) {
    Grid c1 = read_grid(ch1_path, "ch1");
    Grid c2 = read_grid(ch2_path, "ch2");
    Grid c3 = read_grid(ch3_path, "ch3");
    if (c1.width != c2.width || c1.width != c3.width || c1.height != c2.height ||
        c1.height != c3.height) {
        throw ShapeError("frame channels disagree on shape");
    }
    return MultispectralFrame(c1.width, c1.height, std::move(c1.values),
                              std::move(c2.values), std::move(c3.values));
}

}  // namespace soiltn
