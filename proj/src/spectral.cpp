#include "soiltn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "soiltn/csv.hpp"
#include "soiltn/errors.hpp"

namespace soiltn {

namespace {

void check_channel(const std::vector<double>& ch, std::size_t expected,
                   const char* name) {
    if (ch.size() != expected) {
        throw ShapeError(std::string("channel ") + name + " has " +
                         std::to_string(ch.size()) + " pixels, expected " +
                         std::to_string(expected));
    }
    for (double v : ch) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ValidationError(std::string("channel ") + name +
                                  " contains a negative or non-finite DN");
        }
    }
}

}  // namespace

MultispectralFrame::MultispectralFrame(std::size_t w, std::size_t h,
                                       std::vector<double> c1, std::vector<double> c2,
                                       std::vector<double> c3)
    : width(w), height(h), ch1(std::move(c1)), ch2(std::move(c2)), ch3(std::move(c3)) {
    const std::size_t n = width * height;
    if (n == 0) throw ShapeError("frame has zero pixels");
    check_channel(ch1, n, "ch1");
    check_channel(ch2, n, "ch2");
    check_channel(ch3, n, "ch3");
}

ZoneMask::ZoneMask(std::size_t w, std::size_t h, std::vector<int> lab)
    : width(w), height(h), labels(std::move(lab)) {
    if (labels.size() != width * height) {
        throw ShapeError("zone mask has " + std::to_string(labels.size()) +
                         " labels, expected " + std::to_string(width * height));
    }
    for (int z : labels) {
        if (z < 0) throw ValidationError("zone ids must be non-negative");
    }
}

void EnvReading::validate() const {
    if (!(rh >= 0.0 && rh <= 100.0)) {
        throw ValidationError("relative humidity must lie in [0, 100], got " +
                              format_double(rh));
    }
    if (!std::isfinite(air_temp)) {
        throw ValidationError("air temperature must be finite");
    }
}

ReflectanceBands separate_bands(const MultispectralFrame& frame) {
    const std::size_t n = frame.pixel_count();
    if (frame.ch1.size() != n || frame.ch2.size() != n || frame.ch3.size() != n) {
        throw ShapeError("frame channels disagree on shape");
    }
    ReflectanceBands out;
    out.width = frame.width;
    out.height = frame.height;
    out.r.resize(n);
    out.nir.resize(n);
    out.g = frame.ch2;  // green carries no correction
    for (std::size_t i = 0; i < n; ++i) {
        out.r[i] = BandCoefficients::r_ch1 * frame.ch1[i] +
                   BandCoefficients::r_ch3 * frame.ch3[i];
        out.nir[i] = BandCoefficients::nir_ch3 * frame.ch3[i] +
                     BandCoefficients::nir_ch1 * frame.ch1[i];
    }
    return out;
}

NdviMap compute_ndvi(const MultispectralFrame& frame) {
    const std::size_t n = frame.pixel_count();
    NdviMap out;
    out.width = frame.width;
    out.height = frame.height;
    out.values.assign(n, 0.0);
    out.valid.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double num = BandCoefficients::ndvi_num_ch3 * frame.ch3[i] +
                           BandCoefficients::ndvi_num_ch1 * frame.ch1[i];
        const double den = BandCoefficients::ndvi_den_ch3 * frame.ch3[i] +
                           BandCoefficients::ndvi_den_ch1 * frame.ch1[i];
        if (den > 0.0) {
            out.values[i] = num / den;
        } else {
            out.valid[i] = 0;
            ++out.invalid_count;
        }
    }
    return out;
}

double zonal_mean(std::span<const double> raster, std::span<const std::uint8_t> valid,
                  const ZoneMask& mask, int zone) {
    if (raster.size() != mask.labels.size()) {
        throw ShapeError("raster and zone mask shapes differ");
    }
    if (!valid.empty() && valid.size() != raster.size()) {
        throw ShapeError("validity mask and raster shapes differ");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < raster.size(); ++i) {
        if (mask.labels[i] != zone) continue;
        if (!valid.empty() && !valid[i]) continue;
        sum += raster[i];
        ++count;
    }
    if (count == 0) {
        throw EmptyZoneError(zone, "zone " + std::to_string(zone) +
                                       " has no valid pixels");
    }
    return sum / static_cast<double>(count);
}

ExtractionReport extract_features(const MultispectralFrame& frame,
                                  const ZoneMask& mask, const EnvReading& env) {
    if (frame.width != mask.width || frame.height != mask.height) {
        throw ShapeError("frame is " + std::to_string(frame.width) + "x" +
                         std::to_string(frame.height) + " but mask is " +
                         std::to_string(mask.width) + "x" + std::to_string(mask.height));
    }
    env.validate();

    const ReflectanceBands bands = separate_bands(frame);
    const NdviMap ndvi = compute_ndvi(frame);

    std::map<int, bool> zones;  // ordered: rows come out sorted by zone id
    for (int z : mask.labels) {
        if (z != 0) zones[z] = true;
    }

    ExtractionReport report;
    report.invalid_ndvi_pixels = ndvi.invalid_count;
    report.rows.reserve(zones.size());
    for (const auto& [zone, _] : zones) {
        FeatureRow row;
        row.zone = zone;
        row.red = zonal_mean(bands.r, {}, mask, zone);
        row.nir = zonal_mean(bands.nir, {}, mask, zone);
        row.green = zonal_mean(bands.g, {}, mask, zone);
        row.ndvi = zonal_mean(ndvi.values, ndvi.valid, mask, zone);
        row.rh = env.rh;
        row.air_temp = env.air_temp;
        report.rows.push_back(row);
    }
    return report;
}

std::string feature_rows_to_csv(std::span<const FeatureRow> rows) {
    std::ostringstream out;
    out << "zone,red,nir,green,ndvi,rh,air_temp\n";
    for (const FeatureRow& row : rows) {
        out << row.zone << ',' << format_double(row.red) << ','
            << format_double(row.nir) << ',' << format_double(row.green) << ','
            << format_double(row.ndvi) << ',' << format_double(row.rh) << ','
            << format_double(row.air_temp) << '\n';
    }
    return out.str();
}

void invert_band_separation(double r, double nir, double& dn_ch1, double& dn_ch3) {
    // Solve [ a b ; c d ] [ch1 ch3]^T = [r nir]^T for the correction system.
    constexpr double a = BandCoefficients::r_ch1;
    constexpr double b = BandCoefficients::r_ch3;
    constexpr double c = BandCoefficients::nir_ch1;
    constexpr double d = BandCoefficients::nir_ch3;
    constexpr double det = a * d - b * c;
    static_assert(det != 0.0, "band separation system must be invertible");
    dn_ch1 = (d * r - b * nir) / det;
    dn_ch3 = (a * nir - c * r) / det;
}

}  // namespace soiltn
