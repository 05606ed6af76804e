#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace soiltn {

// Band-correction coefficients for the three-channel sensor:
//   R    = 1.0   * DN_ch1 - 1.012  * DN_ch3
//   NIR  = 9.605 * DN_ch3 - 0.6182 * DN_ch1
//   NDVI = (1.236 * DN_ch3 - 0.188 * DN_ch1) / (1.000 * DN_ch3 + 0.044 * DN_ch1)
struct BandCoefficients {
    static constexpr double r_ch1 = 1.0;
    static constexpr double r_ch3 = -1.012;
    static constexpr double nir_ch3 = 9.605;
    static constexpr double nir_ch1 = -0.6182;
    static constexpr double ndvi_num_ch3 = 1.236;
    static constexpr double ndvi_num_ch1 = -0.188;
    static constexpr double ndvi_den_ch3 = 1.000;
    static constexpr double ndvi_den_ch1 = 0.044;
};

// Raw three-channel digital-number raster, row-major.
// ch1 mixes red and NIR light, ch2 is green, ch3 is NIR-dominant.
struct MultispectralFrame {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> ch1, ch2, ch3;

    MultispectralFrame() = default;
    MultispectralFrame(std::size_t w, std::size_t h,
                       std::vector<double> c1, std::vector<double> c2,
                       std::vector<double> c3);

    std::size_t pixel_count() const { return width * height; }
    std::size_t index(std::size_t x, std::size_t y) const { return y * width + x; }
};

struct ReflectanceBands {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> r, nir, g;
};

// NDVI per pixel; pixels whose denominator is not positive are marked
// invalid and excluded from zonal statistics.
struct NdviMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> valid;
    std::size_t invalid_count = 0;
};

// Zone labels per pixel; 0 means unassigned.
struct ZoneMask {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<int> labels;

    ZoneMask() = default;
    ZoneMask(std::size_t w, std::size_t h, std::vector<int> lab);
};

struct EnvReading {
    double rh = 0.0;        // relative humidity, percent
    double air_temp = 0.0;  // air temperature, degrees C

    void validate() const;
};

struct FeatureRow {
    int zone = 0;
    double red = 0.0;
    double nir = 0.0;
    double green = 0.0;
    double ndvi = 0.0;
    double rh = 0.0;
    double air_temp = 0.0;
};

struct ExtractionReport {
    std::vector<FeatureRow> rows;
    std::size_t invalid_ndvi_pixels = 0;  // zero-denominator pixels over the frame
};

ReflectanceBands separate_bands(const MultispectralFrame& frame);

NdviMap compute_ndvi(const MultispectralFrame& frame);

// Arithmetic mean of `raster` over the pixels of `zone`, skipping pixels
// where `valid` is zero. `valid` may be empty (all pixels valid).
// Summation runs in row-major pixel order so results do not depend on any
// internal partitioning.
double zonal_mean(std::span<const double> raster, std::span<const std::uint8_t> valid,
                  const ZoneMask& mask, int zone);

// One row per distinct non-zero zone id, sorted by zone id. Band means are
// taken over the separated bands, the NDVI mean over per-pixel NDVI values.
ExtractionReport extract_features(const MultispectralFrame& frame,
                                  const ZoneMask& mask, const EnvReading& env);

// CSV body with header `zone,red,nir,green,ndvi,rh,air_temp`.
std::string feature_rows_to_csv(std::span<const FeatureRow> rows);

// Inverse of the band-separation system: recovers (DN_ch1, DN_ch3) from
// (r, nir). The 2x2 system is invertible (det = 9.605 - 1.012 * 0.6182).
void invert_band_separation(double r, double nir, double& dn_ch1, double& dn_ch3);

}  // namespace soiltn
