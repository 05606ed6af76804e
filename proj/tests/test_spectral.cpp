#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "soiltn/errors.hpp"
#include "soiltn/grid_io.hpp"
#include "soiltn/rng.hpp"
#include "soiltn/spectral.hpp"

using namespace soiltn;

namespace {

MultispectralFrame uniform_frame(std::size_t w, std::size_t h, double c1, double c2,
                                 double c3) {
    const std::size_t n = w * h;
    return MultispectralFrame(w, h, std::vector<double>(n, c1),
                              std::vector<double>(n, c2), std::vector<double>(n, c3));
}

// Independent per-pixel evaluation of the three band equations.
double oracle_r(double ch1, double ch3) { return 1.0 * ch1 - 1.012 * ch3; }
double oracle_nir(double ch1, double ch3) { return 9.605 * ch3 - 0.6182 * ch1; }
double oracle_ndvi(double ch1, double ch3) {
    return (1.236 * ch3 - 0.188 * ch1) / (1.000 * ch3 + 0.044 * ch1);
}

}  // namespace

TEST_CASE("separate_bands evaluates the correction equations") {
    auto zero = separate_bands(uniform_frame(1, 1, 0.0, 5.0, 0.0));
    CHECK(zero.r[0] == 0.0);
    CHECK(zero.nir[0] == 0.0);
    CHECK(zero.g[0] == 5.0);

    // exact cancellation of the R equation coefficients
    auto cancel = separate_bands(uniform_frame(1, 1, 1.012, 0.0, 1.0));
    CHECK(cancel.r[0] == doctest::Approx(0.0).epsilon(1e-15));

    auto bands = separate_bands(uniform_frame(1, 1, 100.0, 7.0, 50.0));
    CHECK(bands.r[0] == doctest::Approx(49.4).epsilon(1e-12));
    CHECK(bands.nir[0] == doctest::Approx(418.43).epsilon(1e-12));
    CHECK(bands.g[0] == 7.0);
}

TEST_CASE("separate_bands rejects mismatched channels") {
    auto frame = uniform_frame(2, 2, 1.0, 1.0, 1.0);
    frame.ch3.pop_back();
    CHECK_THROWS_AS(separate_bands(frame), ShapeError);

    CHECK_THROWS_AS(MultispectralFrame(2, 2, std::vector<double>(4, 1.0),
                                       std::vector<double>(3, 1.0),
                                       std::vector<double>(4, 1.0)),
                    ShapeError);
    CHECK_THROWS_AS(MultispectralFrame(1, 1, {-1.0}, {1.0}, {1.0}), ValidationError);
}

TEST_CASE("compute_ndvi boundary ratios and the derived case") {
    auto only_nir = compute_ndvi(uniform_frame(1, 1, 0.0, 0.0, 3.7));
    CHECK(only_nir.values[0] == doctest::Approx(1.236).epsilon(1e-12));

    auto only_red = compute_ndvi(uniform_frame(1, 1, 4.2, 0.0, 0.0));
    CHECK(only_red.values[0] == doctest::Approx(-0.188 / 0.044).epsilon(1e-12));

    auto mixed = compute_ndvi(uniform_frame(1, 1, 100.0, 0.0, 50.0));
    CHECK(mixed.values[0] == doctest::Approx(43.0 / 54.4).epsilon(1e-12));
}

TEST_CASE("compute_ndvi flags zero-denominator pixels") {
    MultispectralFrame frame(2, 1, {0.0, 100.0}, {0.0, 0.0}, {0.0, 50.0});
    auto ndvi = compute_ndvi(frame);
    CHECK(ndvi.valid[0] == 0);
    CHECK(ndvi.valid[1] == 1);
    CHECK(ndvi.invalid_count == 1);
}

TEST_CASE("zonal_mean averages valid pixels only") {
    ZoneMask mask(3, 1, {1, 1, 1});
    std::vector<double> constant{4.5, 4.5, 4.5};
    CHECK(zonal_mean(constant, {}, mask, 1) == doctest::Approx(4.5));

    std::vector<double> values{1.0, 2.0, 3.0};
    CHECK(zonal_mean(values, {}, mask, 1) == doctest::Approx(2.0));

    std::vector<std::uint8_t> valid{1, 1, 0};
    CHECK(zonal_mean(values, valid, mask, 1) == doctest::Approx(1.5));

    CHECK_THROWS_AS(zonal_mean(values, {}, mask, 2), EmptyZoneError);
    std::vector<std::uint8_t> none{0, 0, 0};
    CHECK_THROWS_AS(zonal_mean(values, none, mask, 1), EmptyZoneError);

    try {
        zonal_mean(values, none, mask, 1);
    } catch (const EmptyZoneError& e) {
        CHECK(e.zone == 1);
    }
}

TEST_CASE("extract_features on uniform and multi-zone frames") {
    EnvReading env{33.8, 23.2};

    auto single = extract_features(uniform_frame(2, 2, 100.0, 7.0, 50.0),
                                   ZoneMask(2, 2, {1, 1, 1, 1}), env);
    REQUIRE(single.rows.size() == 1);
    CHECK(single.rows[0].zone == 1);
    CHECK(single.rows[0].red == doctest::Approx(oracle_r(100, 50)).epsilon(1e-12));
    CHECK(single.rows[0].nir == doctest::Approx(oracle_nir(100, 50)).epsilon(1e-12));
    CHECK(single.rows[0].green == 7.0);
    CHECK(single.rows[0].ndvi == doctest::Approx(oracle_ndvi(100, 50)).epsilon(1e-12));
    CHECK(single.rows[0].rh == 33.8);
    CHECK(single.rows[0].air_temp == 23.2);

    // two zones with disjoint constant values; also checks zone-id ordering
    MultispectralFrame two(2, 1, {10.0, 80.0}, {3.0, 6.0}, {20.0, 40.0});
    auto rows = extract_features(two, ZoneMask(2, 1, {7, 2}), env).rows;
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].zone == 2);
    CHECK(rows[0].red == doctest::Approx(oracle_r(80, 40)).epsilon(1e-12));
    CHECK(rows[1].zone == 7);
    CHECK(rows[1].red == doctest::Approx(oracle_r(10, 20)).epsilon(1e-12));
}

TEST_CASE("extract_features 2x2 derived case matches the per-pixel oracle") {
    // DN_ch1 = {100, 100, 0, 0}, DN_ch3 = {50, 50, 50, 50}, one zone.
    MultispectralFrame frame(2, 2, {100.0, 100.0, 0.0, 0.0},
                             {5.0, 5.0, 5.0, 5.0}, {50.0, 50.0, 50.0, 50.0});
    EnvReading env{50.0, 20.0};
    auto report = extract_features(frame, ZoneMask(2, 2, {3, 3, 3, 3}), env);
    REQUIRE(report.rows.size() == 1);

    double r_sum = 0, nir_sum = 0, ndvi_sum = 0;
    const double ch1[] = {100.0, 100.0, 0.0, 0.0};
    for (double c1 : ch1) {
        r_sum += oracle_r(c1, 50.0);
        nir_sum += oracle_nir(c1, 50.0);
        ndvi_sum += oracle_ndvi(c1, 50.0);
    }
    CHECK(report.rows[0].red == doctest::Approx(r_sum / 4.0).epsilon(1e-12));
    CHECK(report.rows[0].nir == doctest::Approx(nir_sum / 4.0).epsilon(1e-12));
    CHECK(report.rows[0].ndvi == doctest::Approx(ndvi_sum / 4.0).epsilon(1e-12));
    // frozen values from the oracle above
    CHECK(report.rows[0].red == doctest::Approx(-0.6).epsilon(1e-9));
    CHECK(report.rows[0].nir == doctest::Approx(449.34).epsilon(1e-9));
    CHECK(report.rows[0].ndvi ==
          doctest::Approx((43.0 / 54.4 + 1.236) / 2.0).epsilon(1e-12));
}

TEST_CASE("extract_features propagates empty zones and shape mismatches") {
    MultispectralFrame frame(2, 1, {0.0, 0.0}, {1.0, 1.0}, {0.0, 5.0});
    // zone 1 = only the zero-denominator pixel -> empty after NDVI masking
    try {
        extract_features(frame, ZoneMask(2, 1, {1, 2}), EnvReading{10, 10});
        FAIL("expected EmptyZoneError");
    } catch (const EmptyZoneError& e) {
        CHECK(e.zone == 1);
    }

    CHECK_THROWS_AS(extract_features(frame, ZoneMask(1, 1, {1}), EnvReading{10, 10}),
                    ShapeError);
    CHECK_THROWS_AS(extract_features(frame, ZoneMask(2, 1, {1, 1}), EnvReading{101, 10}),
                    ValidationError);
}

TEST_CASE("spectral properties on random frames") {
    Rng rng(1234);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t w = 1 + rng.uniform_index(6);
        const std::size_t h = 1 + rng.uniform_index(6);
        const std::size_t n = w * h;
        std::vector<double> c1(n), c2(n), c3(n);
        for (std::size_t i = 0; i < n; ++i) {
            c1[i] = rng.uniform(0.0, 255.0);
            c2[i] = rng.uniform(0.0, 255.0);
            c3[i] = rng.uniform(0.0, 255.0);
        }
        MultispectralFrame a(w, h, c1, c2, c3);

        // linearity of band separation
        std::vector<double> d1(n), d2(n), d3(n);
        for (std::size_t i = 0; i < n; ++i) {
            d1[i] = rng.uniform(0.0, 255.0);
            d2[i] = rng.uniform(0.0, 255.0);
            d3[i] = rng.uniform(0.0, 255.0);
        }
        MultispectralFrame b(w, h, d1, d2, d3);
        const double alpha = rng.uniform(0.0, 2.0);
        const double beta = rng.uniform(0.0, 2.0);
        std::vector<double> m1(n), m2(n), m3(n);
        for (std::size_t i = 0; i < n; ++i) {
            m1[i] = alpha * c1[i] + beta * d1[i];
            m2[i] = alpha * c2[i] + beta * d2[i];
            m3[i] = alpha * c3[i] + beta * d3[i];
        }
        auto mixed = separate_bands(MultispectralFrame(w, h, m1, m2, m3));
        auto ba = separate_bands(a);
        auto bb = separate_bands(b);
        for (std::size_t i = 0; i < n; ++i) {
            const double expect_r = alpha * ba.r[i] + beta * bb.r[i];
            CHECK(mixed.r[i] ==
                  doctest::Approx(expect_r).epsilon(1e-12).scale(std::fabs(expect_r) + 1));
        }

        // NDVI range and round-trip inversion
        auto ndvi = compute_ndvi(a);
        for (std::size_t i = 0; i < n; ++i) {
            if (!ndvi.valid[i]) continue;
            CHECK(ndvi.values[i] >= -4.2728 * (1.0 + 1e-12));
            CHECK(ndvi.values[i] <= 1.236 * (1.0 + 1e-12));
        }
        for (std::size_t i = 0; i < n; ++i) {
            double rec1 = 0, rec3 = 0;
            invert_band_separation(ba.r[i], ba.nir[i], rec1, rec3);
            CHECK(rec1 == doctest::Approx(c1[i]).epsilon(1e-9));
            CHECK(rec3 == doctest::Approx(c3[i]).epsilon(1e-9));
        }

        // zonal mean bounded by min/max and permutation invariant
        ZoneMask mask(w, h, std::vector<int>(n, 1));
        const double mean = zonal_mean(ba.r, {}, mask, 1);
        CHECK(mean >= *std::min_element(ba.r.begin(), ba.r.end()) - 1e-12);
        CHECK(mean <= *std::max_element(ba.r.begin(), ba.r.end()) + 1e-12);
        auto shuffled = ba.r;
        rng.shuffle(shuffled);
        CHECK(zonal_mean(shuffled, {}, mask, 1) ==
              doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("grid io round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "soiltn_grid_test";
    fs::create_directories(dir);

    const std::vector<double> values{1.5, 2.0, 0.25, 100.0, 0.1, 3.0};
    const std::string path = (dir / "band.grid").string();
    write_grid(path, 3, 2, values, "ch1");
    Grid grid = read_grid(path, "ch1");
    CHECK(grid.width == 3);
    CHECK(grid.height == 2);
    CHECK(grid.values == values);

    CHECK_THROWS_AS(read_grid(path, "ch2"), ValidationError);
    CHECK_THROWS_AS(read_grid((dir / "missing.grid").string()), ValidationError);

    ZoneMask mask(2, 2, {0, 1, 2, 2});
    const std::string mask_path = (dir / "zones.grid").string();
    write_zone_mask(mask_path, mask);
    ZoneMask back = read_zone_mask(mask_path);
    CHECK(back.labels == mask.labels);

    fs::remove_all(dir);
}

TEST_CASE("feature csv header") {
    std::vector<FeatureRow> rows{{1, 2.5, 3.0, 4.0, 0.5, 33.8, 23.2}};
    const std::string csv = feature_rows_to_csv(rows);
    CHECK(csv.rfind("zone,red,nir,green,ndvi,rh,air_temp\n", 0) == 0);
    CHECK(csv.find("1,2.5,3,4,0.5,33.8,23.2\n") != std::string::npos);
}
