#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "soiltn/csv.hpp"
#include "soiltn/errors.hpp"
#include "soiltn/libs_calibration.hpp"
#include "soiltn/rng.hpp"

using namespace soiltn;
namespace fs = std::filesystem;

namespace {

Spectrum triangular_peak(double center, double height) {
    // coarse baseline with a sharp triangular bump at `center`
    std::vector<double> wl, in;
    for (double w = center - 5.0; w <= center + 5.0 + 1e-9; w += 0.5) {
        wl.push_back(w);
        const double d = std::fabs(w - center);
        in.push_back(d < 1.0 ? height * (1.0 - d) : 0.1);
    }
    return Spectrum(std::move(wl), std::move(in));
}

}  // namespace

TEST_CASE("spectrum invariants") {
    CHECK_THROWS_AS(Spectrum({1.0, 1.0}, {0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(Spectrum({2.0, 1.0}, {0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(Spectrum({1.0, 2.0}, {0.0, -1.0}), ValidationError);
    CHECK_THROWS_AS(Spectrum({1.0}, {0.0, 1.0}), ShapeError);
}

TEST_CASE("find_peak picks the in-window maximum") {
    auto peak = find_peak(triangular_peak(821.4, 5.0), LineWindow{821.4, 2.0});
    CHECK(peak.wavelength_nm == doctest::Approx(821.4));
    CHECK(peak.intensity == doctest::Approx(5.0));

    // flat spectrum: tie breaks to the lowest in-window wavelength
    std::vector<double> wl, in;
    for (double w = 490.0; w <= 497.0; w += 0.5) {
        wl.push_back(w);
        in.push_back(1.0);
    }
    auto flat = find_peak(Spectrum(std::move(wl), std::move(in)),
                          LineWindow{493.4, 1.0});
    CHECK(flat.wavelength_nm == doctest::Approx(492.5));
    CHECK(flat.intensity == 1.0);

    // peak at 825 lies outside the (821.4, 2.0) window
    Spectrum two({818.0, 820.0, 825.0}, {0.5, 3.0, 7.0});
    auto inside = find_peak(two, LineWindow{821.4, 2.0});
    CHECK(inside.wavelength_nm == doctest::Approx(820.0));
    CHECK(inside.intensity == doctest::Approx(3.0));

    CHECK_THROWS_AS(find_peak(two, LineWindow{400.0, 1.0}), OutOfRangeError);
}

TEST_CASE("find_peak dominates every in-window sample") {
    Rng rng(7);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> wl, in;
        double w = 480.0;
        for (int i = 0; i < 100; ++i) {
            w += rng.uniform(0.05, 0.5);
            wl.push_back(w);
            in.push_back(rng.uniform(0.0, 50.0));
        }
        Spectrum s(wl, in);
        LineWindow window{wl[rng.uniform_index(wl.size())], rng.uniform(0.5, 5.0)};
        auto peak = find_peak(s, window);
        for (std::size_t i = 0; i < wl.size(); ++i) {
            if (std::fabs(wl[i] - window.center_nm) <= window.half_width_nm) {
                CHECK(peak.intensity >= in[i]);
            }
        }
    }
}

TEST_CASE("fit_calibration closed-form cases") {
    std::vector<CalibrationPair> line{{1, 2}, {2, 4}, {3, 6}};
    auto perfect = fit_calibration(line, 493.4);
    CHECK(perfect.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(perfect.intercept == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(perfect.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(perfect.n_points == 3);
    CHECK(perfect.line_center_nm == 493.4);

    std::vector<CalibrationPair> flat{{0, 3.5}, {1, 3.5}};
    auto degenerate_target = fit_calibration(flat, 821.4);
    CHECK(degenerate_target.slope == doctest::Approx(0.0));
    CHECK(degenerate_target.intercept == doctest::Approx(3.5));
    CHECK(degenerate_target.r2 == 1.0);

    std::vector<CalibrationPair> bent{{0, 0}, {1, 1}, {2, 1}};
    auto fit = fit_calibration(bent, 868.1);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
    CHECK(fit.r2 == doctest::Approx(0.75).epsilon(1e-10));

    CHECK_THROWS_AS(fit_calibration(std::vector<CalibrationPair>{{1, 2}}, 493.4),
                    InsufficientDataError);
    std::vector<CalibrationPair> same_x{{2, 1}, {2, 5}};
    CHECK_THROWS_AS(fit_calibration(same_x, 493.4), DegenerateFitError);
}

TEST_CASE("two distinct points interpolate exactly") {
    Rng rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        const double x1 = rng.uniform(0.0, 10.0);
        const double x2 = x1 + rng.uniform(0.5, 5.0);
        std::vector<CalibrationPair> pairs{{x1, rng.uniform(0.0, 100.0)},
                                           {x2, rng.uniform(0.0, 100.0)}};
        auto model = fit_calibration(pairs, 493.4);
        CHECK(apply_calibration(model, x1) ==
              doctest::Approx(pairs[0].actual_tn_ppm).epsilon(1e-9));
        CHECK(apply_calibration(model, x2) ==
              doctest::Approx(pairs[1].actual_tn_ppm).epsilon(1e-9));
        CHECK(model.r2 == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("apply_calibration") {
    CalibrationModel m{493.4, 2.0, 0.0, 1.0, 3};
    CHECK(apply_calibration(m, 0.0) == 0.0);
    CalibrationModel m2{493.4, 1.0, 5.0, 1.0, 3};
    CHECK(apply_calibration(m2, 5.0) == doctest::Approx(10.0));
    CalibrationModel m3{868.1, 0.5, 1.0 / 6.0, 0.75, 3};
    CHECK(apply_calibration(m3, 2.0) == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
    CHECK_THROWS_AS(apply_calibration(m3, std::nan("")), ValidationError);
}

TEST_CASE("affine equivariance of the intensity scale") {
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<CalibrationPair> pairs;
        for (int i = 0; i < 6; ++i) {
            pairs.push_back({rng.uniform(1.0, 50.0), rng.uniform(100.0, 2000.0)});
        }
        const double k = rng.uniform(0.1, 20.0);
        std::vector<CalibrationPair> scaled = pairs;
        for (auto& p : scaled) p.peak_intensity *= k;

        auto base = fit_calibration(pairs, 493.4);
        auto fit_scaled = fit_calibration(scaled, 493.4);
        CHECK(fit_scaled.slope == doctest::Approx(base.slope / k).epsilon(1e-10));
        CHECK(fit_scaled.r2 == doctest::Approx(base.r2).epsilon(1e-10));
        for (const auto& p : pairs) {
            CHECK(apply_calibration(fit_scaled, p.peak_intensity * k) ==
                  doctest::Approx(apply_calibration(base, p.peak_intensity))
                      .epsilon(1e-10));
        }
    }
}

TEST_CASE("slope recovery as noise vanishes") {
    Rng rng(41);
    const double a = 12.5, b = 300.0;
    double prev_err = 1e9;
    for (double noise : {10.0, 0.1, 1e-4}) {
        std::vector<CalibrationPair> pairs;
        for (int i = 0; i < 40; ++i) {
            const double x = rng.uniform(1.0, 30.0);
            pairs.push_back({x, a * x + b + noise * rng.normal()});
        }
        auto model = fit_calibration(pairs, 821.4);
        const double err = std::fabs(model.slope - a);
        CHECK(err < prev_err + 1.0);  // shrinking with the noise scale
        prev_err = err;
    }
    CHECK(prev_err < 1e-4);
}

TEST_CASE("calibration json round trip") {
    CalibrationModel m{821.4, 3.25, -1.5, 0.98, 4};
    auto back = calibration_from_json(calibration_to_json(m));
    CHECK(back.line_center_nm == m.line_center_nm);
    CHECK(back.slope == m.slope);
    CHECK(back.intercept == m.intercept);
    CHECK(back.r2 == m.r2);
    CHECK(back.n_points == m.n_points);

    CHECK_THROWS_AS(calibration_from_json("{\"slope\": 1"), SchemaError);
    CHECK_THROWS_AS(calibration_from_json("{}"), SchemaError);
}

TEST_CASE("default nitrogen lines mark 746.6 as discarded") {
    auto lines = default_nitrogen_lines();
    REQUIRE(lines.size() == 4);
    int discarded = 0;
    for (const auto& line : lines) {
        if (line.discarded) {
            ++discarded;
            CHECK(line.center_nm == doctest::Approx(746.6));
        }
        CHECK(line.half_width_nm == doctest::Approx(1.0));
    }
    CHECK(discarded == 1);
    CHECK(tn_column_name(493.4) == "tn_493_4");
    CHECK(tn_column_name(868.1) == "tn_868_1");
}

TEST_CASE("batch_calibrate composes find_peak and apply_calibration") {
    const fs::path dir = fs::temp_directory_path() / "soiltn_batch_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    write_spectrum_csv((dir / "s01.csv").string(), triangular_peak(493.4, 8.0));
    write_spectrum_csv((dir / "s02.csv").string(), triangular_peak(493.4, 3.0));

    std::map<std::string, CalibrationModel> models;
    models["tn_493_4"] = CalibrationModel{493.4, 1.0, 0.0, 1.0, 2};  // identity
    std::vector<LineWindow> windows{{493.4, 1.0, false}};

    auto report = batch_calibrate(dir.string(), windows, models);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].sample_id == "s01");
    CHECK(report.rows[0].tn_ppm.at("tn_493_4") == doctest::Approx(8.0));
    CHECK(report.rows[1].sample_id == "s02");
    CHECK(report.rows[1].tn_ppm.at("tn_493_4") == doctest::Approx(3.0));
    CHECK(report.failures.empty());

    const std::string csv = batch_report_to_csv(report);
    CHECK(csv.rfind("sample_id,tn_493_4\n", 0) == 0);

    // two lines -> 2x2 table equal to composing the unit operations per file
    std::map<std::string, CalibrationModel> two_models = models;
    two_models["tn_821_4"] = CalibrationModel{821.4, 2.0, 10.0, 1.0, 2};
    std::vector<LineWindow> two_windows{{493.4, 1.0, false}, {821.4, 1.0, false}};
    write_spectrum_csv((dir / "s01.csv").string(), [] {
        auto a = triangular_peak(493.4, 8.0);
        auto b = triangular_peak(821.4, 4.0);
        std::vector<double> wl = a.wavelength_nm, in = a.intensity;
        wl.insert(wl.end(), b.wavelength_nm.begin(), b.wavelength_nm.end());
        in.insert(in.end(), b.intensity.begin(), b.intensity.end());
        return Spectrum(wl, in);
    }());
    auto wide = batch_calibrate(dir.string(), two_windows, two_models);
    REQUIRE(wide.column_names.size() == 2);
    const Spectrum s01 = read_spectrum_csv((dir / "s01.csv").string());
    for (std::size_t k = 0; k < wide.column_names.size(); ++k) {
        const auto peak = find_peak(s01, two_windows[k]);
        const double expect =
            apply_calibration(two_models.at(wide.column_names[k]), peak.intensity);
        CHECK(wide.rows[0].tn_ppm.at(wide.column_names[k]) == doctest::Approx(expect));
    }

    fs::remove_all(dir);
}

TEST_CASE("batch_calibrate failure handling") {
    const fs::path dir = fs::temp_directory_path() / "soiltn_batch_err";
    fs::remove_all(dir);
    fs::create_directories(dir);

    std::map<std::string, CalibrationModel> models;
    models["tn_493_4"] = CalibrationModel{493.4, 1.0, 0.0, 1.0, 2};
    std::vector<LineWindow> windows{{493.4, 1.0, false}};

    // empty directory: empty table plus a warning
    auto empty = batch_calibrate(dir.string(), windows, models);
    CHECK(empty.rows.empty());
    CHECK(!empty.warnings.empty());

    // one bad file among good ones: failure recorded, run continues
    write_spectrum_csv((dir / "good.csv").string(), triangular_peak(493.4, 2.0));
    std::ofstream((dir / "bad.csv").string()) << "not,a\nspectrum,file\n";
    auto mixed = batch_calibrate(dir.string(), windows, models);
    CHECK(mixed.rows.size() == 1);
    CHECK(mixed.failures.size() == 1);

    // every file bad: the batch itself fails
    fs::remove(dir / "good.csv");
    CHECK_THROWS_AS(batch_calibrate(dir.string(), windows, models), ValidationError);

    fs::remove_all(dir);
}
