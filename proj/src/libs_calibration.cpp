#include "soiltn/libs_calibration.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "soiltn/csv.hpp"
#include "soiltn/errors.hpp"

namespace soiltn {

namespace fs = std::filesystem;
using nlohmann::json;

Spectrum::Spectrum(std::vector<double> wl, std::vector<double> inten)
    : wavelength_nm(std::move(wl)), intensity(std::move(inten)) {
    if (wavelength_nm.size() != intensity.size()) {
        throw ShapeError("spectrum wavelength/intensity lengths differ");
    }
    for (std::size_t i = 0; i < wavelength_nm.size(); ++i) {
        if (!std::isfinite(wavelength_nm[i])) {
            throw ValidationError("non-finite wavelength at sample " + std::to_string(i));
        }
        if (!std::isfinite(intensity[i]) || intensity[i] < 0.0) {
            throw ValidationError("negative or non-finite intensity at sample " +
                                  std::to_string(i));
        }
        if (i > 0 && wavelength_nm[i] <= wavelength_nm[i - 1]) {
            throw ValidationError("wavelengths must be strictly increasing (sample " +
                                  std::to_string(i) + ")");
        }
    }
}

void LineWindow::validate() const {
    if (!(half_width_nm > 0.0)) {
        throw ValidationError("line window half-width must be positive");
    }
    if (!std::isfinite(center_nm)) {
        throw ValidationError("line center must be finite");
    }
}

std::vector<LineWindow> default_nitrogen_lines() {
    return {
        {493.4, 1.0, false},
        {746.6, 1.0, true},  // weak, inconsistent response; excluded from batches
        {821.4, 1.0, false},
        {868.1, 1.0, false},
    };
}

PeakSample find_peak(const Spectrum& spectrum, const LineWindow& window) {
    window.validate();
    const double lo = window.center_nm - window.half_width_nm;
    const double hi = window.center_nm + window.half_width_nm;
    bool found = false;
    PeakSample best;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        const double wl = spectrum.wavelength_nm[i];
        if (wl < lo) continue;
        if (wl > hi) break;  // wavelengths are sorted
        if (!found || spectrum.intensity[i] > best.intensity) {
            best = {wl, spectrum.intensity[i]};
            found = true;
        }
    }
    if (!found) {
        throw OutOfRangeError("no spectrum samples inside window [" +
                              format_double(lo) + ", " + format_double(hi) + "] nm");
    }
    return best;
}

CalibrationModel fit_calibration(std::span<const CalibrationPair> pairs,
                                 double line_center_nm) {
    if (pairs.size() < 2) {
        throw InsufficientDataError("calibration needs at least 2 pairs, got " +
                                    std::to_string(pairs.size()));
    }
    const double n = static_cast<double>(pairs.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& p : pairs) {
        if (!std::isfinite(p.peak_intensity) || !std::isfinite(p.actual_tn_ppm)) {
            throw ValidationError("calibration pair contains a non-finite value");
        }
        sx += p.peak_intensity;
        sy += p.actual_tn_ppm;
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : pairs) {
        const double dx = p.peak_intensity - mx;
        const double dy = p.actual_tn_ppm - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw DegenerateFitError("all peak intensities are equal; cannot fit a slope");
    }

    CalibrationModel model;
    model.line_center_nm = line_center_nm;
    model.slope = sxy / sxx;
    model.intercept = my - model.slope * mx;
    model.n_points = pairs.size();

    double sse = 0.0;
    for (const auto& p : pairs) {
        const double e = p.actual_tn_ppm - (model.slope * p.peak_intensity + model.intercept);
        sse += e * e;
    }
    if (syy == 0.0) {
        // All targets equal: the intercept-including fit is exact, so SSE is
        // zero up to rounding and r2 is defined as 1.
        if (sse > 1e-9 * (1.0 + my * my)) {
            throw DegenerateFitError("zero target variance with nonzero residual");
        }
        model.r2 = 1.0;
    } else {
        model.r2 = 1.0 - sse / syy;
    }
    return model;
}

double apply_calibration(const CalibrationModel& model, double intensity) {
    if (!std::isfinite(intensity)) {
        throw ValidationError("intensity must be finite");
    }
    return model.slope * intensity + model.intercept;
}

std::string calibration_to_json(const CalibrationModel& model) {
    json j;
    j["line_center"] = model.line_center_nm;
    j["slope"] = model.slope;
    j["intercept"] = model.intercept;
    j["r2"] = model.r2;
    j["n_points"] = model.n_points;
    return j.dump(2) + "\n";
}

CalibrationModel calibration_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("invalid calibration JSON: ") + e.what());
    }
    CalibrationModel model;
    try {
        model.line_center_nm = j.at("line_center").get<double>();
        model.slope = j.at("slope").get<double>();
        model.intercept = j.at("intercept").get<double>();
        model.r2 = j.at("r2").get<double>();
        model.n_points = j.at("n_points").get<std::size_t>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("calibration JSON missing fields: ") + e.what());
    }
    return model;
}

Spectrum read_spectrum_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.header.size() != 2 || table.header[0] != "wavelength_nm" ||
        table.header[1] != "intensity") {
        throw ParseError(path + ": expected header 'wavelength_nm,intensity'");
    }
    std::vector<double> wl, inten;
    wl.reserve(table.rows.size());
    inten.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string ctx = path + " row " + std::to_string(i);
        wl.push_back(parse_double(row[0], ctx + " (wavelength_nm)"));
        inten.push_back(parse_double(row[1], ctx + " (intensity)"));
    }
    return Spectrum(std::move(wl), std::move(inten));
}

void write_spectrum_csv(const std::string& path, const Spectrum& spectrum) {
    std::ostringstream out;
    out << "wavelength_nm,intensity\n";
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        out << format_double(spectrum.wavelength_nm[i]) << ','
            << format_double(spectrum.intensity[i]) << '\n';
    }
    write_text_file(path, out.str());
}

std::string tn_column_name(double line_center_nm) {
    std::string s = "tn_" + format_double(line_center_nm);
    std::replace(s.begin(), s.end(), '.', '_');
    return s;
}

BatchReport batch_calibrate(const std::string& spectra_dir,
                            std::span<const LineWindow> windows,
                            const std::map<std::string, CalibrationModel>& models) {
    if (!fs::is_directory(spectra_dir)) {
        throw ValidationError("not a directory: " + spectra_dir);
    }

    BatchReport report;
    std::vector<LineWindow> active;
    for (const LineWindow& w : windows) {
        if (w.discarded) continue;
        w.validate();
        const std::string col = tn_column_name(w.center_nm);
        if (!models.count(col)) {
            throw ValidationError("no calibration model supplied for line " +
                                  format_double(w.center_nm) + " nm (column " + col + ")");
        }
        active.push_back(w);
        report.column_names.push_back(col);
    }
    if (active.empty()) {
        throw ValidationError("no retained line windows to calibrate against");
    }

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(spectra_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        report.warnings.push_back("no spectrum files found in " + spectra_dir);
        return report;
    }

    for (const std::string& file : files) {
        try {
            const Spectrum spectrum = read_spectrum_csv(file);
            BatchRow row;
            row.sample_id = fs::path(file).stem().string();
            for (std::size_t k = 0; k < active.size(); ++k) {
                const PeakSample peak = find_peak(spectrum, active[k]);
                const CalibrationModel& model = models.at(report.column_names[k]);
                const double tn = apply_calibration(model, peak.intensity);
                if (tn < 0.0) {
                    report.warnings.push_back(row.sample_id + ": negative TN (" +
                                              format_double(tn) + " ppm) at " +
                                              report.column_names[k]);
                }
                row.tn_ppm[report.column_names[k]] = tn;
            }
            report.rows.push_back(std::move(row));
        } catch (const Error& e) {
            report.failures.push_back(file + ": " + e.what());
        }
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const BatchRow& a, const BatchRow& b) { return a.sample_id < b.sample_id; });

    if (report.rows.empty()) {
        std::string msg = "all spectrum files failed to process:";
        for (const auto& f : report.failures) msg += "\n  " + f;
        throw ValidationError(msg);
    }
    return report;
}

std::string batch_report_to_csv(const BatchReport& report) {
    std::ostringstream out;
    out << "sample_id";
    for (const auto& col : report.column_names) out << ',' << col;
    out << '\n';
    for (const auto& row : report.rows) {
        out << row.sample_id;
        for (const auto& col : report.column_names) {
            out << ',' << format_double(row.tn_ppm.at(col));
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace soiltn
