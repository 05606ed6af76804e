#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace soiltn {

// One LIBS emission spectrum: (wavelength, intensity) samples with strictly
// increasing wavelengths and non-negative finite intensities.
struct Spectrum {
    std::vector<double> wavelength_nm;
    std::vector<double> intensity;

    Spectrum() = default;
    Spectrum(std::vector<double> wl, std::vector<double> inten);

    std::size_t size() const { return wavelength_nm.size(); }
};

struct LineWindow {
    double center_nm = 0.0;
    double half_width_nm = 1.0;
    bool discarded = false;

    void validate() const;
};

// The nitrogen lines this pipeline works with. 746.6 nm is kept in the list
// for documentation but marked discarded and skipped by batch processing.
std::vector<LineWindow> default_nitrogen_lines();

struct PeakSample {
    double wavelength_nm = 0.0;
    double intensity = 0.0;
};

struct CalibrationPair {
    double peak_intensity = 0.0;
    double actual_tn_ppm = 0.0;
};

struct CalibrationModel {
    double line_center_nm = 0.0;
    double slope = 0.0;      // ppm per intensity unit
    double intercept = 0.0;  // ppm
    double r2 = 0.0;
    std::size_t n_points = 0;
};

// Sample of maximum intensity with wavelength inside
// [center - half_width, center + half_width]; ties break to the lowest
// wavelength. Throws OutOfRangeError when the window misses the spectrum.
PeakSample find_peak(const Spectrum& spectrum, const LineWindow& window);

// Ordinary least squares TN = slope * intensity + intercept, with
// r2 = 1 - SSE/SST on the fitting pairs. If all targets are equal and the
// fit is exact, r2 is defined as 1.
CalibrationModel fit_calibration(std::span<const CalibrationPair> pairs,
                                 double line_center_nm);

double apply_calibration(const CalibrationModel& model, double intensity);

std::string calibration_to_json(const CalibrationModel& model);
CalibrationModel calibration_from_json(const std::string& text);

// Two-column CSV `wavelength_nm,intensity` sorted ascending.
Spectrum read_spectrum_csv(const std::string& path);
void write_spectrum_csv(const std::string& path, const Spectrum& spectrum);

struct BatchRow {
    std::string sample_id;                   // file stem
    std::map<std::string, double> tn_ppm;    // column name -> TN
};

struct BatchReport {
    std::vector<BatchRow> rows;              // sorted by sample id
    std::vector<std::string> column_names;   // per retained line, file order
    std::vector<std::string> failures;       // per-file parse errors
    std::vector<std::string> warnings;       // e.g. negative TN flags
};

// Column name for a line center, e.g. 493.4 -> "tn_493_4".
std::string tn_column_name(double line_center_nm);

// Applies find_peak + apply_calibration to every spectrum CSV in a
// directory, one column per retained (non-discarded) line. Per-file parse
// failures are collected; the call throws only if every file failed.
BatchReport batch_calibrate(const std::string& spectra_dir,
                            std::span<const LineWindow> windows,
                            const std::map<std::string, CalibrationModel>& models);

std::string batch_report_to_csv(const BatchReport& report);

}  // namespace soiltn
