// Python bindings for the soiltn core: band math, calibration, dataset
// loading, model training/prediction and hyper-parameter tuning.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <utility>

#include "soiltn/csv.hpp"
#include "soiltn/dataset.hpp"
#include "soiltn/errors.hpp"
#include "soiltn/hpo.hpp"
#include "soiltn/libs_calibration.hpp"
#include "soiltn/metrics.hpp"
#include "soiltn/pipeline.hpp"
#include "soiltn/spectral.hpp"
#include "soiltn/svr.hpp"

namespace py = pybind11;
using namespace soiltn;
using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXd;

namespace {

MultispectralFrame frame_from(const MatrixXd& ch1, const MatrixXd& ch2,
                              const MatrixXd& ch3) {
    if (ch1.rows() != ch2.rows() || ch1.rows() != ch3.rows() ||
        ch1.cols() != ch2.cols() || ch1.cols() != ch3.cols()) {
        throw ShapeError("channel arrays disagree on shape");
    }
    const auto h = static_cast<std::size_t>(ch1.rows());
    const auto w = static_cast<std::size_t>(ch1.cols());
    std::vector<double> c1(w * h), c2(w * h), c3(w * h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto i = y * w + x;
            c1[i] = ch1(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
            c2[i] = ch2(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
            c3[i] = ch3(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
        }
    }
    return MultispectralFrame(w, h, std::move(c1), std::move(c2), std::move(c3));
}

MatrixXd to_matrix_2d(const std::vector<double>& values, std::size_t w, std::size_t h) {
    MatrixXd m(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w));
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) =
                values[y * w + x];
        }
    }
    return m;
}

std::vector<std::array<double, kFeatureCount>> rows_from(const MatrixXd& features) {
    if (features.cols() != static_cast<Eigen::Index>(kFeatureCount)) {
        throw ShapeError("feature matrix must have " + std::to_string(kFeatureCount) +
                         " columns");
    }
    std::vector<std::array<double, kFeatureCount>> rows(
        static_cast<std::size_t>(features.rows()));
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            rows[static_cast<std::size_t>(r)][f] = features(r, static_cast<Eigen::Index>(f));
        }
    }
    return rows;
}

std::vector<double> vec_from(const VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

PYBIND11_MODULE(soiltn, m) {
    m.doc() = "Soil total-nitrogen estimation pipeline (C++ core)";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ComputeError>(m, "ComputeError", PyExc_RuntimeError);

    m.def(
        "separate_bands",
        [](const MatrixXd& ch1, const MatrixXd& ch2, const MatrixXd& ch3) {
            const auto frame = frame_from(ch1, ch2, ch3);
            const auto bands = separate_bands(frame);
            return py::make_tuple(to_matrix_2d(bands.r, bands.width, bands.height),
                                  to_matrix_2d(bands.nir, bands.width, bands.height),
                                  to_matrix_2d(bands.g, bands.width, bands.height));
        },
        py::arg("ch1"), py::arg("ch2"), py::arg("ch3"),
        "Band separation; returns (r, nir, g) arrays.");

    m.def(
        "compute_ndvi",
        [](const MatrixXd& ch1, const MatrixXd& ch2, const MatrixXd& ch3) {
            const auto frame = frame_from(ch1, ch2, ch3);
            const auto ndvi = compute_ndvi(frame);
            MatrixXi valid(static_cast<Eigen::Index>(ndvi.height),
                           static_cast<Eigen::Index>(ndvi.width));
            for (std::size_t y = 0; y < ndvi.height; ++y) {
                for (std::size_t x = 0; x < ndvi.width; ++x) {
                    valid(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) =
                        ndvi.valid[y * ndvi.width + x];
                }
            }
            return py::make_tuple(to_matrix_2d(ndvi.values, ndvi.width, ndvi.height),
                                  valid);
        },
        py::arg("ch1"), py::arg("ch2"), py::arg("ch3"),
        "Per-pixel NDVI; returns (values, valid) with valid=0 where the "
        "denominator is not positive.");

    m.def(
        "extract_features",
        [](const MatrixXd& ch1, const MatrixXd& ch2, const MatrixXd& ch3,
           const MatrixXi& mask, double rh, double air_temp) {
            const auto frame = frame_from(ch1, ch2, ch3);
            std::vector<int> labels(frame.pixel_count());
            if (mask.rows() != ch1.rows() || mask.cols() != ch1.cols()) {
                throw ShapeError("mask shape must match the channels");
            }
            for (std::size_t y = 0; y < frame.height; ++y) {
                for (std::size_t x = 0; x < frame.width; ++x) {
                    labels[y * frame.width + x] = mask(
                        static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
                }
            }
            const auto report = extract_features(
                frame, ZoneMask(frame.width, frame.height, std::move(labels)),
                EnvReading{rh, air_temp});
            MatrixXd rows(static_cast<Eigen::Index>(report.rows.size()), 7);
            for (std::size_t i = 0; i < report.rows.size(); ++i) {
                const auto& r = report.rows[i];
                rows(static_cast<Eigen::Index>(i), 0) = r.zone;
                rows(static_cast<Eigen::Index>(i), 1) = r.red;
                rows(static_cast<Eigen::Index>(i), 2) = r.nir;
                rows(static_cast<Eigen::Index>(i), 3) = r.green;
                rows(static_cast<Eigen::Index>(i), 4) = r.ndvi;
                rows(static_cast<Eigen::Index>(i), 5) = r.rh;
                rows(static_cast<Eigen::Index>(i), 6) = r.air_temp;
            }
            return rows;
        },
        py::arg("ch1"), py::arg("ch2"), py::arg("ch3"), py::arg("mask"),
        py::arg("rh"), py::arg("air_temp"),
        "Zonal feature rows: columns zone,red,nir,green,ndvi,rh,air_temp.");

    m.def(
        "find_peak",
        [](const VectorXd& wavelength, const VectorXd& intensity, double center,
           double half_width) {
            const Spectrum s(vec_from(wavelength), vec_from(intensity));
            const auto peak = find_peak(s, LineWindow{center, half_width});
            return py::make_tuple(peak.wavelength_nm, peak.intensity);
        },
        py::arg("wavelength_nm"), py::arg("intensity"), py::arg("center_nm"),
        py::arg("half_width_nm") = 1.0);

    m.def(
        "fit_calibration",
        [](const std::vector<std::pair<double, double>>& pairs, double line_center) {
            std::vector<CalibrationPair> cp;
            cp.reserve(pairs.size());
            for (const auto& [intensity, tn] : pairs) cp.push_back({intensity, tn});
            const auto model = fit_calibration(cp, line_center);
            py::dict d;
            d["line_center"] = model.line_center_nm;
            d["slope"] = model.slope;
            d["intercept"] = model.intercept;
            d["r2"] = model.r2;
            d["n_points"] = model.n_points;
            return d;
        },
        py::arg("pairs"), py::arg("line_center_nm"),
        "Least-squares intensity-to-TN line from (intensity, tn_ppm) pairs.");

    m.def(
        "apply_calibration",
        [](double slope, double intercept, double intensity) {
            return apply_calibration(CalibrationModel{0.0, slope, intercept, 1.0, 2},
                                     intensity);
        },
        py::arg("slope"), py::arg("intercept"), py::arg("intensity"));

    m.def("rmse", [](const VectorXd& y, const VectorXd& yhat) {
        return rmse(vec_from(y), vec_from(yhat));
    });
    m.def("rmspe", [](const VectorXd& y, const VectorXd& yhat) {
        return rmspe(vec_from(y), vec_from(yhat));
    });
    m.def(
        "abs_error_stats",
        [](const VectorXd& y, const VectorXd& yhat) {
            const auto stats = abs_error_stats(vec_from(y), vec_from(yhat));
            return py::make_tuple(stats.mean, stats.std);
        },
        "Returns (mean, population std) of the absolute errors.");

    m.def(
        "kernel_eval",
        [](const std::string& kind, double gamma, double coef0, int degree,
           const VectorXd& x, const VectorXd& z) {
            return kernel_eval(KernelConfig{parse_kernel(kind), gamma, coef0, degree},
                               x, z);
        },
        py::arg("kind"), py::arg("gamma"), py::arg("coef0"), py::arg("degree"),
        py::arg("x"), py::arg("z"));

    m.def(
        "load_table",
        [](const std::string& path) {
            const Dataset ds = load_table(path);
            MatrixXd features(static_cast<Eigen::Index>(ds.size()),
                              static_cast<Eigen::Index>(kFeatureCount));
            const auto rows = ds.feature_matrix();
            for (std::size_t r = 0; r < rows.size(); ++r) {
                for (std::size_t f = 0; f < kFeatureCount; ++f) {
                    features(static_cast<Eigen::Index>(r),
                             static_cast<Eigen::Index>(f)) = rows[r][f];
                }
            }
            py::dict targets;
            for (double line : kTargetLines) {
                VectorXd y(static_cast<Eigen::Index>(ds.size()));
                for (std::size_t r = 0; r < ds.size(); ++r) {
                    y(static_cast<Eigen::Index>(r)) = ds.records[r].target(line);
                }
                targets[py::cast(format_double(line))] = y;
            }
            return py::make_tuple(features, targets);
        },
        py::arg("path"),
        "Loads the corpus; returns (features (n,6), {wavelength: targets}).");

    py::class_<TrainedModel>(m, "Model")
        .def_property_readonly("kind",
                               [](const TrainedModel& model) {
                                   return to_string(model.kind());
                               })
        .def_property_readonly("target_line",
                               [](const TrainedModel& model) {
                                   return model.target_line;
                               })
        .def(
            "predict",
            [](const TrainedModel& model, const MatrixXd& features) {
                const auto preds = model.predict_rows(rows_from(features));
                VectorXd out(static_cast<Eigen::Index>(preds.size()));
                for (std::size_t i = 0; i < preds.size(); ++i) {
                    out(static_cast<Eigen::Index>(i)) = preds[i];
                }
                return out;
            },
            py::arg("features"))
        .def("to_json", [](const TrainedModel& model) { return model_to_json(model); });

    m.def(
        "train_model",
        [](const MatrixXd& features, const VectorXd& targets,
           const std::string& params_json, double wavelength, std::uint64_t seed) {
            return train_model(rows_from(features), vec_from(targets),
                               HyperParams::from_json(params_json), wavelength, seed);
        },
        py::arg("features"), py::arg("targets"), py::arg("params_json"),
        py::arg("wavelength") = 493.4, py::arg("seed") = 0);

    m.def("model_from_json", &model_from_json, py::arg("text"));
    m.def(
        "default_params",
        [](const std::string& kind) {
            return default_hyperparams(parse_model_kind(kind)).to_json();
        },
        py::arg("kind"));

    m.def(
        "cv_score",
        [](const std::string& table_path, const std::string& params_json,
           double wavelength, int k, std::uint64_t seed) {
            const Dataset ds = load_table(table_path, wavelength);
            const CvResult result =
                cv_score(HyperParams::from_json(params_json), ds, k, seed);
            py::dict d;
            d["fold_rmse"] = result.fold_rmse;
            d["mean"] = result.mean;
            d["std"] = result.stddev;
            return d;
        },
        py::arg("table_path"), py::arg("params_json"), py::arg("wavelength") = 493.4,
        py::arg("k") = 5, py::arg("seed") = 0);

    m.def(
        "tune",
        [](const std::string& table_path, const std::string& model,
           const std::string& method, double wavelength, std::uint64_t seed, int k,
           int budget) {
            TuneConfig config;
            config.model = parse_model_kind(model);
            config.method = method;
            config.wavelength = wavelength;
            config.seed = seed;
            config.k = k;
            if (budget > 0) config.budget = static_cast<std::size_t>(budget);
            const TuneRun run = run_tune(load_table(table_path), config);
            return tune_summary_to_json(run);
        },
        py::arg("table_path"), py::arg("model"), py::arg("method"),
        py::arg("wavelength") = 493.4, py::arg("seed") = 0, py::arg("k") = 5,
        py::arg("budget") = -1,
        "Runs one tuning cell and returns the run summary as JSON.");
}
