// soiltn: batch CLI for the soil total-nitrogen estimation pipeline.
// Subcommands: extract, calibrate, tune, train, predict, report,
// diagnose-table. Exit codes: 0 success, 2 input error, 3 internal error.
// SOILTN_THREADS caps internal parallelism.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soiltn/csv.hpp"
#include "soiltn/dataset.hpp"
#include "soiltn/errors.hpp"
#include "soiltn/grid_io.hpp"
#include "soiltn/hpo.hpp"
#include "soiltn/libs_calibration.hpp"
#include "soiltn/metrics.hpp"
#include "soiltn/pipeline.hpp"
#include "soiltn/spectral.hpp"

namespace fs = std::filesystem;
using namespace soiltn;

namespace {

void write_or_print(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
    } else {
        write_text_file(out_path, content);
    }
}

// ---- extract ----------------------------------------------------------------

struct ExtractArgs {
    std::string ch1, ch2, ch3, mask, out;
    double rh = 0.0;
    double air_temp = 0.0;
};

void cmd_extract(const ExtractArgs& args) {
    const MultispectralFrame frame = read_frame(args.ch1, args.ch2, args.ch3);
    const ZoneMask mask = read_zone_mask(args.mask);
    const ExtractionReport report =
        extract_features(frame, mask, EnvReading{args.rh, args.air_temp});
    write_or_print(args.out, feature_rows_to_csv(report.rows));
    if (report.invalid_ndvi_pixels > 0) {
        std::cerr << "warning: " << report.invalid_ndvi_pixels
                  << " pixel(s) had a non-positive NDVI denominator and were "
                     "excluded from zonal statistics\n";
    }
}

// ---- calibrate ----------------------------------------------------------------

struct CalibrateArgs {
    std::string pairs, out;
    double line = 0.0;
};

void cmd_calibrate(const CalibrateArgs& args) {
    CsvTable table = read_csv(args.pairs);
    const std::size_t int_col = table.column("peak_intensity");
    const std::size_t tn_col = table.column("actual_tn_ppm");
    std::vector<CalibrationPair> pairs;
    pairs.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::string ctx = args.pairs + " row " + std::to_string(i);
        CalibrationPair p;
        p.peak_intensity = parse_double(table.rows[i][int_col], ctx + " (peak_intensity)");
        p.actual_tn_ppm = parse_double(table.rows[i][tn_col], ctx + " (actual_tn_ppm)");
        if (p.actual_tn_ppm < 0.0) {
            throw ValidationError(ctx + ": actual TN must be non-negative");
        }
        pairs.push_back(p);
    }
    const CalibrationModel model = fit_calibration(pairs, args.line);
    write_or_print(args.out, calibration_to_json(model));
}

// ---- tune ----------------------------------------------------------------

struct TuneArgs {
    std::string table, method = "gs", model = "mlp", out;
    double wavelength = 493.4;
    int k = 5;
    std::uint64_t seed = 0;
    std::optional<std::size_t> budget;
    GaConfig ga;
};

void cmd_tune(const TuneArgs& args) {
    if (args.out.empty()) throw ValidationError("tune requires --out <directory>");
    const Dataset corpus = load_table(args.table);
    TuneConfig config;
    config.model = parse_model_kind(args.model);
    config.method = args.method;
    config.wavelength = args.wavelength;
    config.k = args.k;
    config.seed = args.seed;
    config.budget = args.budget;
    config.ga = args.ga;
    const TuneRun run = run_tune(corpus, config);
    write_tune_run(args.out, run);
    std::cout << "method=" << run.config.method
              << " model=" << to_string(run.config.model)
              << " wavelength=" << format_double(run.config.wavelength)
              << " best_cv_rmse=" << format_double(run.hpo.best_score)
              << " ct_seconds=" << format_double(run.hpo.computational_time_s)
              << "\n";
}

// ---- train / predict ----------------------------------------------------------------

struct TrainArgs {
    std::string table, model = "mlp", params, out;
    double wavelength = 493.4;
    std::uint64_t seed = 0;
};

void cmd_train(const TrainArgs& args) {
    if (args.out.empty()) throw ValidationError("train requires --out <model.json>");
    Dataset ds = load_table(args.table, validate_target_line(args.wavelength));
    HyperParams hp = args.params.empty()
                         ? default_hyperparams(parse_model_kind(args.model))
                         : HyperParams::from_json(read_text_file(args.params));
    const TrainedModel model = train_model(ds.feature_matrix(), ds.targets(), hp,
                                           ds.target_line, args.seed);
    save_model(args.out, model);
    const std::vector<double> preds = model.predict_rows(ds.feature_matrix());
    std::cout << "training_rmse=" << format_double(rmse(ds.targets(), preds)) << "\n";
}

struct PredictArgs {
    std::string model, features, out;
};

void cmd_predict(const PredictArgs& args) {
    const TrainedModel model = load_model(args.model);
    CsvTable table = read_csv(args.features);

    std::array<std::size_t, kFeatureCount> cols{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        cols[f] = table.column(kFeatureNames[f]);  // throws if absent
    }
    std::optional<std::size_t> id_col;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == "zone" || table.header[i] == "sample_id") id_col = i;
    }
    const std::string target_col = tn_column_name(model.target_line);
    std::optional<std::size_t> tn_col;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == target_col) tn_col = i;
    }

    std::ostringstream out;
    out << "index,prediction\n";
    std::vector<double> actual, predicted;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string ctx = args.features + " row " + std::to_string(r);
        std::array<double, kFeatureCount> row{};
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            row[f] = parse_double(table.rows[r][cols[f]],
                                  ctx + " (" + kFeatureNames[f] + ")");
        }
        const double pred = model.predict(row);
        predicted.push_back(pred);
        if (tn_col) {
            actual.push_back(parse_double(table.rows[r][*tn_col], ctx));
        }
        out << (id_col ? table.rows[r][*id_col] : std::to_string(r)) << ','
            << format_double(pred) << '\n';
    }
    if (table.rows.empty()) throw ValidationError(args.features + ": no data rows");
    write_or_print(args.out, out.str());
    if (tn_col) {
        std::cout << "rmse=" << format_double(rmse(actual, predicted)) << "\n";
    }
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
    std::string runs, out;
};

std::vector<TuneRun> collect_runs(const std::string& runs_dir) {
    if (!fs::is_directory(runs_dir)) {
        throw ValidationError("not a directory: " + runs_dir);
    }
    std::vector<std::string> summaries;
    for (const auto& entry : fs::recursive_directory_iterator(runs_dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "summary.json") {
            summaries.push_back(entry.path().string());
        }
    }
    std::sort(summaries.begin(), summaries.end());
    std::vector<TuneRun> runs;
    for (const auto& path : summaries) {
        runs.push_back(tune_summary_from_json(read_text_file(path)));
    }
    if (runs.empty()) {
        throw ValidationError("no completed tune runs (summary.json) under " + runs_dir);
    }
    return runs;
}

int method_rank(const std::string& m) {
    if (m == "default") return 0;
    if (m == "gs") return 1;
    if (m == "rs") return 2;
    return 3;
}

void cmd_report(const ReportArgs& args) {
    if (args.out.empty()) throw ValidationError("report requires --out <directory>");
    std::vector<TuneRun> runs = collect_runs(args.runs);
    fs::create_directories(args.out);
    const fs::path out_dir(args.out);

    // table3: winning configuration per tuned run
    std::vector<const TuneRun*> tuned;
    for (const auto& run : runs) {
        if (run.config.method != "default") tuned.push_back(&run);
    }
    std::sort(tuned.begin(), tuned.end(), [](const TuneRun* a, const TuneRun* b) {
        const auto ka = std::tuple(method_rank(a->config.method),
                                   to_string(a->config.model), a->config.wavelength);
        const auto kb = std::tuple(method_rank(b->config.method),
                                   to_string(b->config.model), b->config.wavelength);
        return ka < kb;
    });
    std::ostringstream t3;
    t3 << "method,model,wavelength,activation,solver,learning_rate,"
          "hidden_layer_sizes,kernel,C,epsilon\n";
    for (const TuneRun* run : tuned) {
        t3 << run->config.method << ',' << to_string(run->config.model) << ','
           << format_double(run->config.wavelength) << ',';
        if (run->hpo.best_params.kind() == ModelKind::Mlp) {
            const auto& p = run->hpo.best_params.mlp();
            t3 << to_string(p.activation) << ',' << to_string(p.solver) << ','
               << to_string(p.learning_rate) << ',' << p.hidden_layer_size << ",,,\n";
        } else {
            const auto& p = run->hpo.best_params.svr();
            t3 << ",,,," << to_string(p.kernel) << ',' << format_double(p.c) << ','
               << format_double(p.epsilon) << "\n";
        }
    }
    write_text_file((out_dir / "table3.csv").string(), t3.str());

    // table4: held-out absolute-error mu/sigma, default rows included
    std::vector<const TuneRun*> all;
    for (const auto& run : runs) all.push_back(&run);
    std::sort(all.begin(), all.end(), [](const TuneRun* a, const TuneRun* b) {
        const auto ka = std::tuple(to_string(a->config.model),
                                   method_rank(a->config.method), a->config.wavelength);
        const auto kb = std::tuple(to_string(b->config.model),
                                   method_rank(b->config.method), b->config.wavelength);
        return ka < kb;
    });
    std::ostringstream t4;
    t4 << "model,method,wavelength,error_mu,error_sigma\n";
    for (const TuneRun* run : all) {
        t4 << to_string(run->config.model) << ',' << run->config.method << ','
           << format_double(run->config.wavelength) << ','
           << format_double(run->test_abs_error.mean) << ','
           << format_double(run->test_abs_error.std) << "\n";
    }
    write_text_file((out_dir / "table4.csv").string(), t4.str());

    // fig10: (rmse, ct) per tuned method; comparison.csv adds the test metrics
    std::ostringstream f10, cmp;
    f10 << "method,model,wavelength,rmse,ct_seconds\n";
    cmp << "method,model,wavelength,rmse,ct_seconds,test_error_mu,test_error_sigma,"
           "test_rmse,test_rmspe\n";
    for (const TuneRun* run : tuned) {
        f10 << run->config.method << ',' << to_string(run->config.model) << ','
            << format_double(run->config.wavelength) << ','
            << format_double(run->hpo.best_score) << ','
            << format_double(run->hpo.computational_time_s) << "\n";
    }
    for (const TuneRun* run : all) {
        cmp << run->config.method << ',' << to_string(run->config.model) << ','
            << format_double(run->config.wavelength) << ','
            << format_double(run->hpo.best_score) << ','
            << format_double(run->hpo.computational_time_s) << ','
            << format_double(run->test_abs_error.mean) << ','
            << format_double(run->test_abs_error.std) << ','
            << format_double(run->test_rmse) << ','
            << format_double(run->test_rmspe) << "\n";
    }
    write_text_file((out_dir / "fig10.csv").string(), f10.str());
    write_text_file((out_dir / "comparison.csv").string(), cmp.str());
    std::cout << "wrote table3.csv, table4.csv, fig10.csv, comparison.csv to "
              << args.out << "\n";
}

// ---- diagnose-table ----------------------------------------------------------------

struct DiagnoseArgs {
    std::string table, out;
};

void cmd_diagnose_table(const DiagnoseArgs& args) {
    const Dataset ds = load_table(args.table);
    std::ostringstream out;
    out << "row,ndvi_table,ndvi_from_band_means,delta\n";
    double max_abs_delta = 0.0;
    std::size_t large = 0;
    for (const auto& rec : ds.records) {
        // Reconstruct the mean DN values from the corrected band means, then
        // form the ratio-of-means NDVI. Differences against the table column
        // indicate it is a mean of per-pixel NDVI values, not a ratio of means.
        double dn1 = 0.0, dn3 = 0.0;
        invert_band_separation(rec.red, rec.nir, dn1, dn3);
        const double den = BandCoefficients::ndvi_den_ch3 * dn3 +
                           BandCoefficients::ndvi_den_ch1 * dn1;
        const double num = BandCoefficients::ndvi_num_ch3 * dn3 +
                           BandCoefficients::ndvi_num_ch1 * dn1;
        const double reconstructed = num / den;
        const double delta = reconstructed - rec.ndvi;
        max_abs_delta = std::max(max_abs_delta, std::fabs(delta));
        if (std::fabs(delta) > 0.05) ++large;
        out << rec.index << ',' << format_double(rec.ndvi) << ','
            << format_double(reconstructed) << ',' << format_double(delta) << '\n';
    }
    write_or_print(args.out, out.str());
    std::cerr << "rows=" << ds.size() << " max_abs_delta=" << format_double(max_abs_delta)
              << " rows_above_0.05=" << large << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"soiltn: soil total-nitrogen estimation from multispectral "
                 "features and LIBS calibration (set SOILTN_THREADS to cap "
                 "parallelism)"};
    app.require_subcommand(1);

    ExtractArgs extract_args;
    auto* extract = app.add_subcommand(
        "extract", "Band separation, NDVI and zonal feature extraction");
    extract->add_option("--ch1", extract_args.ch1, "channel-1 grid (red+NIR mix)")
        ->required();
    extract->add_option("--ch2", extract_args.ch2, "channel-2 grid (green)")->required();
    extract->add_option("--ch3", extract_args.ch3, "channel-3 grid (NIR)")->required();
    extract->add_option("--mask", extract_args.mask, "zone mask grid")->required();
    extract->add_option("--rh", extract_args.rh, "relative humidity, percent")
        ->required();
    extract->add_option("--air-temp", extract_args.air_temp, "air temperature, C")
        ->required();
    extract->add_option("--out", extract_args.out, "output CSV (stdout if omitted)");
    extract->callback([&] { cmd_extract(extract_args); });

    CalibrateArgs calibrate_args;
    auto* calibrate = app.add_subcommand(
        "calibrate", "Fit a linear intensity-to-TN calibration");
    calibrate
        ->add_option("--pairs", calibrate_args.pairs,
                     "CSV with peak_intensity,actual_tn_ppm columns")
        ->required();
    calibrate->add_option("--line", calibrate_args.line, "line center, nm")->required();
    calibrate->add_option("--out", calibrate_args.out,
                          "output JSON (stdout if omitted)");
    calibrate->callback([&] { cmd_calibrate(calibrate_args); });

    TuneArgs tune_args;
    auto* tune = app.add_subcommand(
        "tune", "Hyper-parameter search under k-fold cross-validation");
    tune->add_option("--table", tune_args.table, "training corpus CSV")->required();
    tune->add_option("--model", tune_args.model, "mlp or svr")->required();
    tune->add_option("--method", tune_args.method, "gs, rs, ga or default")
        ->required();
    tune->add_option("--wavelength", tune_args.wavelength,
                     "target line: 493.4, 821.4 or 868.1")
        ->required();
    tune->add_option("--seed", tune_args.seed, "master seed (fans out internally)");
    tune->add_option("--k", tune_args.k, "fold count (default 5)");
    std::size_t budget_flag = 0;
    auto* budget_opt =
        tune->add_option("--budget", budget_flag, "rs evaluation budget");
    tune->add_option("--ga-population", tune_args.ga.population, "GA population size");
    tune->add_option("--ga-generations", tune_args.ga.generations, "GA generations");
    tune->add_option("--ga-tournament", tune_args.ga.tournament, "GA tournament size");
    tune->add_option("--ga-crossover", tune_args.ga.crossover_rate, "GA crossover rate");
    tune->add_option("--ga-mutation", tune_args.ga.mutation_rate, "GA mutation rate");
    tune->add_option("--ga-elitism", tune_args.ga.elitism, "GA elite count");
    tune->add_option("--out", tune_args.out, "run directory")->required();
    tune->callback([&] {
        if (*budget_opt) tune_args.budget = budget_flag;
        cmd_tune(tune_args);
    });

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train a model on a corpus");
    train->add_option("--table", train_args.table, "training corpus CSV")->required();
    train->add_option("--model", train_args.model, "mlp or svr (ignored with --params)");
    train->add_option("--params", train_args.params,
                      "hyper-parameter JSON (e.g. best_params.json)");
    train->add_option("--wavelength", train_args.wavelength, "target line")->required();
    train->add_option("--seed", train_args.seed, "master seed");
    train->add_option("--out", train_args.out, "output model JSON")->required();
    train->callback([&] { cmd_train(train_args); });

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "Score feature rows with a model");
    predict->add_option("--model", predict_args.model, "model JSON")->required();
    predict->add_option("--features", predict_args.features, "feature CSV")->required();
    predict->add_option("--out", predict_args.out, "output CSV (stdout if omitted)");
    predict->callback([&] { cmd_predict(predict_args); });

    ReportArgs report_args;
    auto* report = app.add_subcommand(
        "report", "Aggregate tune runs into table/figure CSVs");
    report->add_option("--runs", report_args.runs, "directory of tune runs")
        ->required();
    report->add_option("--out", report_args.out, "output directory")->required();
    report->callback([&] { cmd_report(report_args); });

    DiagnoseArgs diagnose_args;
    auto* diagnose = app.add_subcommand(
        "diagnose-table", "Check zonal NDVI consistency against band means");
    diagnose->add_option("--table", diagnose_args.table, "corpus CSV")->required();
    diagnose->add_option("--out", diagnose_args.out, "output CSV (stdout if omitted)");
    diagnose->callback([&] { cmd_diagnose_table(diagnose_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ComputeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
