#include "soiltn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "soiltn/csv.hpp"
#include "soiltn/errors.hpp"
#include "soiltn/rng.hpp"

namespace soiltn {

double SampleRecord::target(double line_center_nm) const {
    if (line_center_nm == 493.4) return tn_493_4;
    if (line_center_nm == 821.4) return tn_821_4;
    if (line_center_nm == 868.1) return tn_868_1;
    throw ValidationError("unknown target line " + format_double(line_center_nm));
}

std::vector<std::array<double, kFeatureCount>> Dataset::feature_matrix() const {
    std::vector<std::array<double, kFeatureCount>> out;
    out.reserve(records.size());
    for (const auto& rec : records) out.push_back(rec.features());
    return out;
}

std::vector<double> Dataset::targets() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& rec : records) out.push_back(rec.target(target_line));
    return out;
}

double validate_target_line(double line) {
    for (double known : kTargetLines) {
        if (line == known) return line;
    }
    throw ValidationError("wavelength must be one of 493.4, 821.4, 868.1; got " +
                          format_double(line));
}

Dataset load_table(const std::string& path, double target_line) {
    static const std::vector<std::string> expected_header = {
        "red", "nir", "green", "ndvi", "rh", "air_temp",
        "tn_493_4", "tn_821_4", "tn_868_1"};

    CsvTable table = read_csv(path);
    if (table.header != expected_header) {
        std::string got;
        for (const auto& h : table.header) {
            if (!got.empty()) got += ',';
            got += h;
        }
        throw ParseError(path + ": unexpected header '" + got + "'");
    }

    Dataset ds;
    ds.target_line = validate_target_line(target_line);
    ds.records.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        auto cell = [&](std::size_t col) {
            return parse_double(row[col], path + " row " + std::to_string(i) +
                                              " column '" + expected_header[col] + "'");
        };
        SampleRecord rec;
        rec.index = static_cast<int>(i);
        rec.red = cell(0);
        rec.nir = cell(1);
        rec.green = cell(2);
        rec.ndvi = cell(3);
        rec.rh = cell(4);
        rec.air_temp = cell(5);
        rec.tn_493_4 = cell(6);
        rec.tn_821_4 = cell(7);
        rec.tn_868_1 = cell(8);
        for (double v : {rec.red, rec.nir, rec.green, rec.ndvi, rec.rh, rec.air_temp}) {
            if (!std::isfinite(v)) {
                throw ValidationError(path + " row " + std::to_string(i) +
                                      ": non-finite feature value");
            }
        }
        for (double tn : {rec.tn_493_4, rec.tn_821_4, rec.tn_868_1}) {
            if (!(tn > 0.0) || !std::isfinite(tn)) {
                throw ValidationError(path + " row " + std::to_string(i) +
                                      ": TN values must be positive and finite");
            }
        }
        ds.records.push_back(rec);
    }
    return ds;
}

SplitResult split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("test fraction must lie strictly in (0, 1)");
    }
    const std::size_t n = ds.size();
    if (n < 2) throw ValidationError("need at least 2 records to split");

    // round half away from zero
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(n)));
    if (n_test == 0 || n_test >= n) {
        throw ValidationError("test fraction leaves an empty part");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(order);

    std::vector<std::size_t> test_idx(order.begin(), order.begin() + n_test);
    std::vector<std::size_t> train_idx(order.begin() + n_test, order.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    SplitResult result;
    result.train.target_line = ds.target_line;
    result.test.target_line = ds.target_line;
    for (std::size_t i : train_idx) result.train.records.push_back(ds.records[i]);
    for (std::size_t i : test_idx) result.test.records.push_back(ds.records[i]);
    return result;
}

FoldPlan kfold(const Dataset& ds, int k, std::uint64_t seed) {
    const std::size_t n = ds.size();
    if (k < 2 || static_cast<std::size_t>(k) > n) {
        throw ValidationError("k must lie in [2, n]; got k=" + std::to_string(k) +
                              " with n=" + std::to_string(n));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "folds"));
    rng.shuffle(order);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(n, -1);
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (int fold = 0; fold < k; ++fold) {
        const std::size_t size = base + (static_cast<std::size_t>(fold) < extra ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j) {
            plan.assignments[order[pos++]] = fold;
        }
    }
    return plan;
}

Standardizer Standardizer::fit(std::span<const std::array<double, kFeatureCount>> rows) {
    if (rows.empty()) throw ValidationError("cannot fit standardizer on zero rows");
    Standardizer s;
    const double n = static_cast<double>(rows.size());
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        double sum = 0.0;
        for (const auto& row : rows) sum += row[f];
        const double mean = sum / n;
        double var = 0.0;
        for (const auto& row : rows) {
            const double d = row[f] - mean;
            var += d * d;
        }
        var /= n;
        const double sd = std::sqrt(var);
        if (!(sd > 0.0)) {
            throw DegenerateFeatureError(std::string("feature '") + kFeatureNames[f] +
                                         "' is constant on the training rows");
        }
        s.mean_[f] = mean;
        s.std_[f] = sd;
    }
    return s;
}

std::array<double, kFeatureCount> Standardizer::apply(
    const std::array<double, kFeatureCount>& row) const {
    std::array<double, kFeatureCount> out;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        out[f] = (row[f] - mean_[f]) / std_[f];
    }
    return out;
}

std::array<double, kFeatureCount> Standardizer::inverse(
    const std::array<double, kFeatureCount>& row) const {
    std::array<double, kFeatureCount> out;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        out[f] = row[f] * std_[f] + mean_[f];
    }
    return out;
}

std::vector<std::array<double, kFeatureCount>> Standardizer::apply_all(
    std::span<const std::array<double, kFeatureCount>> rows) const {
    std::vector<std::array<double, kFeatureCount>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(apply(row));
    return out;
}

void Standardizer::set_stats(const std::array<double, kFeatureCount>& mean,
                             const std::array<double, kFeatureCount>& std_dev) {
    for (double sd : std_dev) {
        if (!(sd > 0.0)) throw ValidationError("standardizer std must be positive");
    }
    mean_ = mean;
    std_ = std_dev;
}

}  // namespace soiltn
