#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace soiltn {

inline constexpr std::size_t kFeatureCount = 6;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "red", "nir", "green", "ndvi", "rh", "air_temp"};

// The three retained nitrogen line centers, in file-column order.
inline constexpr std::array<double, 3> kTargetLines = {493.4, 821.4, 868.1};

struct SampleRecord {
    int index = 0;  // 0-based row order in the corpus file
    double red = 0.0, nir = 0.0, green = 0.0, ndvi = 0.0;
    double rh = 0.0, air_temp = 0.0;
    double tn_493_4 = 0.0, tn_821_4 = 0.0, tn_868_1 = 0.0;

    std::array<double, kFeatureCount> features() const {
        return {red, nir, green, ndvi, rh, air_temp};
    }
    double target(double line_center_nm) const;
};

struct Dataset {
    std::vector<SampleRecord> records;
    double target_line = 493.4;  // selects the active TN column

    std::size_t size() const { return records.size(); }
    std::vector<std::array<double, kFeatureCount>> feature_matrix() const;
    std::vector<double> targets() const;
};

// Checks that `line` is one of the supported centers and returns it.
double validate_target_line(double line);

// Loads the corpus CSV: header
// `red,nir,green,ndvi,rh,air_temp,tn_493_4,tn_821_4,tn_868_1`,
// row index implicit in file order. Validation errors name row and column.
Dataset load_table(const std::string& path, double target_line = 493.4);

// Seeded shuffle split; test size = round-half-away-from-zero of
// test_fraction * n. Record order within each part follows the original
// indices.
struct SplitResult {
    Dataset train;
    Dataset test;
};
SplitResult split(const Dataset& ds, double test_fraction, std::uint64_t seed);

struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;  // fold id per record position
    std::uint64_t seed = 0;
};

// Seeded shuffle then contiguous chunking; fold sizes differ by at most 1
// (the first n % k folds take the extra row).
FoldPlan kfold(const Dataset& ds, int k, std::uint64_t seed);

// Per-feature mean/std (population, n-divisor) fit on training rows only.
class Standardizer {
public:
    // Default-constructed standardizer is the identity (mean 0, std 1).
    Standardizer() { std_.fill(1.0); }

    static Standardizer fit(std::span<const std::array<double, kFeatureCount>> rows);

    std::array<double, kFeatureCount> apply(
        const std::array<double, kFeatureCount>& row) const;
    std::array<double, kFeatureCount> inverse(
        const std::array<double, kFeatureCount>& row) const;

    std::vector<std::array<double, kFeatureCount>> apply_all(
        std::span<const std::array<double, kFeatureCount>> rows) const;

    const std::array<double, kFeatureCount>& mean() const { return mean_; }
    const std::array<double, kFeatureCount>& std_dev() const { return std_; }

    void set_stats(const std::array<double, kFeatureCount>& mean,
                   const std::array<double, kFeatureCount>& std_dev);

private:
    std::array<double, kFeatureCount> mean_{};
    std::array<double, kFeatureCount> std_{};
};

}  // namespace soiltn
