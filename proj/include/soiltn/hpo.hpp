#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "soiltn/dataset.hpp"
#include "soiltn/metrics.hpp"
#include "soiltn/pipeline.hpp"

namespace soiltn {

// ---- search space ---------------------------------------------------------

struct CategoricalDomain {
    std::string name;
    std::vector<std::string> values;
};

struct NumericDomain {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    bool log_scale = false;  // sampling scale for random draws and mutation
    bool integer = false;
    std::vector<double> grid;  // default grid-search discretization
};

using ParamDomain = std::variant<CategoricalDomain, NumericDomain>;

struct SearchSpace {
    ModelKind kind = ModelKind::Mlp;
    std::vector<ParamDomain> params;  // enumeration order for grid search

    std::size_t grid_size() const;
    void validate() const;
};

// Built-in search spaces with the default discretizations:
// hidden sizes step 10 over [20, 250]; C log-spaced {1,...,10000};
// epsilon log-spaced {1e-4,...,1}.
SearchSpace mlp_search_space();
SearchSpace svr_search_space();

// One gene per parameter: category index or numeric value.
using Gene = std::variant<std::size_t, double>;
using Chromosome = std::vector<Gene>;

HyperParams decode_chromosome(const SearchSpace& space, const Chromosome& genes);

// ---- evaluation -----------------------------------------------------------

struct CvResult {
    std::vector<double> fold_rmse;
    double mean = 0.0;
    double stddev = 0.0;  // population
    HyperParams params;
    std::uint64_t seed = 0;
};

// Per fold: standardize on the k-1 training folds, fit, score RMSE on the
// held-out fold. Deterministic given (params, ds, k, seed). A training
// failure in any fold is rethrown naming the fold.
CvResult cv_score(const HyperParams& hp, const Dataset& ds, int k,
                  std::uint64_t seed);

using Objective = std::function<CvResult(const HyperParams&)>;

Objective make_cv_objective(const Dataset& ds, int k, std::uint64_t seed);

struct EvalRecord {
    std::size_t order = 0;  // deterministic candidate index, not completion order
    HyperParams params;
    CvResult cv;
    bool failed = false;
    std::string error;

    double score() const;  // mean CV RMSE; +inf when failed
};

struct HpoResult {
    std::string method;  // "gs", "rs", "ga" (or "default")
    HyperParams best_params;
    double best_score = 0.0;  // min mean CV RMSE over the log
    std::vector<EvalRecord> log;
    double computational_time_s = 0.0;  // measured by the caller via timed()
    std::uint64_t seed = 0;
    std::size_t budget = 0;                    // evaluations performed
    std::vector<double> generation_best_rmse;  // GA only: best-ever per generation
};

// Worker count for candidate evaluation: SOILTN_THREADS when set, else the
// hardware concurrency. Results are logged by candidate index, so scores do
// not depend on scheduling.
std::size_t hpo_thread_count();

// ---- search methods -------------------------------------------------------

// Evaluates every grid point exactly once in enumeration order; ties break
// to the earliest evaluation.
HpoResult grid_search(const SearchSpace& space, const Objective& objective,
                      std::uint64_t seed);

// Exactly `budget` draws: categoricals uniform, numeric ranges on their
// declared scale.
HpoResult random_search(const SearchSpace& space, std::size_t budget,
                        const Objective& objective, std::uint64_t seed);

std::size_t default_rs_budget(const SearchSpace& space);  // grid_size / 4

struct GaConfig {
    int population = 20;
    int generations = 25;
    int tournament = 3;
    double crossover_rate = 0.9;
    double mutation_rate = 0.1;
    int elitism = 1;
    std::uint64_t seed = 0;
    // Optional chromosomes placed at the front of the initial population;
    // the remainder is sampled. Lets a caller inject known-good configs.
    std::vector<Chromosome> initial;

    void validate() const;
};

// Tournament selection, uniform crossover per gene, per-gene mutation
// (categorical: resample; numeric: multiplicative log-normal jitter clipped
// to bounds), elitism carrying the best chromosomes unmodified. Evaluator
// failures take worst fitness and the run continues.
HpoResult genetic_search(const SearchSpace& space, const GaConfig& config,
                         const Objective& objective);

// ---- tuned runs and the full comparison sweep ------------------------------

struct TuneConfig {
    ModelKind model = ModelKind::Svr;
    double wavelength = 493.4;
    std::string method = "gs";  // gs | rs | ga | default
    int k = 5;
    std::uint64_t seed = 0;
    std::optional<std::size_t> budget;  // rs only; defaults to grid_size / 4
    GaConfig ga;                        // seed is derived from `seed`
    double test_fraction = 0.2;
};

struct TuneRun {
    TuneConfig config;
    HpoResult hpo;
    double default_cv_rmse = 0.0;  // default config on the identical folds
    ErrorStats test_abs_error;     // best config trained on train, scored on test
    ErrorStats test_signed_error;
    double test_rmse = 0.0;
    double test_rmspe = 0.0;
};

// Splits the corpus (seeded 80/20 by default), tunes on the training part
// under k-fold CV, then trains the winner on the full training part and
// scores the held-out test rows.
TuneRun run_tune(const Dataset& corpus, const TuneConfig& config);

// Methods x models x wavelengths on one corpus, sharing the seed. The
// defaults cover the full paper-style sweep (24 cells).
std::vector<TuneRun> run_comparison(
    const Dataset& corpus, int k, std::uint64_t seed,
    const std::vector<std::string>& methods = {"default", "gs", "rs", "ga"},
    const std::vector<ModelKind>& models = {ModelKind::Mlp, ModelKind::Svr},
    const std::vector<double>& wavelengths = {kTargetLines.begin(),
                                              kTargetLines.end()});

// ---- run-directory serialization ------------------------------------------

std::string evals_to_csv(const HpoResult& result, int k);
std::string tune_summary_to_json(const TuneRun& run);
TuneRun tune_summary_from_json(const std::string& text);

// Writes best_params.json, evals.csv and summary.json into `out_dir`.
void write_tune_run(const std::string& out_dir, const TuneRun& run);

}  // namespace soiltn
