#include "soiltn/hpo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "soiltn/csv.hpp"
#include "soiltn/errors.hpp"
#include "soiltn/rng.hpp"

namespace soiltn {

using nlohmann::json;

// ---- search space ----------------------------------------------------------

std::size_t SearchSpace::grid_size() const {
    std::size_t total = 1;
    for (const auto& p : params) {
        if (const auto* cat = std::get_if<CategoricalDomain>(&p)) {
            total *= cat->values.size();
        } else {
            total *= std::get<NumericDomain>(p).grid.size();
        }
    }
    return total;
}

void SearchSpace::validate() const {
    if (params.empty()) throw ValidationError("search space has no parameters");
    for (const auto& p : params) {
        if (const auto* cat = std::get_if<CategoricalDomain>(&p)) {
            if (cat->values.empty()) {
                throw ValidationError("categorical '" + cat->name + "' has no values");
            }
            for (std::size_t i = 0; i < cat->values.size(); ++i) {
                for (std::size_t j = i + 1; j < cat->values.size(); ++j) {
                    if (cat->values[i] == cat->values[j]) {
                        throw ValidationError("categorical '" + cat->name +
                                              "' has duplicate value '" +
                                              cat->values[i] + "'");
                    }
                }
            }
        } else {
            const auto& num = std::get<NumericDomain>(p);
            if (!(num.lo < num.hi)) {
                throw ValidationError("numeric '" + num.name + "' needs lo < hi");
            }
            if (num.log_scale && !(num.lo > 0.0)) {
                throw ValidationError("log-scale '" + num.name + "' needs lo > 0");
            }
            if (num.grid.empty()) {
                throw ValidationError("numeric '" + num.name + "' has an empty grid");
            }
        }
    }
}

SearchSpace mlp_search_space() {
    SearchSpace space;
    space.kind = ModelKind::Mlp;
    space.params.push_back(
        CategoricalDomain{"activation", {"relu", "tanh", "logistic", "identity"}});
    space.params.push_back(CategoricalDomain{"solver", {"adam", "lbfgs"}});
    space.params.push_back(
        CategoricalDomain{"learning_rate", {"constant", "adaptive", "invscaling"}});
    NumericDomain hidden{"hidden_layer_sizes", 20.0, 250.0, false, true, {}};
    for (int h = 20; h <= 250; h += 10) hidden.grid.push_back(h);
    space.params.push_back(std::move(hidden));
    return space;
}

SearchSpace svr_search_space() {
    SearchSpace space;
    space.kind = ModelKind::Svr;
    space.params.push_back(CategoricalDomain{"kernel", {"poly", "rbf", "sigmoid"}});
    space.params.push_back(
        NumericDomain{"C", 1.0, 10000.0, true, false, {1.0, 10.0, 100.0, 1000.0, 10000.0}});
    space.params.push_back(
        NumericDomain{"epsilon", 1e-4, 1.0, true, false, {1e-4, 1e-3, 1e-2, 1e-1, 1.0}});
    return space;
}

HyperParams decode_chromosome(const SearchSpace& space, const Chromosome& genes) {
    if (genes.size() != space.params.size()) {
        throw ValidationError("chromosome length does not match the search space");
    }
    auto category = [&](std::size_t i) -> const std::string& {
        const auto& dom = std::get<CategoricalDomain>(space.params[i]);
        return dom.values.at(std::get<std::size_t>(genes[i]));
    };
    auto numeric = [&](std::size_t i) {
        const auto& dom = std::get<NumericDomain>(space.params[i]);
        const double v = std::get<double>(genes[i]);
        if (v < dom.lo * (1.0 - 1e-12) - 1e-12 || v > dom.hi * (1.0 + 1e-12)) {
            throw ValidationError("gene '" + dom.name + "' = " + format_double(v) +
                                  " lies outside [" + format_double(dom.lo) + ", " +
                                  format_double(dom.hi) + "]");
        }
        return v;
    };

    if (space.kind == ModelKind::Mlp) {
        MlpParams p;
        p.activation = parse_activation(category(0));
        p.solver = parse_mlp_solver(category(1));
        p.learning_rate = parse_lr_schedule(category(2));
        p.hidden_layer_size = static_cast<int>(std::llround(numeric(3)));
        p.validate();
        return HyperParams{p};
    }
    SvrParams p;
    p.kernel = parse_kernel(category(0));
    p.c = numeric(1);
    p.epsilon = numeric(2);
    p.validate();
    return HyperParams{p};
}

// ---- evaluation ------------------------------------------------------------

CvResult cv_score(const HyperParams& hp, const Dataset& ds, int k,
                  std::uint64_t seed) {
    const FoldPlan plan = kfold(ds, k, seed);
    const auto features = ds.feature_matrix();
    const auto targets = ds.targets();

    CvResult result;
    result.params = hp;
    result.seed = seed;
    result.fold_rmse.reserve(static_cast<std::size_t>(k));
    for (int fold = 0; fold < k; ++fold) {
        std::vector<std::array<double, kFeatureCount>> train_x, test_x;
        std::vector<double> train_y, test_y;
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (plan.assignments[i] == fold) {
                test_x.push_back(features[i]);
                test_y.push_back(targets[i]);
            } else {
                train_x.push_back(features[i]);
                train_y.push_back(targets[i]);
            }
        }
        try {
            const TrainedModel model =
                train_model(train_x, train_y, hp, ds.target_line,
                            derive_seed(seed, "cv-fit", static_cast<std::uint64_t>(fold)));
            const std::vector<double> preds = model.predict_rows(test_x);
            result.fold_rmse.push_back(rmse(test_y, preds));
        } catch (const Error& e) {
            throw TrainingError("cv fold " + std::to_string(fold) + ": " + e.what());
        }
    }

    const double n = static_cast<double>(result.fold_rmse.size());
    result.mean = std::accumulate(result.fold_rmse.begin(), result.fold_rmse.end(), 0.0) / n;
    double var = 0.0;
    for (double v : result.fold_rmse) var += (v - result.mean) * (v - result.mean);
    result.stddev = std::sqrt(var / n);
    return result;
}

Objective make_cv_objective(const Dataset& ds, int k, std::uint64_t seed) {
    return [ds, k, seed](const HyperParams& hp) { return cv_score(hp, ds, k, seed); };
}

double EvalRecord::score() const {
    return failed ? std::numeric_limits<double>::infinity() : cv.mean;
}

std::size_t hpo_thread_count() {
    if (const char* env = std::getenv("SOILTN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return std::min<long>(v, 64);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

namespace {

// Evaluates candidates on a small worker pool. Records land at their
// candidate index, so the log is identical however the work is scheduled.
std::vector<EvalRecord> evaluate_candidates(const std::vector<HyperParams>& candidates,
                                            const Objective& objective,
                                            std::size_t first_order) {
    std::vector<EvalRecord> records(candidates.size());
    auto eval_one = [&](std::size_t i) {
        records[i].order = first_order + i;
        records[i].params = candidates[i];
        try {
            records[i].cv = objective(candidates[i]);
        } catch (const std::exception& e) {
            records[i].failed = true;
            records[i].error = e.what();
        }
    };

    const std::size_t workers =
        std::min(hpo_thread_count(), std::max<std::size_t>(candidates.size(), 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < candidates.size(); ++i) eval_one(i);
        return records;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= candidates.size()) break;
                eval_one(i);
            }
        });
    }
    for (auto& t : pool) t.join();
    return records;
}

// Earliest evaluation order wins ties.
void pick_best(HpoResult& result) {
    std::size_t best = 0;
    bool found = false;
    for (std::size_t i = 0; i < result.log.size(); ++i) {
        if (!found || result.log[i].score() < result.log[best].score()) {
            best = i;
            found = true;
        }
    }
    if (!found || !std::isfinite(result.log[best].score())) {
        throw TrainingError("every candidate evaluation failed");
    }
    result.best_params = result.log[best].params;
    result.best_score = result.log[best].score();
}

Chromosome sample_chromosome(const SearchSpace& space, Rng& rng) {
    Chromosome genes;
    genes.reserve(space.params.size());
    for (const auto& p : space.params) {
        if (const auto* cat = std::get_if<CategoricalDomain>(&p)) {
            genes.emplace_back(rng.uniform_index(cat->values.size()));
        } else {
            const auto& num = std::get<NumericDomain>(p);
            double v;
            if (num.integer) {
                v = static_cast<double>(rng.uniform_int(
                    static_cast<std::int64_t>(num.lo), static_cast<std::int64_t>(num.hi)));
            } else if (num.log_scale) {
                v = std::exp(rng.uniform(std::log(num.lo), std::log(num.hi)));
            } else {
                v = rng.uniform(num.lo, num.hi);
            }
            genes.emplace_back(v);
        }
    }
    return genes;
}

double clip_numeric(const NumericDomain& num, double v) {
    if (num.integer) v = std::round(v);
    return std::min(num.hi, std::max(num.lo, v));
}

}  // namespace

// ---- grid search -----------------------------------------------------------

HpoResult grid_search(const SearchSpace& space, const Objective& objective,
                      std::uint64_t seed) {
    space.validate();
    const std::size_t total = space.grid_size();
    if (total == 0) throw ValidationError("grid search over an empty grid");

    std::vector<HyperParams> candidates;
    candidates.reserve(total);
    Chromosome genes(space.params.size());
    // Odometer enumeration: first declared parameter varies slowest.
    std::vector<std::size_t> counter(space.params.size(), 0);
    for (std::size_t n = 0; n < total; ++n) {
        for (std::size_t i = 0; i < space.params.size(); ++i) {
            if (const auto* cat = std::get_if<CategoricalDomain>(&space.params[i])) {
                (void)cat;
                genes[i] = counter[i];
            } else {
                genes[i] = std::get<NumericDomain>(space.params[i]).grid[counter[i]];
            }
        }
        candidates.push_back(decode_chromosome(space, genes));
        for (std::size_t i = space.params.size(); i-- > 0;) {
            const std::size_t radix =
                std::holds_alternative<CategoricalDomain>(space.params[i])
                    ? std::get<CategoricalDomain>(space.params[i]).values.size()
                    : std::get<NumericDomain>(space.params[i]).grid.size();
            if (++counter[i] < radix) break;
            counter[i] = 0;
        }
    }

    HpoResult result;
    result.method = "gs";
    result.seed = seed;
    result.log = evaluate_candidates(candidates, objective, 0);
    result.budget = result.log.size();
    pick_best(result);
    return result;
}

// ---- random search ---------------------------------------------------------

std::size_t default_rs_budget(const SearchSpace& space) {
    return std::max<std::size_t>(1, space.grid_size() / 4);
}

HpoResult random_search(const SearchSpace& space, std::size_t budget,
                        const Objective& objective, std::uint64_t seed) {
    space.validate();
    if (budget < 1) throw ValidationError("random search budget must be >= 1");

    Rng rng(derive_seed(seed, "rs"));
    std::vector<HyperParams> candidates;
    candidates.reserve(budget);
    for (std::size_t i = 0; i < budget; ++i) {
        candidates.push_back(decode_chromosome(space, sample_chromosome(space, rng)));
    }

    HpoResult result;
    result.method = "rs";
    result.seed = seed;
    result.log = evaluate_candidates(candidates, objective, 0);
    result.budget = result.log.size();
    pick_best(result);
    return result;
}

// ---- genetic search --------------------------------------------------------

void GaConfig::validate() const {
    if (population < 2) throw ValidationError("GA population must be >= 2");
    if (generations < 1) throw ValidationError("GA needs at least one generation");
    if (tournament < 1) throw ValidationError("GA tournament size must be >= 1");
    if (elitism < 1 || elitism >= population) {
        throw ValidationError("GA elitism must lie in [1, population)");
    }
    if (crossover_rate < 0.0 || crossover_rate > 1.0 || mutation_rate < 0.0 ||
        mutation_rate > 1.0) {
        throw ValidationError("GA rates must lie in [0, 1]");
    }
}

HpoResult genetic_search(const SearchSpace& space, const GaConfig& config,
                         const Objective& objective) {
    space.validate();
    config.validate();
    Rng rng(derive_seed(config.seed, "ga"));

    const std::size_t pop_size = static_cast<std::size_t>(config.population);
    std::vector<Chromosome> population;
    population.reserve(pop_size);
    for (const Chromosome& genes : config.initial) {
        if (population.size() == pop_size) break;
        decode_chromosome(space, genes);  // bounds/shape check
        population.push_back(genes);
    }
    while (population.size() < pop_size) {
        population.push_back(sample_chromosome(space, rng));
    }

    HpoResult result;
    result.method = "ga";
    result.seed = config.seed;

    std::vector<double> scores(pop_size);
    for (int gen = 0; gen < config.generations; ++gen) {
        std::vector<HyperParams> decoded;
        decoded.reserve(pop_size);
        for (const auto& genes : population) {
            decoded.push_back(decode_chromosome(space, genes));
        }
        auto records = evaluate_candidates(decoded, objective, result.log.size());
        for (std::size_t i = 0; i < pop_size; ++i) {
            scores[i] = records[i].score();  // +inf on failure; run continues
            result.log.push_back(std::move(records[i]));
        }

        double gen_best = std::numeric_limits<double>::infinity();
        for (double s : scores) gen_best = std::min(gen_best, s);
        const double best_so_far = result.generation_best_rmse.empty()
                                       ? gen_best
                                       : std::min(result.generation_best_rmse.back(), gen_best);
        result.generation_best_rmse.push_back(best_so_far);

        if (gen + 1 == config.generations) break;

        // Rank current population: ascending RMSE, ties by index.
        std::vector<std::size_t> rank(pop_size);
        std::iota(rank.begin(), rank.end(), 0);
        std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
            return scores[a] < scores[b];
        });

        auto tournament_pick = [&]() -> const Chromosome& {
            std::size_t winner = rng.uniform_index(pop_size);
            for (int round = 1; round < config.tournament; ++round) {
                const std::size_t challenger = rng.uniform_index(pop_size);
                if (scores[challenger] < scores[winner] ||
                    (scores[challenger] == scores[winner] && challenger < winner)) {
                    winner = challenger;
                }
            }
            return population[winner];
        };

        std::vector<Chromosome> next;
        next.reserve(pop_size);
        for (int e = 0; e < config.elitism; ++e) {
            next.push_back(population[rank[static_cast<std::size_t>(e)]]);
        }
        while (next.size() < pop_size) {
            Chromosome child = tournament_pick();
            if (rng.uniform01() < config.crossover_rate) {
                const Chromosome& other = tournament_pick();
                for (std::size_t g = 0; g < child.size(); ++g) {
                    if (rng.uniform01() < 0.5) child[g] = other[g];
                }
            }
            for (std::size_t g = 0; g < child.size(); ++g) {
                if (rng.uniform01() >= config.mutation_rate) continue;
                if (const auto* cat = std::get_if<CategoricalDomain>(&space.params[g])) {
                    child[g] = rng.uniform_index(cat->values.size());
                } else {
                    const auto& num = std::get<NumericDomain>(space.params[g]);
                    const double jitter = std::exp(0.25 * rng.normal());
                    child[g] = clip_numeric(num, std::get<double>(child[g]) * jitter);
                }
            }
            next.push_back(std::move(child));
        }
        population = std::move(next);
    }

    result.budget = result.log.size();
    pick_best(result);
    return result;
}

// ---- tuned runs -------------------------------------------------------------

TuneRun run_tune(const Dataset& corpus, const TuneConfig& config) {
    if (config.method != "gs" && config.method != "rs" && config.method != "ga" &&
        config.method != "default") {
        throw ValidationError("method must be one of gs, rs, ga, default; got '" +
                              config.method + "'");
    }
    Dataset ds = corpus;
    ds.target_line = validate_target_line(config.wavelength);

    const SplitResult parts =
        split(ds, config.test_fraction, derive_seed(config.seed, "tune-split"));
    const std::uint64_t fold_seed = derive_seed(config.seed, "tune-folds");
    const Objective objective = make_cv_objective(parts.train, config.k, fold_seed);
    const SearchSpace space =
        config.model == ModelKind::Mlp ? mlp_search_space() : svr_search_space();

    TuneRun run;
    run.config = config;
    auto [hpo, ct] = timed([&]() -> HpoResult {
        if (config.method == "gs") return grid_search(space, objective, config.seed);
        if (config.method == "rs") {
            const std::size_t budget = config.budget.value_or(default_rs_budget(space));
            return random_search(space, budget, objective, config.seed);
        }
        if (config.method == "ga") {
            GaConfig ga = config.ga;
            ga.seed = derive_seed(config.seed, "ga-run");
            return genetic_search(space, ga, objective);
        }
        // "default": a single evaluation of the stock configuration
        HpoResult r;
        r.method = "default";
        r.seed = config.seed;
        std::vector<HyperParams> only{default_hyperparams(config.model)};
        r.log = evaluate_candidates(only, objective, 0);
        r.budget = 1;
        pick_best(r);
        return r;
    });
    run.hpo = std::move(hpo);
    run.hpo.computational_time_s = ct;

    run.default_cv_rmse = objective(default_hyperparams(config.model)).mean;

    const TrainedModel final_model =
        train_model(parts.train.feature_matrix(), parts.train.targets(),
                    run.hpo.best_params, ds.target_line,
                    derive_seed(config.seed, "final-fit"));
    const auto test_features = parts.test.feature_matrix();
    const std::vector<double> predictions = final_model.predict_rows(test_features);
    const std::vector<double> actual = parts.test.targets();
    run.test_abs_error = abs_error_stats(actual, predictions);
    run.test_signed_error = signed_error_stats(actual, predictions);
    run.test_rmse = rmse(actual, predictions);
    run.test_rmspe = rmspe(actual, predictions);
    return run;
}

std::vector<TuneRun> run_comparison(const Dataset& corpus, int k, std::uint64_t seed,
                                    const std::vector<std::string>& methods,
                                    const std::vector<ModelKind>& models,
                                    const std::vector<double>& wavelengths) {
    std::vector<TuneRun> runs;
    for (ModelKind model : models) {
        for (double wavelength : wavelengths) {
            for (const std::string& method : methods) {
                TuneConfig config;
                config.model = model;
                config.wavelength = wavelength;
                config.method = method;
                config.k = k;
                config.seed = seed;
                runs.push_back(run_tune(corpus, config));
            }
        }
    }
    return runs;
}

// ---- serialization ----------------------------------------------------------

std::string evals_to_csv(const HpoResult& result, int k) {
    std::ostringstream out;
    out << "order,candidate";
    for (int f = 1; f <= k; ++f) out << ",fold_rmse_" << f;
    out << ",mean,std,status\n";
    for (const auto& rec : result.log) {
        out << rec.order << ',' << rec.params.describe();
        for (int f = 0; f < k; ++f) {
            out << ',';
            if (!rec.failed && f < static_cast<int>(rec.cv.fold_rmse.size())) {
                out << format_double(rec.cv.fold_rmse[static_cast<std::size_t>(f)]);
            }
        }
        if (rec.failed) {
            std::string msg = rec.error;
            for (char& c : msg) {
                if (c == ',' || c == '\n') c = ';';
            }
            out << ",inf,inf,failed: " << msg << '\n';
        } else {
            out << ',' << format_double(rec.cv.mean) << ','
                << format_double(rec.cv.stddev) << ",ok\n";
        }
    }
    return out.str();
}

std::string tune_summary_to_json(const TuneRun& run) {
    json j;
    j["schema_version"] = 1;
    j["method"] = run.config.method;
    j["model"] = to_string(run.config.model);
    j["wavelength"] = run.config.wavelength;
    j["k"] = run.config.k;
    j["seed"] = run.config.seed;
    j["budget"] = run.hpo.budget;
    j["best_params"] = json::parse(run.hpo.best_params.to_json());
    j["best_cv_rmse"] = run.hpo.best_score;
    j["default_cv_rmse"] = run.default_cv_rmse;
    j["ct_seconds"] = run.hpo.computational_time_s;
    j["test"] = {
        {"n", run.test_abs_error.n},
        {"abs_error_mean", run.test_abs_error.mean},
        {"abs_error_std", run.test_abs_error.std},
        {"signed_error_mean", run.test_signed_error.mean},
        {"signed_error_std", run.test_signed_error.std},
        {"rmse", run.test_rmse},
        {"rmspe", run.test_rmspe},
    };
    return j.dump(2) + "\n";
}

TuneRun tune_summary_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("invalid tune summary JSON: ") + e.what());
    }
    try {
        TuneRun run;
        run.config.method = j.at("method").get<std::string>();
        run.config.model = parse_model_kind(j.at("model").get<std::string>());
        run.config.wavelength = j.at("wavelength").get<double>();
        run.config.k = j.at("k").get<int>();
        run.config.seed = j.at("seed").get<std::uint64_t>();
        run.hpo.method = run.config.method;
        run.hpo.budget = j.at("budget").get<std::size_t>();
        run.hpo.best_params = HyperParams::from_json(j.at("best_params").dump());
        run.hpo.best_score = j.at("best_cv_rmse").get<double>();
        run.hpo.computational_time_s = j.at("ct_seconds").get<double>();
        run.default_cv_rmse = j.at("default_cv_rmse").get<double>();
        const json& t = j.at("test");
        run.test_abs_error.n = t.at("n").get<std::size_t>();
        run.test_abs_error.mean = t.at("abs_error_mean").get<double>();
        run.test_abs_error.std = t.at("abs_error_std").get<double>();
        run.test_signed_error.n = run.test_abs_error.n;
        run.test_signed_error.mean = t.at("signed_error_mean").get<double>();
        run.test_signed_error.std = t.at("signed_error_std").get<double>();
        run.test_rmse = t.at("rmse").get<double>();
        run.test_rmspe = t.at("rmspe").get<double>();
        return run;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("tune summary JSON missing fields: ") + e.what());
    }
}

void write_tune_run(const std::string& out_dir, const TuneRun& run) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text_file((dir / "best_params.json").string(), run.hpo.best_params.to_json());
    write_text_file((dir / "evals.csv").string(), evals_to_csv(run.hpo, run.config.k));
    write_text_file((dir / "summary.json").string(), tune_summary_to_json(run));
}

}  // namespace soiltn
