#pragma once

#include <array>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "soiltn/dataset.hpp"
#include "soiltn/mlp.hpp"
#include "soiltn/svr.hpp"

namespace soiltn {

enum class ModelKind { Mlp, Svr };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

// Tagged union over the two model configurations.
struct HyperParams {
    std::variant<MlpParams, SvrParams> value;

    ModelKind kind() const {
        return std::holds_alternative<MlpParams>(value) ? ModelKind::Mlp
                                                        : ModelKind::Svr;
    }
    const MlpParams& mlp() const { return std::get<MlpParams>(value); }
    const SvrParams& svr() const { return std::get<SvrParams>(value); }

    // Stable `key=value;...` form used in evaluation logs.
    std::string describe() const;

    std::string to_json() const;
    static HyperParams from_json(const std::string& text);
};

// Stock configurations: mlp relu/adam/constant/100, svr rbf/C=1/epsilon=0.1.
HyperParams default_hyperparams(ModelKind kind);

// A fitted model plus everything needed to score raw feature rows.
struct TrainedModel {
    std::variant<MlpModel, SvrModel> impl;
    double target_line = 493.4;

    ModelKind kind() const {
        return std::holds_alternative<MlpModel>(impl) ? ModelKind::Mlp
                                                      : ModelKind::Svr;
    }
    const Standardizer& standardizer() const;

    double predict(const std::array<double, kFeatureCount>& raw_features) const;
    std::vector<double> predict_rows(
        std::span<const std::array<double, kFeatureCount>> raw_rows) const;
};

Eigen::MatrixXd to_matrix(std::span<const std::array<double, kFeatureCount>> rows);
Eigen::VectorXd to_vector(std::span<const double> values);

// Fits the standardizer on `features`, trains the configured model on the
// standardized rows, and embeds the standardizer in the result.
TrainedModel train_model(std::span<const std::array<double, kFeatureCount>> features,
                         std::span<const double> targets, const HyperParams& hp,
                         double target_line, std::uint64_t seed);

// JSON round trip; predictions are preserved exactly.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);

}  // namespace soiltn
