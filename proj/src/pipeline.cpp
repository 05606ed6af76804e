#include "soiltn/pipeline.hpp"

#include <sstream>

#include <json.hpp>

#include "soiltn/csv.hpp"
#include "soiltn/errors.hpp"

namespace soiltn {

using nlohmann::json;

namespace {

constexpr int kModelSchemaVersion = 1;

json standardizer_to_json(const Standardizer& s) {
    json j;
    j["mean"] = std::vector<double>(s.mean().begin(), s.mean().end());
    j["std"] = std::vector<double>(s.std_dev().begin(), s.std_dev().end());
    return j;
}

Standardizer standardizer_from_json(const json& j) {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto sd = j.at("std").get<std::vector<double>>();
    if (mean.size() != kFeatureCount || sd.size() != kFeatureCount) {
        throw SchemaError("standardizer stats must have " +
                          std::to_string(kFeatureCount) + " entries");
    }
    std::array<double, kFeatureCount> m{}, s{};
    std::copy(mean.begin(), mean.end(), m.begin());
    std::copy(sd.begin(), sd.end(), s.begin());
    Standardizer out;
    out.set_stats(m, s);
    return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index expected_cols = -1) {
    if (!j.is_array()) throw SchemaError("expected a matrix (array of arrays)");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = expected_cols;
    if (rows > 0) cols = static_cast<Eigen::Index>(j[0].size());
    if (cols < 0) cols = 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols) {
            throw SchemaError("ragged matrix rows in model JSON");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                          .get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

json mlp_params_to_json(const MlpParams& p) {
    json j;
    j["activation"] = to_string(p.activation);
    j["solver"] = to_string(p.solver);
    j["learning_rate"] = to_string(p.learning_rate);
    j["hidden_layer_sizes"] = p.hidden_layer_size;
    return j;
}

MlpParams mlp_params_from_json(const json& j) {
    MlpParams p;
    p.activation = parse_activation(j.at("activation").get<std::string>());
    p.solver = parse_mlp_solver(j.at("solver").get<std::string>());
    p.learning_rate = parse_lr_schedule(j.at("learning_rate").get<std::string>());
    p.hidden_layer_size = j.at("hidden_layer_sizes").get<int>();
    p.validate();
    return p;
}

json svr_params_to_json(const SvrParams& p) {
    json j;
    j["kernel"] = to_string(p.kernel);
    j["C"] = p.c;
    j["epsilon"] = p.epsilon;
    if (p.gamma) {
        j["gamma"] = *p.gamma;
    } else {
        j["gamma"] = "scale";
    }
    j["coef0"] = p.coef0;
    j["degree"] = p.degree;
    return j;
}

SvrParams svr_params_from_json(const json& j) {
    SvrParams p;
    p.kernel = parse_kernel(j.at("kernel").get<std::string>());
    p.c = j.at("C").get<double>();
    p.epsilon = j.at("epsilon").get<double>();
    if (j.contains("gamma") && j.at("gamma").is_number()) {
        p.gamma = j.at("gamma").get<double>();
    }
    if (j.contains("coef0")) p.coef0 = j.at("coef0").get<double>();
    if (j.contains("degree")) p.degree = j.at("degree").get<int>();
    p.validate();
    return p;
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
    if (name == "mlp") return ModelKind::Mlp;
    if (name == "svr") return ModelKind::Svr;
    throw ValidationError("unknown model kind '" + name + "'");
}

std::string to_string(ModelKind kind) {
    return kind == ModelKind::Mlp ? "mlp" : "svr";
}

std::string HyperParams::describe() const {
    std::ostringstream out;
    if (kind() == ModelKind::Mlp) {
        const auto& p = mlp();
        out << "activation=" << to_string(p.activation)
            << ";solver=" << to_string(p.solver)
            << ";learning_rate=" << to_string(p.learning_rate)
            << ";hidden_layer_sizes=" << p.hidden_layer_size;
    } else {
        const auto& p = svr();
        out << "kernel=" << to_string(p.kernel) << ";C=" << format_double(p.c)
            << ";epsilon=" << format_double(p.epsilon);
    }
    return out.str();
}

std::string HyperParams::to_json() const {
    json j;
    j["model"] = to_string(kind());
    j["params"] = kind() == ModelKind::Mlp ? mlp_params_to_json(mlp())
                                           : svr_params_to_json(svr());
    return j.dump(2) + "\n";
}

HyperParams HyperParams::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("invalid hyper-parameter JSON: ") + e.what());
    }
    try {
        const auto kind = parse_model_kind(j.at("model").get<std::string>());
        if (kind == ModelKind::Mlp) {
            return HyperParams{mlp_params_from_json(j.at("params"))};
        }
        return HyperParams{svr_params_from_json(j.at("params"))};
    } catch (const json::exception& e) {
        throw SchemaError(std::string("hyper-parameter JSON missing fields: ") +
                          e.what());
    }
}

HyperParams default_hyperparams(ModelKind kind) {
    if (kind == ModelKind::Mlp) return HyperParams{MlpParams{}};
    return HyperParams{SvrParams{}};
}

const Standardizer& TrainedModel::standardizer() const {
    if (kind() == ModelKind::Mlp) return std::get<MlpModel>(impl).standardizer;
    return std::get<SvrModel>(impl).standardizer;
}

double TrainedModel::predict(const std::array<double, kFeatureCount>& raw) const {
    const auto scaled = standardizer().apply(raw);
    Eigen::VectorXd x(kFeatureCount);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        x(static_cast<Eigen::Index>(i)) = scaled[i];
    }
    if (kind() == ModelKind::Mlp) return mlp_predict(std::get<MlpModel>(impl), x);
    return svr_predict(std::get<SvrModel>(impl), x);
}

std::vector<double> TrainedModel::predict_rows(
    std::span<const std::array<double, kFeatureCount>> raw_rows) const {
    std::vector<double> out;
    out.reserve(raw_rows.size());
    for (const auto& row : raw_rows) out.push_back(predict(row));
    return out;
}

Eigen::MatrixXd to_matrix(std::span<const std::array<double, kFeatureCount>> rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), kFeatureCount);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

Eigen::VectorXd to_vector(std::span<const double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = values[i];
    }
    return v;
}

TrainedModel train_model(std::span<const std::array<double, kFeatureCount>> features,
                         std::span<const double> targets, const HyperParams& hp,
                         double target_line, std::uint64_t seed) {
    if (features.size() != targets.size()) {
        throw ShapeError("train_model: feature/target row counts differ");
    }
    const Standardizer std_fit = Standardizer::fit(features);
    const auto scaled = std_fit.apply_all(features);
    const Eigen::MatrixXd x = to_matrix(scaled);
    const Eigen::VectorXd y = to_vector(targets);

    TrainedModel out;
    out.target_line = target_line;
    if (hp.kind() == ModelKind::Mlp) {
        MlpModel model = mlp_fit(x, y, hp.mlp(), seed);
        model.standardizer = std_fit;
        out.impl = std::move(model);
    } else {
        SvrModel model = svr_fit(x, y, hp.svr());
        model.standardizer = std_fit;
        out.impl = std::move(model);
    }
    return out;
}

std::string model_to_json(const TrainedModel& model) {
    json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = to_string(model.kind());
    j["target_line"] = model.target_line;
    j["standardizer"] = standardizer_to_json(model.standardizer());
    if (model.kind() == ModelKind::Mlp) {
        const auto& m = std::get<MlpModel>(model.impl);
        json body = mlp_params_to_json(m.params);
        body["w1"] = matrix_to_json(m.w1);
        body["b1"] = vector_to_json(m.b1);
        body["w2"] = vector_to_json(m.w2);
        body["b2"] = m.b2;
        j["mlp"] = std::move(body);
    } else {
        const auto& m = std::get<SvrModel>(model.impl);
        json body = svr_params_to_json(m.params);
        body["gamma_resolved"] = m.kernel.gamma;
        body["support_vectors"] = matrix_to_json(m.support_vectors);
        body["dual_coefs"] = vector_to_json(m.dual_coefs);
        body["bias"] = m.bias;
        j["svr"] = std::move(body);
    }
    return j.dump(2) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("invalid model JSON: ") + e.what());
    }
    try {
        if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
            throw SchemaError("unsupported model schema_version");
        }
        TrainedModel out;
        out.target_line = j.at("target_line").get<double>();
        const Standardizer std_fit = standardizer_from_json(j.at("standardizer"));
        const auto kind = parse_model_kind(j.at("kind").get<std::string>());
        if (kind == ModelKind::Mlp) {
            const json& body = j.at("mlp");
            MlpModel m;
            m.params = mlp_params_from_json(body);
            m.w1 = matrix_from_json(body.at("w1"));
            m.b1 = vector_from_json(body.at("b1"));
            m.w2 = vector_from_json(body.at("w2"));
            m.b2 = body.at("b2").get<double>();
            if (m.b1.size() != m.w1.rows() || m.w2.size() != m.w1.rows()) {
                throw SchemaError("inconsistent MLP layer shapes in model JSON");
            }
            m.standardizer = std_fit;
            out.impl = std::move(m);
        } else {
            const json& body = j.at("svr");
            SvrModel m;
            m.params = svr_params_from_json(body);
            m.kernel = KernelConfig{m.params.kernel,
                                    body.at("gamma_resolved").get<double>(),
                                    m.params.coef0, m.params.degree};
            m.support_vectors = matrix_from_json(body.at("support_vectors"));
            m.dual_coefs = vector_from_json(body.at("dual_coefs"));
            m.bias = body.at("bias").get<double>();
            if (m.dual_coefs.size() != m.support_vectors.rows()) {
                throw SchemaError("support vector / coefficient count mismatch");
            }
            m.standardizer = std_fit;
            out.impl = std::move(m);
        }
        return out;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model JSON missing fields: ") + e.what());
    }
}

void save_model(const std::string& path, const TrainedModel& model) {
    write_text_file(path, model_to_json(model));
}

TrainedModel load_model(const std::string& path) {
    return model_from_json(read_text_file(path));
}

}  // namespace soiltn
