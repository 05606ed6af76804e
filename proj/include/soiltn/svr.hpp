#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "soiltn/dataset.hpp"

namespace soiltn {

enum class Kernel { Poly, Rbf, Sigmoid };

Kernel parse_kernel(const std::string& name);
std::string to_string(Kernel k);

// Fully resolved kernel constants.
//   rbf:     exp(-gamma * |x - z|^2)
//   poly:    (gamma * <x, z> + coef0)^degree
//   sigmoid: tanh(gamma * <x, z> + coef0)
struct KernelConfig {
    Kernel kind = Kernel::Rbf;
    double gamma = 1.0;
    double coef0 = 0.0;
    int degree = 3;
};

double kernel_eval(const KernelConfig& cfg, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& z);

struct SvrParams {
    Kernel kernel = Kernel::Rbf;
    double c = 1.0;
    double epsilon = 0.1;
    // gamma unset means the "scale" rule: 1 / (n_features * Var(X)) with the
    // pooled population variance of the training features.
    std::optional<double> gamma;
    double coef0 = 0.0;
    int degree = 3;

    void validate() const;
};

struct SvrFitOptions {
    double tol = 1e-4;                        // KKT violation threshold
    std::size_t max_pair_updates = 1000000;   // hard cap on SMO pair steps
};

struct SvrModel {
    SvrParams params;
    KernelConfig kernel;                // constants actually used
    Eigen::MatrixXd support_vectors;    // n_sv x d, standardized space
    Eigen::VectorXd dual_coefs;         // alpha_i - alpha*_i per support vector
    double bias = 0.0;
    double dual_objective = 0.0;        // minimized dual value at the solution
    std::size_t pair_updates = 0;
    Standardizer standardizer;          // identity unless set by the pipeline
};

double svr_resolve_gamma(const SvrParams& params, const Eigen::MatrixXd& x);

// Solves the epsilon-insensitive dual by sequential two-variable (SMO)
// optimization with maximal-violating-pair selection, stopping when the KKT
// violation drops below options.tol. Deterministic given the input order.
SvrModel svr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const SvrParams& params, const SvrFitOptions& options = {});

// f(x) = sum_i coef_i * K(sv_i, x) + bias; x must be standardized.
double svr_predict(const SvrModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd svr_predict_batch(const SvrModel& model, const Eigen::MatrixXd& x);

}  // namespace soiltn
