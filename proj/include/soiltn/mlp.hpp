#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "soiltn/dataset.hpp"

namespace soiltn {

enum class Activation { Relu, Tanh, Logistic, Identity };
enum class MlpSolver { Adam, Lbfgs };
enum class LrSchedule { Constant, Adaptive, InvScaling };

Activation parse_activation(const std::string& name);
MlpSolver parse_mlp_solver(const std::string& name);
LrSchedule parse_lr_schedule(const std::string& name);
std::string to_string(Activation a);
std::string to_string(MlpSolver s);
std::string to_string(LrSchedule s);

struct MlpParams {
    Activation activation = Activation::Relu;
    MlpSolver solver = MlpSolver::Adam;
    LrSchedule learning_rate = LrSchedule::Constant;
    int hidden_layer_size = 100;

    void validate() const;
};

struct StopCriteria {
    int max_iter = 0;
    double tol = 1e-6;  // minimum loss improvement still counted as progress
};

StopCriteria default_stop(MlpSolver solver);  // adam: 5000 iters; lbfgs: 1000

// One hidden layer: prediction = w2 . act(W1 x + b1) + b2.
struct MlpModel {
    MlpParams params;
    Eigen::MatrixXd w1;  // hidden x input
    Eigen::VectorXd b1;  // hidden
    Eigen::VectorXd w2;  // hidden
    double b2 = 0.0;
    std::vector<double> training_loss;  // loss at each visited iterate
    Standardizer standardizer;          // identity unless set by the pipeline

    Eigen::Index input_dim() const { return w1.cols(); }
    Eigen::Index hidden_size() const { return w1.rows(); }
};

// x must already be standardized with the model's standardizer.
double mlp_predict(const MlpModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd mlp_predict_batch(const MlpModel& model, const Eigen::MatrixXd& X);

// Mean-squared-error loss and its gradient by backpropagation. The gradient
// is packed as [W1 row-major, b1, w2, b2].
struct LossGrad {
    double loss = 0.0;
    Eigen::VectorXd grad;
};
LossGrad mlp_loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y);

// Trains on standardized features. Adam runs first/second-moment updates
// with the learning-rate schedule applied to the step size and returns the
// best iterate seen; LBFGS runs limited-memory quasi-Newton with Armijo
// backtracking. Deterministic given (params, seed, stop).
//
// Schedule semantics (adam only; inert for lbfgs):
//   constant:   alpha_t = 1e-3
//   invscaling: alpha_t = 1e-3 / sqrt(t)
//   adaptive:   alpha divided by 5 after 2 consecutive iterations without a
//               tol-sized improvement over the best loss
MlpModel mlp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const MlpParams& params, std::uint64_t seed,
                 StopCriteria stop = {});

}  // namespace soiltn
