#include "soiltn/mlp.hpp"

#include <cmath>
#include <deque>

#include "soiltn/errors.hpp"
#include "soiltn/rng.hpp"

namespace soiltn {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

constexpr double kAdamAlpha0 = 1e-3;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr int kLbfgsMemory = 10;

// Packed parameter layout: [W1 row-major (h*nin), b1 (h), w2 (h), b2].
Index packed_size(Index nin, Index h) { return h * nin + 2 * h + 1; }

struct ParamView {
    ConstRowMajorMap w1;
    Eigen::Map<const VectorXd> b1;
    Eigen::Map<const VectorXd> w2;
    const double* b2;

    ParamView(const VectorXd& theta, Index nin, Index h)
        : w1(theta.data(), h, nin),
          b1(theta.data() + h * nin, h),
          w2(theta.data() + h * nin + h, h),
          b2(theta.data() + h * nin + 2 * h) {}
};

void apply_activation(Activation act, MatrixXd& z) {
    switch (act) {
        case Activation::Relu:
            z = z.cwiseMax(0.0);
            break;
        case Activation::Tanh:
            z = z.array().tanh().matrix();
            break;
        case Activation::Logistic:
            z = (1.0 / (1.0 + (-z.array()).exp())).matrix();
            break;
        case Activation::Identity:
            break;
    }
}

// Derivative expressed through the activated values h = act(z).
void activation_derivative(Activation act, const MatrixXd& h, MatrixXd& dh) {
    switch (act) {
        case Activation::Relu:
            dh = (h.array() > 0.0).cast<double>().matrix();
            break;
        case Activation::Tanh:
            dh = (1.0 - h.array().square()).matrix();
            break;
        case Activation::Logistic:
            dh = (h.array() * (1.0 - h.array())).matrix();
            break;
        case Activation::Identity:
            dh.setOnes(h.rows(), h.cols());
            break;
    }
}

struct Workspace {
    MatrixXd h;      // n x hidden, pre-activation then activation
    MatrixXd dz;     // n x hidden
    VectorXd pred;   // n
    VectorXd resid;  // n
};

// MSE loss; gradient (if grad != nullptr) packed like the parameters.
double eval(const VectorXd& theta, const MatrixXd& x, const VectorXd& y,
            Activation act, Index hidden, Workspace& ws, VectorXd* grad) {
    const Index n = x.rows();
    const Index nin = x.cols();
    ParamView p(theta, nin, hidden);

    ws.h.noalias() = x * p.w1.transpose();
    ws.h.rowwise() += p.b1.transpose();
    apply_activation(act, ws.h);
    ws.pred.noalias() = ws.h * p.w2;
    ws.pred.array() += *p.b2;
    ws.resid = ws.pred - y;
    const double loss = ws.resid.squaredNorm() / static_cast<double>(n);

    if (grad) {
        grad->resize(theta.size());
        RowMajorMap gw1(grad->data(), hidden, nin);
        Eigen::Map<VectorXd> gb1(grad->data() + hidden * nin, hidden);
        Eigen::Map<VectorXd> gw2(grad->data() + hidden * nin + hidden, hidden);
        double& gb2 = (*grad)(hidden * nin + 2 * hidden);

        const double scale = 2.0 / static_cast<double>(n);
        ws.resid *= scale;  // now d(loss)/d(pred)
        gw2.noalias() = ws.h.transpose() * ws.resid;
        gb2 = ws.resid.sum();

        activation_derivative(act, ws.h, ws.dz);
        ws.dz.array().colwise() *= ws.resid.array();
        ws.dz.array().rowwise() *= p.w2.transpose().array();
        gw1.noalias() = ws.dz.transpose() * x;
        gb1 = ws.dz.colwise().sum();
    }
    return loss;
}

VectorXd init_params(Index nin, Index h, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "mlp-init"));
    VectorXd theta(packed_size(nin, h));
    const double bound1 = std::sqrt(6.0 / static_cast<double>(nin + h));
    const double bound2 = std::sqrt(6.0 / static_cast<double>(h + 1));
    Index pos = 0;
    for (Index i = 0; i < h * nin + h; ++i) theta(pos++) = rng.uniform(-bound1, bound1);
    for (Index i = 0; i < h + 1; ++i) theta(pos++) = rng.uniform(-bound2, bound2);
    return theta;
}

MlpModel unpack(const VectorXd& theta, Index nin, Index h, const MlpParams& params) {
    MlpModel model;
    model.params = params;
    ParamView p(theta, nin, h);
    model.w1 = p.w1;
    model.b1 = p.b1;
    model.w2 = p.w2;
    model.b2 = *p.b2;
    return model;
}

MlpModel fit_adam(const MatrixXd& x, const VectorXd& y, const MlpParams& params,
                  std::uint64_t seed, const StopCriteria& stop) {
    const Index nin = x.cols();
    const Index h = params.hidden_layer_size;
    VectorXd theta = init_params(nin, h, seed);
    Workspace ws;
    VectorXd grad;

    VectorXd m = VectorXd::Zero(theta.size());
    VectorXd v = VectorXd::Zero(theta.size());
    double alpha = kAdamAlpha0;

    std::vector<double> log;
    log.reserve(static_cast<std::size_t>(stop.max_iter) + 1);
    double best_loss = std::numeric_limits<double>::infinity();
    VectorXd best_theta = theta;
    int no_improve_stop = 0;
    int no_improve_lr = 0;

    for (int t = 1; t <= stop.max_iter; ++t) {
        const double loss = eval(theta, x, y, params.activation, h, ws, &grad);
        log.push_back(loss);
        if (!std::isfinite(loss)) {
            throw TrainingError("adam diverged: non-finite loss at iteration " +
                                    std::to_string(t),
                                log);
        }
        if (loss < best_loss - stop.tol) {
            no_improve_stop = 0;
            no_improve_lr = 0;
        } else {
            ++no_improve_stop;
            ++no_improve_lr;
        }
        if (loss < best_loss) {
            best_loss = loss;
            best_theta = theta;
        }
        if (no_improve_stop >= 10) break;
        if (params.learning_rate == LrSchedule::Adaptive && no_improve_lr >= 2) {
            alpha /= 5.0;
            no_improve_lr = 0;
        }

        double step = alpha;
        if (params.learning_rate == LrSchedule::InvScaling) {
            step = kAdamAlpha0 / std::sqrt(static_cast<double>(t));
        }

        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
        v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
        const double mc = 1.0 / (1.0 - std::pow(kAdamBeta1, t));
        const double vc = 1.0 / (1.0 - std::pow(kAdamBeta2, t));
        theta.array() -=
            step * (m.array() * mc) / ((v.array() * vc).sqrt() + kAdamEps);
    }

    const double final_loss = eval(theta, x, y, params.activation, h, ws, nullptr);
    log.push_back(final_loss);
    if (std::isfinite(final_loss) && final_loss < best_loss) {
        best_loss = final_loss;
        best_theta = theta;
    }

    MlpModel model = unpack(best_theta, nin, h, params);
    model.training_loss = std::move(log);
    return model;
}

MlpModel fit_lbfgs(const MatrixXd& x, const VectorXd& y, const MlpParams& params,
                   std::uint64_t seed, const StopCriteria& stop) {
    const Index nin = x.cols();
    const Index h = params.hidden_layer_size;
    VectorXd theta = init_params(nin, h, seed);
    Workspace ws;

    struct Pair {
        VectorXd s, yv;
        double rho;
    };
    std::deque<Pair> history;

    VectorXd grad, grad_new, direction, candidate;
    std::vector<double> log;
    double loss = eval(theta, x, y, params.activation, h, ws, &grad);
    if (!std::isfinite(loss)) {
        throw TrainingError("lbfgs: non-finite loss at initialization", {loss});
    }

    int no_improve = 0;
    for (int t = 1; t <= stop.max_iter; ++t) {
        log.push_back(loss);
        if (grad.lpNorm<Eigen::Infinity>() <= 1e-9 * std::max(1.0, std::fabs(loss))) {
            break;
        }

        // Two-loop recursion for d = -H g.
        direction = -grad;
        std::vector<double> alpha_hist(history.size());
        for (std::size_t i = history.size(); i-- > 0;) {
            const Pair& p = history[i];
            alpha_hist[i] = p.rho * p.s.dot(direction);
            direction -= alpha_hist[i] * p.yv;
        }
        if (!history.empty()) {
            const Pair& last = history.back();
            direction *= last.s.dot(last.yv) / last.yv.squaredNorm();
        }
        for (std::size_t i = 0; i < history.size(); ++i) {
            const Pair& p = history[i];
            const double beta = p.rho * p.yv.dot(direction);
            direction += (alpha_hist[i] - beta) * p.s;
        }

        double dg = grad.dot(direction);
        bool steepest = false;
        if (!(dg < 0.0)) {
            direction = -grad;
            dg = -grad.squaredNorm();
            steepest = true;
        }

        // Armijo backtracking; falls back to steepest descent once.
        bool accepted = false;
        double new_loss = loss;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            double step = (t == 1) ? std::min(1.0, 1.0 / (1.0 + grad.norm())) : 1.0;
            for (int k = 0; k < 60; ++k) {
                candidate = theta + step * direction;
                new_loss = eval(candidate, x, y, params.activation, h, ws, nullptr);
                if (std::isfinite(new_loss) && new_loss <= loss + 1e-4 * step * dg) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                if (steepest) break;
                direction = -grad;
                dg = -grad.squaredNorm();
                steepest = true;
            }
        }
        if (!accepted) break;  // no descent possible at this scale

        eval(candidate, x, y, params.activation, h, ws, &grad_new);
        VectorXd s = candidate - theta;
        VectorXd yv = grad_new - grad;
        const double curv = s.dot(yv);
        if (curv > 1e-10 * s.norm() * yv.norm()) {
            history.push_back({std::move(s), std::move(yv), 1.0 / curv});
            if (history.size() > static_cast<std::size_t>(kLbfgsMemory)) {
                history.pop_front();
            }
        }

        const double improvement = loss - new_loss;
        theta = candidate;
        loss = new_loss;
        grad = grad_new;
        // Relative improvement threshold: losses here can sit at ppm^2 scale,
        // where an absolute cut would never trigger.
        if (improvement < stop.tol * std::max(1.0, std::fabs(loss))) {
            if (++no_improve >= 2) break;
        } else {
            no_improve = 0;
        }
    }
    log.push_back(loss);

    MlpModel model = unpack(theta, nin, h, params);
    model.training_loss = std::move(log);
    return model;
}

}  // namespace

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "logistic") return Activation::Logistic;
    if (name == "identity") return Activation::Identity;
    throw ValidationError("unknown activation '" + name + "'");
}

MlpSolver parse_mlp_solver(const std::string& name) {
    if (name == "adam") return MlpSolver::Adam;
    if (name == "lbfgs") return MlpSolver::Lbfgs;
    throw ValidationError("unknown solver '" + name + "'");
}

LrSchedule parse_lr_schedule(const std::string& name) {
    if (name == "constant") return LrSchedule::Constant;
    if (name == "adaptive") return LrSchedule::Adaptive;
    if (name == "invscaling") return LrSchedule::InvScaling;
    throw ValidationError("unknown learning-rate schedule '" + name + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Logistic: return "logistic";
        case Activation::Identity: return "identity";
    }
    return "?";
}

std::string to_string(MlpSolver s) {
    return s == MlpSolver::Adam ? "adam" : "lbfgs";
}

std::string to_string(LrSchedule s) {
    switch (s) {
        case LrSchedule::Constant: return "constant";
        case LrSchedule::Adaptive: return "adaptive";
        case LrSchedule::InvScaling: return "invscaling";
    }
    return "?";
}

void MlpParams::validate() const {
    if (hidden_layer_size < 1) {
        throw ValidationError("hidden layer size must be positive, got " +
                              std::to_string(hidden_layer_size));
    }
}

StopCriteria default_stop(MlpSolver solver) {
    return solver == MlpSolver::Adam ? StopCriteria{5000, 1e-6}
                                     : StopCriteria{1000, 1e-6};
}

double mlp_predict(const MlpModel& model, const VectorXd& x) {
    if (x.size() != model.input_dim()) {
        throw ShapeError("mlp_predict: input has " + std::to_string(x.size()) +
                         " features, model expects " +
                         std::to_string(model.input_dim()));
    }
    VectorXd z = model.w1 * x + model.b1;
    MatrixXd zm = z.transpose();
    apply_activation(model.params.activation, zm);
    return zm.row(0).dot(model.w2) + model.b2;
}

VectorXd mlp_predict_batch(const MlpModel& model, const MatrixXd& x) {
    if (x.cols() != model.input_dim()) {
        throw ShapeError("mlp_predict_batch: input has " + std::to_string(x.cols()) +
                         " features, model expects " +
                         std::to_string(model.input_dim()));
    }
    MatrixXd h = x * model.w1.transpose();
    h.rowwise() += model.b1.transpose();
    apply_activation(model.params.activation, h);
    return (h * model.w2).array() + model.b2;
}

LossGrad mlp_loss_and_gradient(const MlpModel& model, const MatrixXd& x,
                               const VectorXd& y) {
    if (x.rows() == 0) throw ValidationError("mlp_loss_and_gradient: empty input");
    if (x.cols() != model.input_dim()) {
        throw ShapeError("mlp_loss_and_gradient: feature count mismatch");
    }
    if (y.size() != x.rows()) {
        throw ShapeError("mlp_loss_and_gradient: X/y length mismatch");
    }
    const Index nin = model.input_dim();
    const Index h = model.hidden_size();
    VectorXd theta(packed_size(nin, h));
    RowMajorMap(theta.data(), h, nin) = model.w1;
    theta.segment(h * nin, h) = model.b1;
    theta.segment(h * nin + h, h) = model.w2;
    theta(h * nin + 2 * h) = model.b2;

    Workspace ws;
    LossGrad out;
    out.loss = eval(theta, x, y, model.params.activation, h, ws, &out.grad);
    return out;
}

MlpModel mlp_fit(const MatrixXd& x, const VectorXd& y, const MlpParams& params,
                 std::uint64_t seed, StopCriteria stop) {
    params.validate();
    if (x.rows() == 0) throw ValidationError("mlp_fit: empty training set");
    if (y.size() != x.rows()) throw ShapeError("mlp_fit: X/y length mismatch");
    if (stop.max_iter <= 0) stop = default_stop(params.solver);

    if (params.solver == MlpSolver::Adam) {
        return fit_adam(x, y, params, seed, stop);
    }
    return fit_lbfgs(x, y, params, seed, stop);
}

}  // namespace soiltn
