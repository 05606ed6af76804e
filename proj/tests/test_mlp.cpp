#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "soiltn/errors.hpp"
#include "soiltn/mlp.hpp"
#include "soiltn/rng.hpp"

using namespace soiltn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MlpModel make_model(Rng& rng, int nin, int h, Activation act) {
    MlpModel m;
    m.params.activation = act;
    m.params.hidden_layer_size = h;
    m.w1 = MatrixXd(h, nin);
    m.b1 = VectorXd(h);
    m.w2 = VectorXd(h);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < nin; ++j) m.w1(i, j) = rng.normal() * 0.7;
        m.b1(i) = rng.normal() * 0.3;
        m.w2(i) = rng.normal() * 0.7;
    }
    m.b2 = rng.normal() * 0.3;
    return m;
}

// Mutable reference into the packed [W1 row-major, b1, w2, b2] layout.
double& param_ref(MlpModel& m, Eigen::Index flat) {
    const Eigen::Index nin = m.input_dim();
    const Eigen::Index h = m.hidden_size();
    if (flat < h * nin) return m.w1(flat / nin, flat % nin);
    flat -= h * nin;
    if (flat < h) return m.b1(flat);
    flat -= h;
    if (flat < h) return m.w2(flat);
    return m.b2;
}

// Closed-form least squares on [X 1]; returns the optimal MSE.
double ols_mse(const MatrixXd& x, const VectorXd& y) {
    MatrixXd a(x.rows(), x.cols() + 1);
    a.leftCols(x.cols()) = x;
    a.col(x.cols()).setOnes();
    VectorXd beta = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    return (a * beta - y).squaredNorm() / static_cast<double>(x.rows());
}

}  // namespace

TEST_CASE("mlp_predict forward pass") {
    // all weights zero -> output bias
    MlpModel zero;
    zero.params.activation = Activation::Tanh;
    zero.w1 = MatrixXd::Zero(3, 2);
    zero.b1 = VectorXd::Zero(3);
    zero.w2 = VectorXd::Zero(3);
    zero.b2 = -2.5;
    CHECK(mlp_predict(zero, VectorXd::Constant(2, 9.0)) == doctest::Approx(-2.5));

    // 2-input toy: relu(1*1 + 1*2) * 2 + 1 = 7
    MlpModel toy;
    toy.params.activation = Activation::Relu;
    toy.w1 = MatrixXd(1, 2);
    toy.w1 << 1.0, 1.0;
    toy.b1 = VectorXd::Zero(1);
    toy.w2 = VectorXd::Constant(1, 2.0);
    toy.b2 = 1.0;
    VectorXd x(2);
    x << 1.0, 2.0;
    CHECK(mlp_predict(toy, x) == doctest::Approx(7.0));

    CHECK_THROWS_AS(mlp_predict(toy, VectorXd::Zero(3)), ShapeError);
}

TEST_CASE("identity activation composes to an affine map") {
    Rng rng(5);
    MlpModel m = make_model(rng, 4, 6, Activation::Identity);
    const VectorXd w_eff = m.w1.transpose() * m.w2;
    const double b_eff = m.w2.dot(m.b1) + m.b2;
    for (int rep = 0; rep < 10; ++rep) {
        VectorXd x(4);
        for (int i = 0; i < 4; ++i) x(i) = rng.normal();
        CHECK(mlp_predict(m, x) ==
              doctest::Approx(w_eff.dot(x) + b_eff).epsilon(1e-12));
    }
}

TEST_CASE("loss and gradient on a perfect fit") {
    Rng rng(6);
    MlpModel m = make_model(rng, 3, 4, Activation::Tanh);
    MatrixXd x(5, 3);
    for (int i = 0; i < 15; ++i) x(i / 3, i % 3) = rng.normal();
    const VectorXd y = mlp_predict_batch(m, x);  // targets equal the forward pass
    auto lg = mlp_loss_and_gradient(m, x, y);
    CHECK(lg.loss == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(lg.grad.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("single-sample gradient matches the hand chain rule") {
    // one hidden unit, identity activation: pred = w2*(w1*x + b1) + b2
    MlpModel m;
    m.params.activation = Activation::Identity;
    m.w1 = MatrixXd::Constant(1, 1, 1.5);
    m.b1 = VectorXd::Constant(1, 0.25);
    m.w2 = VectorXd::Constant(1, -2.0);
    m.b2 = 0.5;
    MatrixXd x(1, 1);
    x << 3.0;
    VectorXd y(1);
    y << 1.0;

    // pred = -2*(4.75) + 0.5 = -9; r = pred - y = -10; loss = 100
    // dloss/dpred = 2r = -20
    // d/dw2 = dpred * hidden = -20 * 4.75 = -95, d/db2 = -20
    // d/dw1 = dpred * w2 * x = -20 * -2 * 3 = 120, d/db1 = 40
    auto lg = mlp_loss_and_gradient(m, x, y);
    CHECK(lg.loss == doctest::Approx(100.0));
    CHECK(lg.grad(0) == doctest::Approx(120.0));  // w1
    CHECK(lg.grad(1) == doctest::Approx(40.0));   // b1
    CHECK(lg.grad(2) == doctest::Approx(-95.0));  // w2
    CHECK(lg.grad(3) == doctest::Approx(-20.0));  // b2

    CHECK_THROWS_AS(mlp_loss_and_gradient(m, MatrixXd(0, 1), VectorXd(0)),
                    ValidationError);
}

TEST_CASE("backprop matches central finite differences") {
    Rng rng(77);
    const Activation acts[] = {Activation::Relu, Activation::Tanh,
                               Activation::Logistic, Activation::Identity};
    for (int rep = 0; rep < 24; ++rep) {
        const int nin = 2 + static_cast<int>(rng.uniform_index(5));
        const int h = 1 + static_cast<int>(rng.uniform_index(8));
        const int n = 1 + static_cast<int>(rng.uniform_index(10));
        MlpModel m = make_model(rng, nin, h, acts[rep % 4]);
        MatrixXd x(n, nin);
        VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < nin; ++j) x(i, j) = rng.normal();
            y(i) = rng.normal();
        }

        auto lg = mlp_loss_and_gradient(m, x, y);
        const double step = 1e-6;
        VectorXd fd(lg.grad.size());
        for (Eigen::Index p = 0; p < lg.grad.size(); ++p) {
            MlpModel plus = m, minus = m;
            param_ref(plus, p) += step;
            param_ref(minus, p) -= step;
            const double lp = mlp_loss_and_gradient(plus, x, y).loss;
            const double lm = mlp_loss_and_gradient(minus, x, y).loss;
            fd(p) = (lp - lm) / (2.0 * step);
        }
        const double rel =
            (fd - lg.grad).norm() / (fd.norm() + lg.grad.norm() + 1e-10);
        CHECK(rel < 1e-5);
    }
}

TEST_CASE("lbfgs with identity activation reaches the least-squares optimum") {
    Rng rng(101);
    MatrixXd x(20, 3);
    VectorXd y(20);
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
        y(i) = 3.0 * x(i, 0);
    }
    MlpParams params;
    params.activation = Activation::Identity;
    params.solver = MlpSolver::Lbfgs;
    params.hidden_layer_size = 5;
    MlpModel model = mlp_fit(x, y, params, 42);
    const VectorXd pred = mlp_predict_batch(model, x);
    const double train_rmse = std::sqrt((pred - y).squaredNorm() / 20.0);
    CHECK(train_rmse <= std::sqrt(ols_mse(x, y)) + 1e-3);

    // random full-rank targets: training MSE <= OLS optimum + 1e-6
    for (int rep = 0; rep < 5; ++rep) {
        MatrixXd xr(25, 4);
        VectorXd yr(25);
        for (int i = 0; i < 25; ++i) {
            for (int j = 0; j < 4; ++j) xr(i, j) = rng.normal();
            yr(i) = rng.normal();
        }
        MlpParams p2 = params;
        p2.hidden_layer_size = 2 + rep;
        MlpModel m2 = mlp_fit(xr, yr, p2, 1000 + static_cast<std::uint64_t>(rep));
        const VectorXd pr = mlp_predict_batch(m2, xr);
        const double mse = (pr - yr).squaredNorm() / 25.0;
        CHECK(mse <= ols_mse(xr, yr) + 1e-6);
    }
}

TEST_CASE("adam fits a smooth nonlinear target") {
    MatrixXd x(30, 1);
    VectorXd y(30);
    for (int i = 0; i < 30; ++i) {
        x(i, 0) = -2.0 + 4.0 * static_cast<double>(i) / 29.0;
        y(i) = std::sin(2.0 * x(i, 0));
    }
    MlpParams params;
    params.activation = Activation::Tanh;
    params.solver = MlpSolver::Adam;
    params.hidden_layer_size = 20;
    MlpModel model = mlp_fit(x, y, params, 3, StopCriteria{5000, 1e-6});
    const VectorXd pred = mlp_predict_batch(model, x);
    const double train_rmse = std::sqrt((pred - y).squaredNorm() / 30.0);
    CHECK(train_rmse < 0.1);
    CHECK(model.training_loss.size() >= 2);
    CHECK(model.training_loss.back() <= model.training_loss.front());
}

TEST_CASE("fit is deterministic and honors schedules") {
    Rng rng(55);
    MatrixXd x(12, 2);
    VectorXd y(12);
    for (int i = 0; i < 12; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y(i) = x(i, 0) - 0.5 * x(i, 1) + 0.1 * rng.normal();
    }
    for (auto schedule : {LrSchedule::Constant, LrSchedule::Adaptive,
                          LrSchedule::InvScaling}) {
        MlpParams params;
        params.activation = Activation::Tanh;
        params.solver = MlpSolver::Adam;
        params.learning_rate = schedule;
        params.hidden_layer_size = 6;
        StopCriteria stop{400, 1e-6};
        MlpModel a = mlp_fit(x, y, params, 9, stop);
        MlpModel b = mlp_fit(x, y, params, 9, stop);
        CHECK((a.w1.array() == b.w1.array()).all());
        CHECK((a.b1.array() == b.b1.array()).all());
        CHECK((a.w2.array() == b.w2.array()).all());
        CHECK(a.b2 == b.b2);
        CHECK(a.training_loss == b.training_loss);
        CHECK(a.training_loss.back() <= a.training_loss.front());

        MlpModel c = mlp_fit(x, y, params, 10, stop);
        CHECK(!(a.w1.array() == c.w1.array()).all());  // different seed
    }
}

TEST_CASE("adam reports divergence with its log") {
    MatrixXd x(2, 1);
    x << 1.0, 2.0;
    VectorXd y(2);
    y << 1e200, -1e200;  // squared residuals overflow immediately
    MlpParams params;
    params.solver = MlpSolver::Adam;
    params.hidden_layer_size = 2;
    try {
        mlp_fit(x, y, params, 0, StopCriteria{50, 1e-6});
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(!e.loss_log.empty());
    }
}

TEST_CASE("mlp_fit input validation") {
    MlpParams params;
    CHECK_THROWS_AS(mlp_fit(MatrixXd(0, 2), VectorXd(0), params, 0),
                    ValidationError);
    CHECK_THROWS_AS(mlp_fit(MatrixXd::Zero(3, 2), VectorXd::Zero(2), params, 0),
                    ShapeError);
    MlpParams bad;
    bad.hidden_layer_size = 0;
    CHECK_THROWS_AS(mlp_fit(MatrixXd::Zero(3, 2), VectorXd::Zero(3), bad, 0),
                    ValidationError);
}
