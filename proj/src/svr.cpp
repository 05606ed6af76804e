#include "soiltn/svr.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "soiltn/csv.hpp"
#include "soiltn/errors.hpp"

namespace soiltn {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double kernel_from_parts(const KernelConfig& cfg, double dot, double sq_dist) {
    switch (cfg.kind) {
        case Kernel::Rbf:
            return std::exp(-cfg.gamma * sq_dist);
        case Kernel::Poly:
            return std::pow(cfg.gamma * dot + cfg.coef0, cfg.degree);
        case Kernel::Sigmoid:
            return std::tanh(cfg.gamma * dot + cfg.coef0);
    }
    return 0.0;
}

MatrixXd gram_matrix(const KernelConfig& cfg, const MatrixXd& x) {
    const Index n = x.rows();
    MatrixXd dots = x * x.transpose();
    MatrixXd k(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j <= i; ++j) {
            const double sq = dots(i, i) + dots(j, j) - 2.0 * dots(i, j);
            const double v = kernel_from_parts(cfg, dots(i, j), std::max(0.0, sq));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

}  // namespace

Kernel parse_kernel(const std::string& name) {
    if (name == "poly") return Kernel::Poly;
    if (name == "rbf") return Kernel::Rbf;
    if (name == "sigmoid") return Kernel::Sigmoid;
    throw ValidationError("unknown kernel '" + name + "'");
}

std::string to_string(Kernel k) {
    switch (k) {
        case Kernel::Poly: return "poly";
        case Kernel::Rbf: return "rbf";
        case Kernel::Sigmoid: return "sigmoid";
    }
    return "?";
}

double kernel_eval(const KernelConfig& cfg, const VectorXd& x, const VectorXd& z) {
    const double dot = x.dot(z);
    const double sq = (x - z).squaredNorm();
    return kernel_from_parts(cfg, dot, sq);
}

void SvrParams::validate() const {
    if (!(c > 0.0)) throw ValidationError("SVR C must be positive");
    if (!(epsilon >= 0.0)) throw ValidationError("SVR epsilon must be non-negative");
    if (degree < 1) throw ValidationError("polynomial degree must be >= 1");
    if (gamma && !(*gamma > 0.0)) throw ValidationError("gamma must be positive");
}

double svr_resolve_gamma(const SvrParams& params, const MatrixXd& x) {
    if (params.gamma) return *params.gamma;
    const double n = static_cast<double>(x.size());
    const double mean = x.sum() / n;
    const double var = (x.array() - mean).square().sum() / n;
    if (!(var > 0.0)) return 1.0;
    return 1.0 / (static_cast<double>(x.cols()) * var);
}

SvrModel svr_fit(const MatrixXd& x, const VectorXd& y, const SvrParams& params,
                 const SvrFitOptions& options) {
    params.validate();
    const Index l = x.rows();
    if (l == 0) throw ValidationError("svr_fit: empty training set");
    if (y.size() != l) throw ShapeError("svr_fit: X/y length mismatch");

    KernelConfig cfg{params.kernel, svr_resolve_gamma(params, x), params.coef0,
                     params.degree};
    const MatrixXd k = gram_matrix(cfg, x);
    const double c = params.c;
    const double eps = params.epsilon;

    // Dual in 2l variables a = [alpha; alpha*]:
    //   min 1/2 a^T Q a + p^T a,  0 <= a_t <= C,  sum_t s_t a_t = 0
    // with s = [+1...,-1...], p_t = eps -/+ y_t, Q_ts = s_t s_s K(t mod l, s mod l).
    const Index n2 = 2 * l;
    VectorXd a = VectorXd::Zero(n2);
    VectorXd g(n2);  // gradient Qa + p; equals p at a = 0
    for (Index t = 0; t < l; ++t) {
        g(t) = eps - y(t);
        g(t + l) = eps + y(t);
    }
    auto sign_of = [l](Index t) { return t < l ? 1.0 : -1.0; };
    auto point_of = [l](Index t) { return t < l ? t : t - l; };

    std::size_t updates = 0;
    double m_val = 0.0, big_m_val = 0.0;
    while (true) {
        // Maximal violating pair over -s_t g_t.
        Index i = -1, j = -1;
        m_val = -std::numeric_limits<double>::infinity();
        big_m_val = std::numeric_limits<double>::infinity();
        for (Index t = 0; t < n2; ++t) {
            const double s = sign_of(t);
            const double val = -s * g(t);
            const bool in_up = (s > 0.0) ? (a(t) < c) : (a(t) > 0.0);
            const bool in_low = (s > 0.0) ? (a(t) > 0.0) : (a(t) < c);
            if (in_up && val > m_val) {
                m_val = val;
                i = t;
            }
            if (in_low && val < big_m_val) {
                big_m_val = val;
                j = t;
            }
        }
        if (i < 0 || j < 0 || m_val - big_m_val < options.tol) break;
        if (updates >= options.max_pair_updates) {
            throw ConvergenceError(
                "SMO did not converge within " + std::to_string(options.max_pair_updates) +
                    " pair updates (KKT violation " + format_double(m_val - big_m_val) + ")",
                m_val - big_m_val);
        }

        const Index pi = point_of(i), pj = point_of(j);
        const double si = sign_of(i), sj = sign_of(j);
        // Step a_i += s_i*delta, a_j -= s_j*delta keeps the equality
        // constraint; the unconstrained optimum then clips to the box.
        double quad = k(pi, pi) + k(pj, pj) - 2.0 * k(pi, pj);
        if (quad <= 0.0) quad = 1e-12;
        double delta = (m_val - big_m_val) / quad;
        delta = std::min(delta, si > 0.0 ? c - a(i) : a(i));
        delta = std::min(delta, sj > 0.0 ? a(j) : c - a(j));
        if (!(delta > 0.0)) break;  // numerically pinned at a boundary

        a(i) += si * delta;
        a(j) -= sj * delta;
        for (Index t = 0; t < n2; ++t) {
            g(t) += sign_of(t) * delta * (k(point_of(t), pi) - k(point_of(t), pj));
        }
        ++updates;
    }

    SvrModel model;
    model.params = params;
    model.kernel = cfg;
    model.pair_updates = updates;
    model.bias = (m_val == -std::numeric_limits<double>::infinity() ||
                  big_m_val == std::numeric_limits<double>::infinity())
                     ? 0.0
                     : 0.5 * (m_val + big_m_val);

    // p^T a recomputed from g = Qa + p: obj = 1/2 (a.g + a.p).
    VectorXd p(n2);
    for (Index t = 0; t < l; ++t) {
        p(t) = eps - y(t);
        p(t + l) = eps + y(t);
    }
    model.dual_objective = 0.5 * (a.dot(g) + a.dot(p));

    std::vector<Index> sv;
    for (Index t = 0; t < l; ++t) {
        if (a(t) - a(t + l) != 0.0) sv.push_back(t);
    }
    model.support_vectors.resize(static_cast<Index>(sv.size()), x.cols());
    model.dual_coefs.resize(static_cast<Index>(sv.size()));
    for (Index r = 0; r < static_cast<Index>(sv.size()); ++r) {
        model.support_vectors.row(r) = x.row(sv[static_cast<std::size_t>(r)]);
        model.dual_coefs(r) =
            a(sv[static_cast<std::size_t>(r)]) - a(sv[static_cast<std::size_t>(r)] + l);
    }
    return model;
}

double svr_predict(const SvrModel& model, const VectorXd& x) {
    if (model.support_vectors.rows() > 0 && x.size() != model.support_vectors.cols()) {
        throw ShapeError("svr_predict: input has " + std::to_string(x.size()) +
                         " features, model expects " +
                         std::to_string(model.support_vectors.cols()));
    }
    double acc = model.bias;
    for (Index r = 0; r < model.support_vectors.rows(); ++r) {
        acc += model.dual_coefs(r) *
               kernel_eval(model.kernel, model.support_vectors.row(r).transpose(), x);
    }
    return acc;
}

VectorXd svr_predict_batch(const SvrModel& model, const MatrixXd& x) {
    VectorXd out(x.rows());
    for (Index r = 0; r < x.rows(); ++r) {
        out(r) = svr_predict(model, x.row(r).transpose());
    }
    return out;
}

}  // namespace soiltn
