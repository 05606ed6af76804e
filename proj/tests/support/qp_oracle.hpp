// Test-only dense QP oracle for the epsilon-SVR dual. Independent of the
// SMO solver: it assembles the full 2l x 2l problem with its own kernel
// evaluation and minimizes by FISTA with exact projection onto the
// box/hyperplane constraint set.
#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "soiltn/svr.hpp"

namespace soiltn_test {

inline double oracle_kernel(soiltn::Kernel kind, double gamma, double coef0,
                            int degree, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b) {
    switch (kind) {
        case soiltn::Kernel::Rbf: {
            double sq = 0.0;
            for (Eigen::Index i = 0; i < a.size(); ++i) {
                sq += (a(i) - b(i)) * (a(i) - b(i));
            }
            return std::exp(-gamma * sq);
        }
        case soiltn::Kernel::Poly: {
            double dot = 0.0;
            for (Eigen::Index i = 0; i < a.size(); ++i) dot += a(i) * b(i);
            double acc = 1.0;
            for (int d = 0; d < degree; ++d) acc *= gamma * dot + coef0;
            return acc;
        }
        case soiltn::Kernel::Sigmoid: {
            double dot = 0.0;
            for (Eigen::Index i = 0; i < a.size(); ++i) dot += a(i) * b(i);
            return std::tanh(gamma * dot + coef0);
        }
    }
    return 0.0;
}

// Projection onto {0 <= v <= C, s.v = 0} via bisection on the hyperplane
// multiplier; s.clip(v - beta*s) is non-increasing in beta.
inline Eigen::VectorXd project_box_hyperplane(const Eigen::VectorXd& v,
                                              const Eigen::VectorXd& s, double c) {
    auto clipped = [&](double beta) {
        Eigen::VectorXd out(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            out(i) = std::min(c, std::max(0.0, v(i) - beta * s(i)));
        }
        return out;
    };
    double lo = -(v.cwiseAbs().maxCoeff() + c + 1.0);
    double hi = -lo;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (s.dot(clipped(mid)) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return clipped(0.5 * (lo + hi));
}

struct OracleSolution {
    Eigen::VectorXd a;
    double objective = 0.0;
    double bias = 0.0;
    double kkt_gap = 0.0;
};

inline OracleSolution solve_dual_oracle(const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& y, double c,
                                        double eps, soiltn::Kernel kind,
                                        double gamma, double coef0, int degree) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const Eigen::Index l = x.rows();
    const Eigen::Index n2 = 2 * l;
    MatrixXd q(n2, n2);
    VectorXd p(n2), s(n2);
    for (Eigen::Index i = 0; i < l; ++i) {
        p(i) = eps - y(i);
        p(i + l) = eps + y(i);
        s(i) = 1.0;
        s(i + l) = -1.0;
    }
    for (Eigen::Index i = 0; i < n2; ++i) {
        for (Eigen::Index j = 0; j < n2; ++j) {
            const double k = oracle_kernel(kind, gamma, coef0, degree,
                                           x.row(i % l).transpose(),
                                           x.row(j % l).transpose());
            q(i, j) = s(i) * s(j) * k;
        }
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(q);
    const double lmax = es.eigenvalues().maxCoeff();
    const double step = 1.0 / std::max(lmax, 1e-8);

    auto objective = [&](const VectorXd& a) {
        return 0.5 * a.dot(q * a) + p.dot(a);
    };
    auto kkt_gap = [&](const VectorXd& a) {
        const VectorXd g = q * a + p;
        double m = -1e300, mm = 1e300;
        for (Eigen::Index t = 0; t < n2; ++t) {
            const double val = -s(t) * g(t);
            const bool in_up = (s(t) > 0) ? a(t) < c - 1e-10 : a(t) > 1e-10;
            const bool in_low = (s(t) > 0) ? a(t) > 1e-10 : a(t) < c - 1e-10;
            if (in_up) m = std::max(m, val);
            if (in_low) mm = std::min(mm, val);
        }
        return std::pair<double, double>{m, mm};
    };

    VectorXd a = VectorXd::Zero(n2), a_prev = a, z = a;
    double t_prev = 1.0;
    double best_obj = objective(a);
    for (int it = 0; it < 500000; ++it) {
        const VectorXd grad = q * z + p;
        VectorXd a_next = project_box_hyperplane(z - step * grad, s, c);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
        z = a_next + ((t_prev - 1.0) / t_next) * (a_next - a_prev);
        a_prev = a;
        a = a_next;
        t_prev = t_next;
        const double obj = objective(a);
        if (obj > best_obj) {  // adaptive restart
            z = a;
            t_prev = 1.0;
        }
        best_obj = std::min(best_obj, obj);
        if (it % 100 == 0) {
            auto [m, mm] = kkt_gap(a);
            if (m - mm < 1e-9) break;
        }
    }

    OracleSolution sol;
    sol.a = a;
    sol.objective = objective(a);
    auto [m, mm] = kkt_gap(a);
    sol.kkt_gap = m - mm;
    sol.bias = 0.5 * (m + mm);
    return sol;
}

}  // namespace soiltn_test
