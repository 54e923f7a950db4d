#pragma once

#include "mvsc/types.hpp"

#include <cmath>

namespace mvsc {

struct GmresOptions {
    double rtol = 1e-8;
    int restart = 50;
    int max_iterations = 2000;
};

struct GmresResult {
    Eigen::VectorXcd x;
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_history;  // relative to |b|
};

// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
template <class Apply>
GmresResult gmres(Apply&& A, const Eigen::VectorXcd& b, Eigen::VectorXcd x0, const GmresOptions& opt)
{
    GmresResult out;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        out.x = Eigen::VectorXcd::Zero(b.size());
        out.converged = true;
        out.residual_history.push_back(0.0);
        return out;
    }
    Eigen::VectorXcd x = std::move(x0);
    const int m = opt.restart;
    std::vector<Eigen::VectorXcd> V(size_t(m + 1));
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    Eigen::VectorXcd cs(m), g(m + 1);
    std::vector<cplx> sn(static_cast<size_t>(m));

    Eigen::VectorXcd r = b - A(x);
    double beta = r.norm();
    out.residual_history.push_back(beta / bnorm);
    while (out.iterations < opt.max_iterations && beta / bnorm > opt.rtol) {
        V[0] = r / beta;
        g.setZero();
        g(0) = beta;
        int j = 0;
        for (; j < m && out.iterations < opt.max_iterations; ++j) {
            Eigen::VectorXcd w = A(V[size_t(j)]);
            for (int i = 0; i <= j; ++i) {
                H(i, j) = V[size_t(i)].dot(w);
                w -= H(i, j) * V[size_t(i)];
            }
            H(j + 1, j) = w.norm();
            if (std::abs(H(j + 1, j)) > 0) V[size_t(j + 1)] = w / H(j + 1, j);
            for (int i = 0; i < j; ++i) {
                const cplx t = std::conj(cs(i)) * H(i, j) + std::conj(sn[size_t(i)]) * H(i + 1, j);
                H(i + 1, j) = -sn[size_t(i)] * H(i, j) + cs(i) * H(i + 1, j);
                H(i, j) = t;
            }
            const double den = std::hypot(std::abs(H(j, j)), std::abs(H(j + 1, j)));
            if (den == 0.0) {
                cs(j) = 1.0;
                sn[size_t(j)] = 0.0;
            } else {
                cs(j) = H(j, j) / den;
                sn[size_t(j)] = H(j + 1, j) / den;
            }
            H(j, j) = std::conj(cs(j)) * H(j, j) + std::conj(sn[size_t(j)]) * H(j + 1, j);
            H(j + 1, j) = 0.0;
            g(j + 1) = -sn[size_t(j)] * g(j);
            g(j) = std::conj(cs(j)) * g(j);
            ++out.iterations;
            out.residual_history.push_back(std::abs(g(j + 1)) / bnorm);
            if (std::abs(g(j + 1)) / bnorm <= opt.rtol || std::abs(H(j, j)) == 0.0) {
                ++j;
                break;
            }
        }
        Eigen::VectorXcd y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
        for (int i = 0; i < j; ++i) x += y(i) * V[size_t(i)];
        r = b - A(x);
        beta = r.norm();
        out.residual_history.back() = beta / bnorm;
    }
    out.converged = beta / bnorm <= opt.rtol;
    out.x = std::move(x);
    return out;
}

}  // namespace mvsc
