#pragma once

#include "mvsc/lattice_fourier.hpp"

#include <functional>

namespace mvsc {

double t_min(double R, double kappa, double b, double Lm, double Cm);
double q_bound(double kappa, double b, double Lm, double Cm);
// t_min with L_m from embedding_constant(m) and C_m = ||n||_{H^m}
double medium_t_min(const RefractiveIndex& n, double R, double kappa, double m);

struct CgoVectors {
    Vec3 gamma = Vec3::Zero();
    double t = 0.0, kappa = 1.0;
    CVec3 zeta1, zeta2, eta1, eta2;
    Vec3 a1, a2;

    // lab -> CGO frame: rows (a2, gamma/|gamma|, a1), so Im zeta_j lies on the z axis
    Eigen::Matrix3d frame() const;
};

// Throws for gamma = 0, |gamma| > 2 sqrt(kappa^2 + t^2) and t < t0.
CgoVectors cgo_vectors(const Vec3& gamma, double t, double kappa, double t0 = 0.0);

// Orthogonal matrix whose last row is Im zeta / |Im zeta|.
Eigen::Matrix3d frame_for(const CVec3& zeta);

// G_zeta on the cube grid of half-side R'': Fourier multiplier 1/(xi.xi + 2 zeta.xi)
// over the lattice (pi/R'')(Z^3 + e/2), e the unit vector of the axis carrying Im zeta.
// It inverts -(Delta + 2i zeta.grad).
ScalarField faddeev_apply(const CubeGrid& grid, const CVec3& zeta, const ScalarField& f, int axis = 2);
VectorField faddeev_apply(const CubeGrid& grid, const CVec3& zeta, const VectorField& f, int axis = 2);
double faddeev_min_denominator(const CubeGrid& grid, const CVec3& zeta, int axis = 2);

// Gradient of a field of the shifted space (e^{i s.x} times a periodic function).
VectorField shifted_gradient(const CubeGrid& grid, const ScalarField& u, int axis = 2);

// The medium on the CGO cube, with what Q needs, stored on the nodes of B(pi).
struct CgoMedium {
    CubeGrid grid;
    double kappa = 1.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // lab -> CGO frame
    std::vector<Eigen::Index> nodes;   // support nodes
    ScalarField n;                     // full grid, 1 outside B(pi)
    // per support node
    ScalarField n_s, s_lap;            // n and n^{-1/2} Delta n^{1/2}
    VectorField grad;                  // grad n
    Eigen::Array<cplx, Eigen::Dynamic, 6> dlog;  // D(grad n / n), slots as hess_slot

    Eigen::Matrix<cplx, 6, 6> q_at(Eigen::Index k) const;  // k indexes `nodes`
    double max_q_norm() const;
};

// n(rotation^T y) sampled on a cube of half-side R'' with N points per axis, from a
// contrast function n - 1 supported in B(pi).
CgoMedium cgo_medium(const std::function<cplx(const Vec3&)>& contrast, double b,
                     const Eigen::Matrix3d& rotation, double half_side, int points, double kappa);
CgoMedium cgo_medium(const BumpProfile& profile, double b, const Eigen::Matrix3d& rotation, double half_side,
                     int points, double kappa);

// 6x6 field Q(x) on the support nodes
std::vector<Eigen::Matrix<cplx, 6, 6>> q_matrix(const CgoMedium& medium);

// 6-component fields: columns 0-2 electric, 3-5 magnetic
using SixField = Eigen::Array<cplx, Eigen::Dynamic, 6>;
SixField apply_q(const CgoMedium& medium, const SixField& y);

SixField cgo_rhs(const CgoMedium& medium, const CVec3& zeta, const CVec3& eta);

struct CgoOptions {
    double tol = 1e-13;
    int max_iter = 200;
    double t0 = 0.0;   // rejected below this |Im zeta|
};

struct CgoSolution {
    CVec3 zeta, eta;
    double t = 0.0, kappa = 1.0, R = 0.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // lab -> CGO frame
    CubeGrid grid;
    SixField transformed;   // (E', H')
    ScalarField f;
    VectorField V;
    // E = e^{i zeta.x} U and H = e^{i zeta.x} W; e^{i zeta.x} overflows for large t|x|,
    // so the amplitudes are stored
    VectorField U, W;
    std::vector<double> history;  // Neumann update norms
    double contraction = 0.0;     // largest ratio of successive updates
    int iterations = 0;
    double residual_curl_e = 0.0;   // curl E - i kappa H, H from (E', H')
    double residual_curl_h = 0.0;   // curl H + i kappa n E, H = curl E / (i kappa)
    double norm_f = 0.0, norm_V = 0.0;  // L2 on B(3R/2)

    std::vector<Eigen::Index> eval_nodes() const;  // nodes of B(3R/2)
    CVec3 E(Eigen::Index idx) const;  // may overflow far from the origin
};

// zeta, eta in the lab frame; the medium's frame must carry Im zeta on its z axis
// (a pair from cgo_vectors shares CgoVectors::frame). The cube half-side must be 2R.
CgoSolution cgo_solve(const CgoMedium& medium, const CVec3& zeta, const CVec3& eta, double R,
                      const CgoOptions& opt = {});
// frame from frame_for(zeta)
CgoSolution cgo_solve(const BumpProfile& n, double b, double kappa, const CVec3& zeta, const CVec3& eta,
                      double R, int points, const CgoOptions& opt = {});

// Pointwise check of E1.E2 e^{i gamma.x} against its expansion in f_j, V_j, on B(3R/2).
struct ProductCheck {
    double corrected = 0.0;   // max relative deviation with the term f2 zeta2.V1
    double displayed = 0.0;   // the same with f2 zeta2.V2 in its place
    double typo_term = 0.0;   // max |f2 zeta2.(V2 - V1)|
};
ProductCheck product_expansion_check(const CgoVectors& v, const CgoSolution& s1, const CgoSolution& s2);

}  // namespace mvsc
