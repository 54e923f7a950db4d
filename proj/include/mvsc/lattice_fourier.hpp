#pragma once

#include "mvsc/types.hpp"

#include <optional>

namespace mvsc {

// Smoothness orders (m for the penalty space, s for the a-priori class).
struct SobolevParams {
    double m = 4.0;
    double s = 6.0;

    SobolevParams() = default;
    SobolevParams(double m, double s);
    double tau() const;  // max{2m + 3/2 - s, 0}
    double nu() const;   // min{(s-m)/(m+5/2), (s-m)/(s-m+1)}
};

// Fourier coefficients of grid samples on C(pi) in the unitary convention
//   F[f](g) = (2 pi)^{-3/2} \int f(x) e^{-i g.x} dx,
// stored in DFT order (grid.lattice(idx) gives g). The Nyquist plane is kept
// so the transform round-trips exactly.
ScalarField fourier_coeffs(const CubeGrid& grid, const ScalarField& values);
ScalarField inverse_coeffs(const CubeGrid& grid, const ScalarField& coeffs);

double sobolev_weight(const Vec3i& g, double m);  // (1 + |g|^2)^m
double hm_norm(const CubeGrid& grid, const ScalarField& coeffs, double m);
// sum_g (1+|g|^2)^m a_g conj(b_g)
cplx hm_inner(const CubeGrid& grid, const ScalarField& a, const ScalarField& b, double m);
ScalarField project_low(const CubeGrid& grid, const ScalarField& coeffs, double rho);

// Upper bound for (2 pi)^{-3/2} (sum_g (1+|g|^2)^{2-m})^{1/2}: exact sum over
// |g_i| <= cutoff plus an integral bound for the rest.
double embedding_constant(double m, int cutoff = 128);

// Derivative multipliers on a periodic grid of any half-side. Nyquist
// components are dropped for odd-order consistency.
struct SpectralDerivatives {
    ScalarField value;
    VectorField grad;                 // d/dx_i
    Eigen::Array<cplx, Eigen::Dynamic, 6> hess;  // xx yy zz xy xz yz
    ScalarField laplacian;
};
SpectralDerivatives spectral_derivatives(const CubeGrid& grid, const ScalarField& f);
VectorField spectral_gradient(const CubeGrid& grid, const ScalarField& f);

// hessian component index for (i, j)
int hess_slot(int i, int j);

class RefractiveIndex {
public:
    RefractiveIndex() = default;

    // Checks the admissibility conditions unless check == false.
    static RefractiveIndex from_values(const CubeGrid& grid, ScalarField values, double b,
                                       bool check = true);
    static RefractiveIndex background(const CubeGrid& grid, double b = 1.0);

    const CubeGrid& grid() const { return grid_; }
    const ScalarField& values() const { return values_; }
    const ScalarField& coeffs() const { return coeffs_; }  // of n - 1
    ScalarField contrast() const { return values_ - 1.0; }
    double lower_bound() const { return b_; }

    // Admissibility report: empty string when admissible.
    std::string admissibility() const;
    bool is_background() const;

    double contrast_norm(double m) const { return hm_norm(grid_, coeffs_, m); }
    // H^m norm of n itself (the constant 1 contributes (2 pi)^{3/2} at g = 0)
    double full_norm(double m) const;

    void set_smoothness(const SobolevParams& p);
    const std::optional<SobolevParams>& smoothness() const { return smooth_; }
    double c_s() const { return c_s_; }

    SpectralDerivatives derivatives() const;

private:
    CubeGrid grid_;
    ScalarField values_;
    ScalarField coeffs_;
    double b_ = 1.0;
    std::optional<SobolevParams> smooth_;
    double c_s_ = 0.0;
};

// C-infinity bump supported in the unit ball, equal to 1 at the origin:
// exp(sharpness (1 - 1/(1 - r^2))).
double bump(double r, double sharpness = 1.0);

struct Bump {
    Vec3 center = Vec3::Zero();
    cplx amplitude = 0.0;
    double width = 1.0;
};

struct BumpProfile {
    std::vector<Bump> bumps;
    double sharpness = 1.0;

    cplx contrast_at(const Vec3& x) const;
};

RefractiveIndex make_test_index(const BumpProfile& profile, const CubeGrid& grid, double b);

// Homogeneous ball n0 of the given radius, voxel-averaged by volume fraction
// (sub-sampled) so the sampled medium is a consistent cell average.
RefractiveIndex make_ball_index(double radius, cplx n0, const CubeGrid& grid, double b,
                                int subsamples = 8);

// Evaluates the trigonometric interpolant of n - 1 at arbitrary points by
// Gaussian gridding: deconvolved coefficients on a 2x oversampled grid, then
// a truncated Gaussian spread around each point (about 1e-12 relative).
class TrigInterpolant {
public:
    explicit TrigInterpolant(const RefractiveIndex& n);
    cplx operator()(const Vec3& x) const;
    // relative l2 energy in the outermost frequency shell (aliasing indicator)
    double edge_energy() const { return edge_energy_; }

private:
    int m_;          // oversampled points per axis
    int spread_;     // half-width of the Gaussian in oversampled cells
    double tau_;
    ScalarField u_;  // deconvolved samples on the oversampled grid
    double edge_energy_ = 0.0;
};

// n(Q^T y): the medium seen in a frame rotated by Q, resampled on the same grid.
RefractiveIndex rotate_index(const RefractiveIndex& n, const Eigen::Matrix3d& rotation,
                             double alias_tol = 1e-6);

}  // namespace mvsc
