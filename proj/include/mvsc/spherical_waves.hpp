#pragma once

#include "mvsc/em_forward.hpp"

#include <limits>

namespace mvsc {

// Harmonics are orthonormal on the unit sphere with the Condon-Shortley phase,
// Y_l^{-k} = (-1)^k conj(Y_l^k). Flat index l^2 + l + k.
inline int sh_index(int l, int k) { return l * l + l + k; }
inline int sh_count(int L) { return (L + 1) * (L + 1); }

cplx sph_harmonic(int l, int k, const Vec3& direction);
// all Y_l^k with l <= L, flat-indexed
Eigen::VectorXcd sph_harmonics_upto(int L, const Vec3& direction);

// spherical Bessel functions of the first and second kind, orders 0..L
Eigen::VectorXd sph_bessel_j_upto(int L, double z);
Eigen::VectorXd sph_bessel_y_upto(int L, double z);
Eigen::VectorXcd sph_hankel1_upto(int L, double z);
cplx sph_hankel1(int l, double z);

// Matrix-valued coefficients alpha(l1,k1,l2,k2) of the far field: (l1,k1) pairs
// with the incident direction, (l2,k2) with the observation direction, both
// harmonics conjugated.
struct FarCoeffs {
    int L = 0;
    std::vector<CMat3> entries;  // lexicographic in (l1,k1,l2,k2)

    FarCoeffs() = default;
    explicit FarCoeffs(int L_);
    const CMat3& at(int l1, int k1, int l2, int k2) const { return entries[flat(l1, k1, l2, k2)]; }
    CMat3& at(int l1, int k1, int l2, int k2) { return entries[flat(l1, k1, l2, k2)]; }
    size_t flat(int l1, int k1, int l2, int k2) const
    {
        return size_t(sh_index(l1, k1)) * size_t(sh_count(L)) + size_t(sh_index(l2, k2));
    }
    double norm_sq() const;
};

FarCoeffs far_coeffs(const FarFieldData& far, int L);
// evaluates sum alpha Y(xhat) Y(d) on the given grids
FarFieldData far_from_coeffs(const FarCoeffs& alpha, const SphereGrid& observation, const SphereGrid& incidence);

struct NearSeries {
    CMat3 value;
    double last_shell = 0.0;  // Frobenius norm of the terms with max(l1, l2) = L
};

// Scattered near field w^s(x, y) from far-field coefficients, |x| >= |y| > pi.
NearSeries near_from_far(const FarCoeffs& alpha, double kappa, const Vec3& x, const Vec3& y, int L = -1);
// the same series on whole receiver/source grids
NearFieldData near_data_from_far(const FarCoeffs& alpha, double kappa, const SphereGrid& receivers,
                                 const SphereGrid& sources, int L = -1);

// rho^2 exp(-(-ln(far_diff / (omega rho)))^theta)
double near_far_bound(double far_diff, double theta, double omega, double rho,
                      double delta_max = std::numeric_limits<double>::infinity());

// Constants making the near-by-far bound hold on samples of (far difference,
// near difference): the smallest admissible rho (starting from the largest near
// difference), the largest omega for it, delta_max the largest far difference.
struct NearFarFit {
    double theta = 0.5, omega = 0.0, rho = 0.0, delta_max = 0.0;
};
NearFarFit fit_near_far(const std::vector<std::pair<double, double>>& samples, double theta);

struct IndexFunction {
    enum class Kind { psi_near, phi_far, psi_far };
    Kind kind = Kind::psi_near;
    double A = 1.0, nu = 0.5;                     // psi_near
    double theta = 0.5, omega = 1.0, rho = 1.0;   // phi_far

    static IndexFunction psi_near(double A, double nu);
    static IndexFunction phi_far(double theta, double omega, double rho);
    static IndexFunction psi_far(double A, double nu, double theta, double omega, double rho);

    double operator()(double t) const;
    // t at which phi_far's inner logarithm vanishes; the domain is (0, limit)
    double domain_limit() const;
};

double psi_compose(double t, double A, double nu, double theta, double omega, double rho);

}  // namespace mvsc
