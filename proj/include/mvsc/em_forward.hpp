#pragma once

#include "mvsc/gmres.hpp"
#include "mvsc/lattice_fourier.hpp"
#include "mvsc/sphere_grid.hpp"

#include <memory>
#include <variant>

namespace mvsc {

cplx helmholtz_kernel(const Vec3& x, double kappa);
// (kappa^2 I + grad grad^T) Phi evaluated at separation r
CMat3 dyadic_green(const Vec3& r, double kappa);
// w1(x, y) = -(1/(i kappa)) curl curl (Phi(x - y) .), so that E^i_{y,a} = w1 a
CMat3 background_green(const Vec3& x, const Vec3& y, double kappa);

class IncidentField {
public:
    static IncidentField dipole(const Vec3& y, const CVec3& a, double kappa);
    static IncidentField plane(const Vec3& d, const CVec3& p, double kappa);

    CVec3 E(const Vec3& x) const;
    CVec3 H(const Vec3& x) const;
    double kappa() const { return kappa_; }

private:
    struct Dipole { Vec3 y; CVec3 a; };
    struct Plane { Vec3 d; CVec3 p; };
    std::variant<Dipole, Plane> src_;
    double kappa_ = 1.0;
};

struct VectorFieldGrid {
    CubeGrid grid;
    VectorField values;
};

// Two algebraically equivalent forms of the volume integral equation:
//   gradient: E = E^i + k^2 K*((n-1)E) + grad K*((grad n / n).E)
//   grad_div: E = E^i + (k^2 + grad div) K*((n-1)E)
// The first is the default; the second needs no derivatives of n and is used
// for piecewise-constant media and for the inversion adjoint.
enum class LsForm { gradient, grad_div };

struct SolverOptions {
    LsForm form = LsForm::gradient;
    double rtol = 1e-8;
    int restart = 50;
    int max_iterations = 2000;
};

struct SolveReport {
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;
};

// Convolution with the Helmholtz kernel truncated at radius rho, for sources
// on a C(pi) grid, evaluated on a periodic grid of half-side >= rho that
// contains the source grid (same spacing). Exact for targets within
// rho - pi of the origin.
class VolumePotential {
public:
    VolumePotential(const CubeGrid& source, double kappa, double target_radius);

    const CubeGrid& target_grid() const { return target_; }
    int offset() const { return offset_; }
    // target-grid index of a source-grid node
    Eigen::Index embed(Eigen::Index source_idx) const;

    // q may be empty (no gradient term)
    VectorField apply(const VectorField& J, const ScalarField* q, LsForm form) const;

    static cplx truncated_symbol(double xi, double kappa, double rho);

private:
    CubeGrid source_;
    CubeGrid target_;
    int offset_ = 0;
    double kappa_;
    ScalarField symbol_;
    std::vector<double> xi_axis_;
};

class ScatteringSolver {
public:
    ScatteringSolver(const RefractiveIndex& n, double kappa, SolverOptions options = {});

    const RefractiveIndex& index() const { return n_; }
    const CubeGrid& grid() const { return n_.grid(); }
    double kappa() const { return kappa_; }
    const SolverOptions& options() const { return opt_; }
    const std::vector<Eigen::Index>& support() const { return support_; }

    // incident samples, zero outside B(pi)
    VectorField sample_incident(const IncidentField& inc) const;
    // T E, the volume-potential part of the equation (restricted to C(pi))
    VectorField potential(const VectorField& E) const;

    VectorFieldGrid solve(const IncidentField& inc, SolveReport* report = nullptr) const;
    VectorField solve_samples(const VectorField& incident, SolveReport* report = nullptr) const;
    // first Born approximation of the scattered field on the grid
    VectorField born_scattered(const IncidentField& inc) const;

    // direct quadrature of the representation formula, |x| > pi
    CVec3 scattered_at(const VectorField& E, const Vec3& x) const;
    CVec3 far_pattern(const VectorField& E, const Vec3& xhat) const;
    // total field on a grid covering B(radius), from the same discrete sources
    VectorFieldGrid extend_total(const VectorField& E, const IncidentField& inc, double radius) const;

private:
    RefractiveIndex n_;
    double kappa_;
    SolverOptions opt_;
    ScalarField contrast_;
    VectorField gradlog_;  // grad n / n, masked to B(pi)
    std::vector<Eigen::Index> support_;
    std::shared_ptr<const VolumePotential> pot_;

    void sources(const VectorField& E, VectorField& J, ScalarField& q) const;
};

VectorFieldGrid solve_scattering(const RefractiveIndex& n, const IncidentField& inc, double kappa,
                                 SolverOptions options = {});
std::vector<CVec3> evaluate_scattered(const VectorFieldGrid& E, const RefractiveIndex& n, double kappa,
                                      const std::vector<Vec3>& points, SolverOptions options = {});

// relative disagreement between solutions on the grid and on a grid refined
// by band-limited interpolation of n; throws when above tol
double refinement_check(const RefractiveIndex& n, const IncidentField& inc, double kappa, double tol,
                        SolverOptions options = {});

enum class DataPart { scattered, total };

struct NearFieldData {
    SphereGrid receivers;
    SphereGrid sources;
    std::vector<CMat3> m;  // receiver-major
    DataPart part = DataPart::scattered;

    const CMat3& at(int r, int s) const { return m[size_t(r) * sources.size() + s]; }
    CMat3& at(int r, int s) { return m[size_t(r) * sources.size() + s]; }
    // L2 norm on R S^2 x R S^2 with surface measure
    double norm() const;
};

struct FarFieldData {
    SphereGrid observation;
    SphereGrid incidence;
    std::vector<CMat3> m;  // observation-major

    const CMat3& at(int r, int s) const { return m[size_t(r) * incidence.size() + s]; }
    CMat3& at(int r, int s) { return m[size_t(r) * incidence.size() + s]; }
    double norm() const;
};

NearFieldData near_field_operator(const RefractiveIndex& n, double kappa, const SphereGrid& receivers,
                                  const SphereGrid& sources, SolverOptions options = {});
FarFieldData far_field_operator(const RefractiveIndex& n, double kappa, const SphereGrid& observation,
                                const SphereGrid& incidence, SolverOptions options = {});
// w1 sampled on the grid pair (receivers and sources must not coincide)
NearFieldData background_near_field(const SphereGrid& receivers, const SphereGrid& sources, double kappa);

double distance(const NearFieldData& a, const NearFieldData& b);
double distance(const FarFieldData& a, const FarFieldData& b);

}  // namespace mvsc
