#pragma once

#include "mvsc/cgo.hpp"
#include "mvsc/em_forward.hpp"

#include <string>

namespace mvsc {

// A generic table of samples with fitted constants, written out by the harness.
struct VscRow {
    std::string id;
    std::vector<double> values;
};
struct VscReport {
    std::string family;
    std::vector<std::pair<std::string, double>> constants;
    std::vector<std::string> columns;
    std::vector<VscRow> rows;
    int violations = 0;

    double constant(const std::string& name) const;
};

// Bilinear pairing \int (n1 - n2) E1.E2 by grid quadrature (dn given on the grid).
cplx pairing_volume(const CubeGrid& grid, const ScalarField& dn, const VectorField& E1, const VectorField& E2);
cplx pairing_volume(const RefractiveIndex& n1, const RefractiveIndex& n2, const VectorField& E1,
                    const VectorField& E2);

// (N a)(x) = 2 nu x \int w(x, y) a(y) ds(y): densities on the source grid, result on the receivers.
std::vector<CVec3> boundary_operator_N(const NearFieldData& w, const std::vector<CVec3>& a);

// log of the L2 norm on B(radius) of a field given by grid samples
double log_l2_norm(const CubeGrid& grid, const VectorField& E, double radius);

struct DiffToDataSample {
    double lhs = 0.0;        // |\int (n1 - n2) E1.E2|
    double data_diff = 0.0;  // ||w1 - w2||
    double log_rhs = 0.0;    // log(||w1 - w2|| ||E1|| ||E2||)
    double log_ratio() const { return std::log(lhs) - log_rhs; }
};
// residual: Maxwell residual of the fields, rejected above tol
DiffToDataSample check_difftodata(cplx pairing, double log_norm_e1, double log_norm_e2, const NearFieldData& w1,
                                  const NearFieldData& w2, double residual, double tol = 1e-3);

struct ScheduleParams {
    double delta = 0.0, R = 0.0, m = 4.0, s = 6.0;
    double t = 0.0, rho = 0.0;
    double t0 = 0.0;
    bool reaches_t0 = false;
};
ScheduleParams schedule(double delta, double R, double m, double s, double t0 = 0.0);

struct FourierDiffSample {
    Vec3i gamma;
    double lhs = 0.0;          // |F(n1 - n2)(gamma)| from the coefficients
    double log_rhs1 = 0.0;     // log(delta e^{3Rt})
    double rhs2 = 0.0;         // ||n1 - n2||_{H^m} rho / t
    bool cgo = false;          // decomposition available (gamma != 0)
    cplx pairing = 0.0;        // \int (n1 - n2) E1.E2
    cplx remainder = 0.0;      // \int (n1 - n2) e^{-i gamma x} (U1.U2 - 1)
    double lhs_pairing = 0.0;  // |pairing - remainder| / (2 pi)^{3/2}
    double log_m2 = 0.0;       // log(|pairing| / (delta ||E1|| ||E2||))
    double residual = 0.0;     // worst CGO Maxwell residual
    std::string failure;       // CGO construction error at this gamma, if any
    double log_bound() const;  // log(rhs1 + rhs2)
};

struct FourierDiffOptions {
    double kappa = 1.0, R = 3.5, m = 4.0, b = 0.5;
    double t = 0.0, rho = 4.0;
    int cgo_points = 48;
    int medium_points = 32;  // C(pi) grid for the coefficients
    bool with_cgo = true;
};

struct FourierDiffReport {
    double t = 0.0, rho = 0.0, delta = 0.0, hm_diff = 0.0;
    std::vector<FourierDiffSample> samples;
    double log_m3 = 0.0;        // smallest constant making every sample pass
    double m3_remainder = 0.0;  // max |remainder| / ((2 pi)^{3/2} ||n1 - n2|| rho / t)
    int violations = 0;
    int cgo_failures = 0;
    VscReport report(const std::string& family) const;
};

// Samples |gamma| <= rho; w1, w2 are the near data of the two media.
FourierDiffReport check_fourier_diff(const BumpProfile& n1, const BumpProfile& n2, const NearFieldData& w1,
                                     const NearFieldData& w2, const FourierDiffOptions& opt);
// > 0 when the sample breaks the bound with constant e^{log_m3}
double log_excess(const FourierDiffSample& s, double log_m3);
// Fits one M3 for several reports sharing t and rho.
double fit_log_m3(const std::vector<FourierDiffReport>& reports);

// sum over |gamma| <= rho of <gamma>^m |F[n - 1](gamma)|, <gamma> = 1 + |gamma|^2
double lowfreq_weighted_sum(const RefractiveIndex& n, double rho, double m);
// sum over |gamma| > rho of <gamma>^m |F[n - 1](gamma)|^2
double highfreq_tail(const RefractiveIndex& n, double rho, double m);
// rho^{2(m-s)} C_s^2 with C_s = ||n - 1||_{H^s}
double highfreq_tail_bound(const RefractiveIndex& n, double rho, double m, double s);

struct VscMember {
    std::string id;
    RefractiveIndex n;
    double data_diff = 0.0;  // ||F(n) - F(n_dagger)||
};

struct VscParams {
    double m = 4.0, s = 6.0;
    double beta = 0.5;
    bool far = false;
    double theta = 0.5;  // far field only
    std::string family = "family";
};

// Fits A (near) or B (far) in
//   Re<n_dagger - 1, n_dagger - n>_{H^m} <= (1 - beta)/2 ||n - n_dagger||^2 + A (ln(3 + 1/delta^2))^{-2 nu}
// (exponent 2 nu theta for far data). Members with ||n - n_dagger|| > 4 C_s take the
// Cauchy-Schwarz branch and are checked without A.
VscReport vsc_check(const RefractiveIndex& n_dagger, const std::vector<VscMember>& family, const VscParams& p);

}  // namespace mvsc
