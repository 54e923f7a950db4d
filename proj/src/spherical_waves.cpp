#include "mvsc/spherical_waves.hpp"

#include <algorithm>
#include <cmath>

namespace mvsc {

namespace {

// normalized associated Legendre values P(l, k) for 0 <= k <= l, so that
// Y_l^k = P(l, k)(cos theta) e^{i k phi}
Eigen::MatrixXd legendre_table(int L, double c)
{
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(L + 1, L + 1);
    P(0, 0) = 1.0 / std::sqrt(4 * pi);
    for (int k = 1; k <= L; ++k) P(k, k) = -std::sqrt((2.0 * k + 1) / (2.0 * k)) * s * P(k - 1, k - 1);
    for (int k = 0; k < L; ++k) P(k + 1, k) = std::sqrt(2.0 * k + 3) * c * P(k, k);
    for (int k = 0; k <= L; ++k)
        for (int l = k + 2; l <= L; ++l) {
            const double a = std::sqrt((4.0 * l * l - 1) / (double(l) * l - double(k) * k));
            const double b = std::sqrt(((l - 1.0) * (l - 1.0) - double(k) * k) / (4.0 * (l - 1.0) * (l - 1.0) - 1));
            P(l, k) = a * (c * P(l - 1, k) - b * P(l - 2, k));
        }
    return P;
}

void check_direction(const Vec3& d)
{
    if (std::abs(d.norm() - 1.0) > 1e-10) throw Error("spherical harmonic: direction must be a unit vector");
}

cplx ipow(int n)
{
    static const cplx table[4] = {1.0, I, -1.0, -I};
    return table[((n % 4) + 4) % 4];
}

}  // namespace

Eigen::VectorXcd sph_harmonics_upto(int L, const Vec3& direction)
{
    if (L < 0) throw Error("spherical harmonic: negative degree");
    check_direction(direction);
    const double c = std::clamp(direction(2), -1.0, 1.0);
    const double phi = std::atan2(direction(1), direction(0));
    const Eigen::MatrixXd P = legendre_table(L, c);
    Eigen::VectorXcd Y(sh_count(L));
    for (int l = 0; l <= L; ++l) {
        Y(sh_index(l, 0)) = P(l, 0);
        for (int k = 1; k <= l; ++k) {
            const cplx v = P(l, k) * std::polar(1.0, k * phi);
            Y(sh_index(l, k)) = v;
            Y(sh_index(l, -k)) = (k % 2 ? -1.0 : 1.0) * std::conj(v);
        }
    }
    return Y;
}

cplx sph_harmonic(int l, int k, const Vec3& direction)
{
    if (l < 0 || std::abs(k) > l) throw Error("spherical harmonic: need |k| <= l");
    return sph_harmonics_upto(l, direction)(sh_index(l, k));
}

Eigen::VectorXd sph_bessel_j_upto(int L, double z)
{
    if (!(z > 0)) throw Error("spherical Bessel: argument must be positive");
    // Miller's downward recurrence, normalized by sum (2k+1) j_k^2 = 1
    const int start = std::max(L, int(std::ceil(z))) + 40;
    std::vector<double> f(size_t(start) + 2, 0.0);
    f[size_t(start)] = 1e-300;
    for (int k = start; k >= 1; --k) {
        f[size_t(k - 1)] = (2.0 * k + 1) / z * f[size_t(k)] - f[size_t(k + 1)];
        if (std::abs(f[size_t(k - 1)]) > 1e250)
            for (int j = k - 1; j <= start; ++j) f[size_t(j)] *= 1e-250;
    }
    double fmax = 0;
    for (double v : f) fmax = std::max(fmax, std::abs(v));
    double sum = 0;
    for (int k = 0; k <= start; ++k) sum += (2.0 * k + 1) * std::pow(f[size_t(k)] / fmax, 2);
    double scale = 1.0 / (fmax * std::sqrt(sum));
    const double j0 = std::sin(z) / z, j1 = std::sin(z) / (z * z) - std::cos(z) / z;
    if (std::abs(j0) >= std::abs(j1) ? (j0 * f[0] < 0) : (j1 * f[1] < 0)) scale = -scale;
    Eigen::VectorXd j(L + 1);
    for (int k = 0; k <= L; ++k) j(k) = f[size_t(k)] * scale;
    return j;
}

Eigen::VectorXd sph_bessel_y_upto(int L, double z)
{
    if (!(z > 0)) throw Error("spherical Bessel: argument must be positive");
    Eigen::VectorXd y(L + 1);
    y(0) = -std::cos(z) / z;
    if (L >= 1) y(1) = -std::cos(z) / (z * z) - std::sin(z) / z;
    for (int l = 1; l < L; ++l) y(l + 1) = (2.0 * l + 1) / z * y(l) - y(l - 1);
    return y;
}

Eigen::VectorXcd sph_hankel1_upto(int L, double z)
{
    if (L < 0) throw Error("spherical Hankel: negative order");
    const Eigen::VectorXd j = sph_bessel_j_upto(L, z), y = sph_bessel_y_upto(L, z);
    Eigen::VectorXcd h(L + 1);
    for (int l = 0; l <= L; ++l) h(l) = cplx(j(l), y(l));
    return h;
}

cplx sph_hankel1(int l, double z) { return sph_hankel1_upto(l, z)(l); }

FarCoeffs::FarCoeffs(int L_) : L(L_), entries(size_t(sh_count(L_)) * size_t(sh_count(L_)), CMat3::Zero())
{
    if (L_ < 0) throw Error("FarCoeffs: negative degree");
}

double FarCoeffs::norm_sq() const
{
    double s = 0;
    for (const CMat3& a : entries) s += a.squaredNorm();
    return s;
}

namespace {

// rows: weighted conjugate harmonics at each node, or plain harmonics
Eigen::MatrixXcd harmonic_matrix(const SphereGrid& g, int L, bool conj_weighted)
{
    Eigen::MatrixXcd Y(g.size(), sh_count(L));
    for (int i = 0; i < g.size(); ++i) {
        const Eigen::VectorXcd y = sph_harmonics_upto(L, g.directions[size_t(i)]);
        if (conj_weighted)
            Y.row(i) = g.weights[size_t(i)] * y.conjugate().transpose();
        else
            Y.row(i) = y.transpose();
    }
    return Y;
}

}  // namespace

FarCoeffs far_coeffs(const FarFieldData& far, int L)
{
    if (L < 0) throw Error("far_coeffs: negative degree");
    if (far.observation.degree < 2 * L || far.incidence.degree < 2 * L)
        throw Error("far_coeffs: quadrature degree insufficient for L = " + std::to_string(L) +
                    " (need " + std::to_string(2 * L) + ")");
    const int no = far.observation.size(), ni = far.incidence.size(), nh = sh_count(L);
    const Eigen::MatrixXcd Co = harmonic_matrix(far.observation, L, true);
    const Eigen::MatrixXcd Ci = harmonic_matrix(far.incidence, L, true);
    FarCoeffs out(L);
    Eigen::MatrixXcd Ec(no, ni);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            for (int i = 0; i < no; ++i)
                for (int j = 0; j < ni; ++j) Ec(i, j) = far.at(i, j)(r, c);
            const Eigen::MatrixXcd A = Ci.transpose() * Ec.transpose() * Co;  // (l1k1, l2k2)
            for (int a = 0; a < nh; ++a)
                for (int b = 0; b < nh; ++b) out.entries[size_t(a) * size_t(nh) + size_t(b)](r, c) = A(a, b);
        }
    return out;
}

FarFieldData far_from_coeffs(const FarCoeffs& alpha, const SphereGrid& observation, const SphereGrid& incidence)
{
    const int nh = sh_count(alpha.L);
    const Eigen::MatrixXcd Yo = harmonic_matrix(observation, alpha.L, false);
    const Eigen::MatrixXcd Yi = harmonic_matrix(incidence, alpha.L, false);
    FarFieldData out{observation, incidence,
                     std::vector<CMat3>(size_t(observation.size()) * size_t(incidence.size()), CMat3::Zero())};
    Eigen::MatrixXcd A(nh, nh);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            for (int a = 0; a < nh; ++a)
                for (int b = 0; b < nh; ++b) A(a, b) = alpha.entries[size_t(a) * size_t(nh) + size_t(b)](r, c);
            const Eigen::MatrixXcd E = Yo * A.transpose() * Yi.transpose();
            for (int i = 0; i < observation.size(); ++i)
                for (int j = 0; j < incidence.size(); ++j) out.at(i, j)(r, c) = E(i, j);
        }
    return out;
}

namespace {

int resolve_degree(const FarCoeffs& alpha, int L)
{
    if (L < 0) return alpha.L;
    if (L > alpha.L) throw Error("near_from_far: L exceeds the degree of the coefficients");
    return L;
}

// i^{sign l} h_l(kappa r) Y_l^k(xhat), flat-indexed
Eigen::VectorXcd radial_harmonics(int L, double kappa, const Vec3& x, int sign)
{
    const double r = x.norm();
    const Eigen::VectorXcd h = sph_hankel1_upto(L, kappa * r);
    Eigen::VectorXcd v = sph_harmonics_upto(L, x / r);
    for (int l = 0; l <= L; ++l)
        for (int k = -l; k <= l; ++k) v(sh_index(l, k)) *= ipow(sign * l) * h(l);
    return v;
}

void check_radii(double rx, double ry)
{
    if (!(ry > pi)) throw Error("near_from_far: source radius must exceed pi");
    if (rx < ry * (1 - 1e-12)) throw Error("near_from_far: requires |x| >= |y|");
}

}  // namespace

NearSeries near_from_far(const FarCoeffs& alpha, double kappa, const Vec3& x, const Vec3& y, int L)
{
    if (!(kappa > 0)) throw Error("near_from_far: kappa must be positive");
    L = resolve_degree(alpha, L);
    check_radii(x.norm(), y.norm());
    const Eigen::VectorXcd vx = radial_harmonics(L, kappa, x, 1);
    const Eigen::VectorXcd uy = radial_harmonics(L, kappa, y, -1);
    const int nh = sh_count(alpha.L);
    CMat3 total = CMat3::Zero(), shell = CMat3::Zero();
    for (int l1 = 0; l1 <= L; ++l1)
        for (int k1 = -l1; k1 <= l1; ++k1)
            for (int l2 = 0; l2 <= L; ++l2)
                for (int k2 = -l2; k2 <= l2; ++k2) {
                    const int a = sh_index(l1, k1), b = sh_index(l2, k2);
                    const CMat3 term = (uy(a) * vx(b)) * alpha.entries[size_t(a) * size_t(nh) + size_t(b)];
                    total += term;
                    if (std::max(l1, l2) == L) shell += term;
                }
    const cplx pref = -I * kappa * kappa * kappa / (4 * pi);
    return {pref * total, std::abs(pref) * shell.norm()};
}

NearFieldData near_data_from_far(const FarCoeffs& alpha, double kappa, const SphereGrid& receivers,
                                 const SphereGrid& sources, int L)
{
    if (!(kappa > 0)) throw Error("near_from_far: kappa must be positive");
    L = resolve_degree(alpha, L);
    check_radii(receivers.radius, sources.radius);
    const int nh = sh_count(L), nha = sh_count(alpha.L);
    Eigen::MatrixXcd V(receivers.size(), nh), U(sources.size(), nh);
    for (int i = 0; i < receivers.size(); ++i) V.row(i) = radial_harmonics(L, kappa, receivers.point(i), 1).transpose();
    for (int j = 0; j < sources.size(); ++j) U.row(j) = radial_harmonics(L, kappa, sources.point(j), -1).transpose();
    NearFieldData out{receivers, sources,
                      std::vector<CMat3>(size_t(receivers.size()) * size_t(sources.size()), CMat3::Zero()),
                      DataPart::scattered};
    const cplx pref = -I * kappa * kappa * kappa / (4 * pi);
    Eigen::MatrixXcd A(nh, nh);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            for (int a = 0; a < nh; ++a)
                for (int b = 0; b < nh; ++b) A(a, b) = alpha.entries[size_t(a) * size_t(nha) + size_t(b)](r, c);
            const Eigen::MatrixXcd W = pref * (V * A.transpose() * U.transpose());
            for (int i = 0; i < receivers.size(); ++i)
                for (int j = 0; j < sources.size(); ++j) out.at(i, j)(r, c) = W(i, j);
        }
    return out;
}

double near_far_bound(double far_diff, double theta, double omega, double rho, double delta_max)
{
    if (!(theta > 0 && theta < 1)) throw Error("near_far_bound: theta must lie in (0, 1)");
    if (!(omega > 0 && rho > 0)) throw Error("near_far_bound: omega and rho must be positive");
    if (far_diff < 0) throw Error("near_far_bound: negative norm");
    if (far_diff > delta_max) throw Error("near_far_bound: far-field difference above delta_max, bound not applicable");
    if (far_diff == 0) return 0.0;
    const double arg = -std::log(far_diff / (omega * rho));
    if (!(arg >= 0)) throw Error("near_far_bound: logarithm argument out of range (far_diff > omega rho)");
    return rho * rho * std::exp(-std::pow(arg, theta));
}

NearFarFit fit_near_far(const std::vector<std::pair<double, double>>& samples, double theta)
{
    if (!(theta > 0 && theta < 1)) throw Error("fit_near_far: theta must lie in (0, 1)");
    NearFarFit fit;
    fit.theta = theta;
    double rho0 = 0;
    for (const auto& [f, n] : samples) {
        if (f < 0 || n < 0) throw Error("fit_near_far: negative norm");
        rho0 = std::max(rho0, n);
        fit.delta_max = std::max(fit.delta_max, f);
    }
    if (rho0 == 0) throw Error("fit_near_far: all near-field differences vanish");
    for (const auto& [f, n] : samples)
        if (n > 0 && f == 0) throw Error("fit_near_far: near data differ while far data coincide");
    // the bound holds for omega up to a per-sample ceiling; omega rho must also
    // exceed every far difference, which may require enlarging rho
    for (double rho = rho0; rho < rho0 * 1e6; rho *= 1.25) {
        double omega = std::numeric_limits<double>::infinity();
        for (const auto& [f, n] : samples) {
            if (n == 0) continue;
            omega = std::min(omega, (f / rho) * std::exp(std::pow(std::log(rho * rho / (n * n)), 1.0 / theta)));
        }
        if (omega * rho > fit.delta_max) {
            fit.rho = rho;
            fit.omega = omega * (1 - 1e-12);
            return fit;
        }
    }
    throw Error("fit_near_far: no admissible constants for these samples");
}

IndexFunction IndexFunction::psi_near(double A, double nu)
{
    if (!(A > 0 && nu > 0)) throw Error("index function: A and nu must be positive");
    IndexFunction f;
    f.kind = Kind::psi_near;
    f.A = A;
    f.nu = nu;
    return f;
}

IndexFunction IndexFunction::phi_far(double theta, double omega, double rho)
{
    if (!(theta > 0 && theta < 1)) throw Error("index function: theta must lie in (0, 1)");
    if (!(omega > 0 && rho > 0)) throw Error("index function: omega and rho must be positive");
    IndexFunction f;
    f.kind = Kind::phi_far;
    f.theta = theta;
    f.omega = omega;
    f.rho = rho;
    return f;
}

IndexFunction IndexFunction::psi_far(double A, double nu, double theta, double omega, double rho)
{
    IndexFunction f = phi_far(theta, omega, rho);
    const IndexFunction p = psi_near(A, nu);
    f.kind = Kind::psi_far;
    f.A = p.A;
    f.nu = p.nu;
    return f;
}

double IndexFunction::domain_limit() const
{
    if (kind == Kind::psi_near) return std::numeric_limits<double>::infinity();
    return omega * omega * rho * rho;
}

double IndexFunction::operator()(double t) const
{
    if (t < 0) throw Error("index function: negative argument");
    auto psi = [&](double s) { return s == 0 ? 0.0 : A * std::pow(std::log(3 + 1 / s), -2 * nu); };
    if (kind == Kind::psi_near) return psi(t);
    if (t >= domain_limit()) throw Error("index function: argument outside the domain of phi");
    const double phi = t == 0 ? 0.0 : rho * rho * std::exp(-std::pow(std::log(omega * rho / std::sqrt(t)), theta));
    return kind == Kind::phi_far ? phi : psi(phi);
}

double psi_compose(double t, double A, double nu, double theta, double omega, double rho)
{
    return IndexFunction::psi_far(A, nu, theta, omega, rho)(t);
}

}  // namespace mvsc
