#include "doctest.h"

#include "mvsc/em_forward.hpp"
#include "oracles/mie.hpp"

#include <random>

using namespace mvsc;

namespace {

// the reference bump: centred, unit width
RefractiveIndex bump_medium(const CubeGrid& g, cplx amp, double width = 1.0)
{
    BumpProfile p;
    p.bumps.push_back({Vec3::Zero(), amp, width});
    return make_test_index(p, g, 0.5);
}

double rel_ball(const CubeGrid& g, const VectorField& a, const VectorField& b)
{
    double num = 0, den = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (g.node(i).norm() >= pi) continue;
        num += (a.row(i) - b.row(i)).abs2().sum();
        den += b.row(i).abs2().sum();
    }
    return std::sqrt(num / den);
}

// Hessian of Phi by central differences
Eigen::Matrix3cd fd_hessian(const Vec3& x, double kappa, double h)
{
    Eigen::Matrix3cd H;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const Vec3 ei = h * Vec3::Unit(i), ej = h * Vec3::Unit(j);
            H(i, j) = (helmholtz_kernel(x + ei + ej, kappa) - helmholtz_kernel(x + ei - ej, kappa) -
                       helmholtz_kernel(x - ei + ej, kappa) + helmholtz_kernel(x - ei - ej, kappa)) /
                      (4 * h * h);
        }
    return H;
}

template <class F>
CVec3 fd_curl(F&& f, const Vec3& x, double h)
{
    auto d = [&](int j) { return CVec3((f(x + h * Vec3::Unit(j)) - f(x - h * Vec3::Unit(j))) / (2 * h)); };
    const CVec3 dx = d(0), dy = d(1), dz = d(2);
    return CVec3(dy(2) - dz(1), dz(0) - dx(2), dx(1) - dy(0));
}

}  // namespace

TEST_CASE("Helmholtz kernel")
{
    const cplx v = helmholtz_kernel(Vec3(1, 0, 0), 1.0);
    CHECK(v.real() == doctest::Approx(std::cos(1.0) / (4 * pi)).epsilon(1e-14));
    CHECK(v.imag() == doctest::Approx(0.06696).epsilon(1e-3));
    CHECK(helmholtz_kernel(Vec3(0, 2, 0), 0.0) == cplx(1.0 / (8 * pi)));
    for (double r : {10.0, 100.0}) CHECK(std::abs(helmholtz_kernel(Vec3(0, 0, r), 1.0)) * 4 * pi * r == doctest::Approx(1.0));
    CHECK_THROWS_AS(helmholtz_kernel(Vec3::Zero(), 1.0), Error);
}

TEST_CASE("background Green tensor")
{
    const Vec3 x(0.3, 1.1, -0.4), y = x + Vec3(1.2, -1.4, 0.8).normalized() * 2.0;
    const double k = 1.0;
    CHECK((background_green(x, y, k) - background_green(y, x, k).transpose()).norm() < 1e-12);

    // -(1/(i k)) curl curl (a Phi) = (i/k)(H - tr(H) I) a with H the Hessian of Phi
    const Eigen::Matrix3cd H = fd_hessian(x - y, k, 2e-4);
    const Eigen::Matrix3cd fd = (I / k) * (H - H.trace() * Eigen::Matrix3cd::Identity());
    const Eigen::Matrix3cd w = background_green(x, y, k);
    CHECK((fd - w).norm() / w.norm() < 1e-6);

    // divergence of each column in x
    const double h = 1e-4;
    for (int c = 0; c < 3; ++c) {
        cplx div = 0.0;
        for (int j = 0; j < 3; ++j)
            div += (background_green(x + h * Vec3::Unit(j), y, k)(j, c) - background_green(x - h * Vec3::Unit(j), y, k)(j, c)) /
                   (2 * h);
        CHECK(std::abs(div) < 1e-6);
    }
    CHECK_THROWS_AS(background_green(x, x, k), Error);
}

TEST_CASE("incident fields solve the background Maxwell system")
{
    const double k = 1.3;
    const CVec3 a(0.3, cplx(0, 1), -0.7);
    const auto dip = IncidentField::dipole(Vec3(3.5, 0.2, -0.1), a, k);
    const Vec3 d = Vec3(1, -2, 0.5).normalized();
    const auto pw = IncidentField::plane(d, CVec3(0.2, 1.0, cplx(0, 0.4)), k);
    for (const auto* f : {&dip, &pw}) {
        for (const Vec3& x : {Vec3(0.1, 0.2, 0.3), Vec3(-1.0, 0.5, 2.0)}) {
            const CVec3 E = f->E(x), H = f->H(x);
            const CVec3 r1 = fd_curl([&](const Vec3& p) { return f->E(p); }, x, 1e-4) - I * k * H;
            const CVec3 r2 = fd_curl([&](const Vec3& p) { return f->H(p); }, x, 1e-4) + I * k * E;
            CHECK(r1.norm() / (k * H.norm()) < 1e-6);
            CHECK(r2.norm() / (k * E.norm()) < 1e-6);
        }
    }
    const Vec3 x(0.4, -0.3, 1.0);
    CHECK((dip.E(x) - background_green(x, Vec3(3.5, 0.2, -0.1), k) * a).norm() < 1e-15);
    const auto dip2 = IncidentField::dipole(Vec3(3.5, 0.2, -0.1), cplx(2.0, -1.0) * a, k);
    CHECK((dip2.E(x) - cplx(2.0, -1.0) * dip.E(x)).norm() < 1e-14);

    CHECK(IncidentField::plane(d, d.cast<cplx>(), k).E(x).norm() < 1e-15);
    const CVec3 e = IncidentField::plane(Vec3::UnitZ(), CVec3(1, 0, 0), 1.0).E(Vec3(0.3, 0.2, 0.7));
    CHECK((e - CVec3(1, 0, 0) * std::polar(1.0, 0.7)).norm() < 1e-15);
    CHECK(std::abs(bdot(d.cast<cplx>(), pw.E(x))) < 1e-14);
    CHECK_THROWS_AS(IncidentField::plane(Vec3(1, 1, 0), CVec3(0, 0, 1), k), Error);
    CHECK_THROWS_AS(dip.E(Vec3(3.5, 0.2, -0.1)), Error);
}

TEST_CASE("restarted GMRES on a dense system")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    const int n = 120;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) += cplx(nd(rng), nd(rng)) * 0.3 / std::sqrt(double(n));
    Eigen::VectorXcd b(n);
    for (int i = 0; i < n; ++i) b(i) = cplx(nd(rng), nd(rng));
    auto op = [&](const Eigen::VectorXcd& v) { return Eigen::VectorXcd(A * v); };
    const GmresResult r = gmres(op, b, Eigen::VectorXcd::Zero(n), GmresOptions{1e-12, 10, 500});
    CHECK(r.converged);
    CHECK((r.x - A.partialPivLu().solve(b)).norm() / b.norm() < 1e-10);
    for (size_t i = 1; i < r.residual_history.size(); ++i)
        CHECK(r.residual_history[i] <= r.residual_history[i - 1] * (1 + 1e-12));
    const GmresResult cut = gmres(op, b, Eigen::VectorXcd::Zero(n), GmresOptions{1e-12, 3, 4});
    CHECK_FALSE(cut.converged);
    CHECK(cut.residual_history.size() >= 2);
}

TEST_CASE("truncated kernel symbol is continuous through the resonant shell")
{
    const double rho = 2 * pi;
    for (double k : {0.7, 1.0, 2.3}) {
        for (double eps : {1e-5, 1e-4, 5e-3}) {
            const cplx lo = VolumePotential::truncated_symbol(k * (1 - eps), k, rho);
            const cplx hi = VolumePotential::truncated_symbol(k * (1 + eps), k, rho);
            CHECK(std::abs(lo - hi) < 1e-2 * std::abs(lo) * eps / 1e-4 + 1e-8);
        }
        const cplx zero = VolumePotential::truncated_symbol(0.0, k, rho);
        const cplx small = VolumePotential::truncated_symbol(1e-4, k, rho);
        CHECK(std::abs(zero - small) < 1e-6 * std::abs(zero));
    }
}

TEST_CASE("background medium leaves the incident field unchanged")
{
    CubeGrid g(pi, 16);
    const auto inc = IncidentField::plane(Vec3::UnitX(), CVec3(0, 0, 1), 1.0);
    const ScatteringSolver s(RefractiveIndex::background(g), 1.0);
    const VectorFieldGrid E = s.solve(inc);
    CHECK((E.values - s.sample_incident(inc)).abs().maxCoeff() == 0.0);
    CHECK(s.scattered_at(E.values, Vec3(4, 0, 0)).norm() == 0.0);
    const SphereGrid leb = SphereGrid::lebedev26(3.5);
    const NearFieldData w = near_field_operator(RefractiveIndex::background(g), 1.0, leb, leb);
    CHECK(w.norm() == 0.0);
    CHECK(far_field_operator(RefractiveIndex::background(g), 1.0, leb.scaled(1), leb.scaled(1)).norm() == 0.0);
}

TEST_CASE("solver residual and agreement of the two equation forms")
{
    CubeGrid g(pi, 24);
    const RefractiveIndex n = bump_medium(g, cplx(0.2, 0.05));
    const auto inc = IncidentField::plane(Vec3(0, 0.6, 0.8), CVec3(1, 0, 0), 1.0);
    SolverOptions grad, gd;
    gd.form = LsForm::grad_div;
    const ScatteringSolver a(n, 1.0, grad), b(n, 1.0, gd);
    SolveReport rep;
    const VectorField Ea = a.solve(inc, &rep).values;
    CHECK(rep.residual <= 1e-8);
    const VectorField Ei = a.sample_incident(inc);
    const VectorField res = Ea - a.potential(Ea) - Ei;
    CHECK(std::sqrt(res.abs2().sum() / Ei.abs2().sum()) <= 1e-8);
    const VectorField Eb = b.solve(inc).values;
    CHECK(rel_ball(g, Ea - Ei, Eb - Ei) < 2e-2);
}

TEST_CASE("Born regime scaling")
{
    CubeGrid g(pi, 16);
    const auto inc = IncidentField::plane(Vec3::UnitZ(), CVec3(1, 0, 0), 1.0);
    std::vector<double> dev;
    for (double a : {0.02, 0.01, 0.005}) {
        SolverOptions o;
        o.rtol = 1e-12;
        const ScatteringSolver s(bump_medium(g, a), 1.0, o);
        const VectorField Ei = s.sample_incident(inc);
        const VectorField full = s.solve(inc).values - Ei;
        dev.push_back(rel_ball(g, full, s.born_scattered(inc)));
    }
    for (int i = 0; i < 2; ++i) {
        const double ratio = dev[size_t(i)] / dev[size_t(i + 1)];
        CHECK(ratio >= 1.5);
        CHECK(ratio <= 2.5);
    }
}

TEST_CASE("exterior representation agrees with the field on an enlarged grid")
{
    CubeGrid g(pi, 32);
    const auto inc = IncidentField::plane(Vec3(0.6, 0, 0.8), CVec3(0, 1, 0), 1.0);
    for (LsForm form : {LsForm::gradient, LsForm::grad_div}) {
        SolverOptions o;
        o.form = form;
        // a wide bump keeps the grid-sampled density well resolved
        const ScatteringSolver s(bump_medium(g, 0.2, 2.0), 1.0, o);
        const VectorField E = s.solve(inc).values;
        const VectorFieldGrid big = s.extend_total(E, inc, 5.0);
        double num = 0, den = 0;
        for (Eigen::Index i = 0; i < big.grid.size(); i += 7) {
            const Vec3 x = big.grid.node(i);
            if (x.norm() < pi + 0.6 || x.norm() > 5.0) continue;
            const CVec3 direct = s.scattered_at(E, x);
            const CVec3 grid_val = big.values.row(i).transpose().matrix() - inc.E(x);
            num += (direct - grid_val).squaredNorm();
            den += direct.squaredNorm();
        }
        CHECK(std::sqrt(num / den) < 1e-3);
        // radiation decay
        std::vector<double> scaled;
        for (double r : {10.0, 20.0, 40.0}) scaled.push_back(r * s.scattered_at(E, r * Vec3(0, 0.6, 0.8)).norm());
        CHECK(scaled[2] < 1.2 * scaled[0]);
        CHECK(scaled[2] > 0.8 * scaled[0]);
        CHECK_THROWS_AS(s.scattered_at(E, Vec3(1, 0, 0)), Error);
    }
}

TEST_CASE("far pattern is the large-distance limit of the scattered field")
{
    CubeGrid g(pi, 24);
    const auto inc = IncidentField::plane(Vec3(0.6, 0, 0.8), CVec3(0, 1, 0), 1.0);
    const ScatteringSolver s(bump_medium(g, 0.2), 1.0);
    const VectorField E = s.solve(inc).values;
    const SphereGrid dirs = SphereGrid::lebedev26();
    auto scaled = [&](double r, const Vec3& xh) { return CVec3(r * std::polar(1.0, -r) * s.scattered_at(E, r * xh)); };
    // mismatch is the O(1/(kappa r)) correction: it halves when r doubles, and one
    // Richardson step from r = 50 removes it
    double m50 = 0, m100 = 0, m200 = 0, rich = 0, den = 0;
    for (int i = 0; i < dirs.size(); ++i) {
        const Vec3& xh = dirs.directions[size_t(i)];
        const double w = dirs.weights[size_t(i)];
        const CVec3 far = s.far_pattern(E, xh), a = scaled(50, xh), b = scaled(100, xh);
        m50 += w * (a - far).squaredNorm();
        m100 += w * (b - far).squaredNorm();
        m200 += w * (scaled(200, xh) - far).squaredNorm();
        rich += w * (2.0 * b - a - far).squaredNorm();
        den += w * far.squaredNorm();
    }
    CHECK(std::sqrt(m50 / m100) == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::sqrt(m100 / m200) == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::sqrt(rich / den) <= 1e-2);
}

TEST_CASE("near-field data: reciprocity and linear response")
{
    CubeGrid g(pi, 32);
    const SphereGrid leb = SphereGrid::lebedev26(4.5);
    const NearFieldData w = near_field_operator(bump_medium(g, 0.2), 1.0, leb, leb);
    double num = 0, den = 0;
    for (int r = 0; r < leb.size(); ++r)
        for (int s = 0; s < leb.size(); ++s) {
            num += (w.at(r, s) - w.at(s, r).transpose()).squaredNorm();
            den += w.at(r, s).squaredNorm();
        }
    CHECK(std::sqrt(num / den) <= 1e-3);

    CubeGrid coarse(pi, 16);
    const double n1 = near_field_operator(bump_medium(coarse, 0.01), 1.0, leb, leb).norm();
    const double n2 = near_field_operator(bump_medium(coarse, 0.005), 1.0, leb, leb).norm();
    CHECK(n2 / n1 == doctest::Approx(0.5).epsilon(0.1));
    CHECK_THROWS_AS(near_field_operator(bump_medium(coarse, 0.01), 1.0, leb.scaled(3.0), leb), Error);
}

TEST_CASE("far-field reciprocity")
{
    CubeGrid g(pi, 16);
    const SphereGrid leb = SphereGrid::lebedev26();
    const FarFieldData e = far_field_operator(bump_medium(g, 0.2), 1.0, leb, leb);
    auto find = [&](const Vec3& v) {
        for (int i = 0; i < leb.size(); ++i)
            if ((leb.directions[size_t(i)] - v).norm() < 1e-12) return i;
        return -1;
    };
    double num = 0, den = 0;
    for (int r = 0; r < leb.size(); ++r)
        for (int s = 0; s < leb.size(); ++s) {
            const int rr = find(-leb.directions[size_t(s)]), ss = find(-leb.directions[size_t(r)]);
            num += (e.at(r, s) - e.at(rr, ss).transpose()).squaredNorm();
            den += e.at(r, s).squaredNorm();
        }
    CHECK(std::sqrt(num / den) <= 1e-2);
}

TEST_CASE("absorbing media solve without breakdown")
{
    CubeGrid g(pi, 16);
    const auto inc = IncidentField::dipole(Vec3(0, 0, 3.6), CVec3(1, 0, 0), 1.0);
    for (cplx amp : {cplx(0.3, 0.0), cplx(0.2, 0.3), cplx(-0.3, 0.5), cplx(0.5, 1.0)}) {
        SolveReport rep;
        ScatteringSolver(bump_medium(g, amp), 1.0).solve(inc, &rep);
        CHECK(rep.residual <= 1e-8);
    }
}

TEST_CASE("homogeneous ball against the Mie series on a coarse grid")
{
    CubeGrid g(pi, 24);
    SolverOptions o;
    o.form = LsForm::grad_div;
    const ScatteringSolver s(make_ball_index(1.0, 1.2, g, 0.5), 1.0, o);
    const oracle::MieSphere mie(std::sqrt(1.2), 1.0);
    CHECK(mie.q_ext() == doctest::Approx(mie.q_sca()).epsilon(1e-10));
    const SphereGrid dirs = SphereGrid::gauss_product(3, 6);
    double num = 0, den = 0;
    for (int si = 0; si < dirs.size(); si += 3) {
        const Vec3 d = dirs.directions[size_t(si)];
        const Vec3 p = tangent_basis(d).first;
        const VectorField E = s.solve(IncidentField::plane(d, p.cast<cplx>(), 1.0)).values;
        for (int r = 0; r < dirs.size(); ++r) {
            const CVec3 ref = oracle::mie_far_field(mie, 1.0, d, p, dirs.directions[size_t(r)]);
            num += dirs.weights[size_t(r)] * (s.far_pattern(E, dirs.directions[size_t(r)]) - ref).squaredNorm();
            den += dirs.weights[size_t(r)] * ref.squaredNorm();
        }
    }
    CHECK(std::sqrt(num / den) < 0.02);
}

TEST_CASE("sphere quadrature")
{
    for (const SphereGrid& sg : {SphereGrid::gauss_product(5, 10), SphereGrid::lebedev26(), SphereGrid::for_degree(12)}) {
        double sum = 0;
        for (double w : sg.weights) sum += w;
        CHECK(sum == doctest::Approx(4 * pi).epsilon(1e-12));
        // exactness on x^a y^b z^c monomials up to the declared degree
        for (int a = 0; a <= sg.degree; ++a)
            for (int b = 0; a + b <= sg.degree; ++b)
                for (int c = 0; a + b + c <= sg.degree; ++c) {
                    double q = 0;
                    for (int i = 0; i < sg.size(); ++i) {
                        const Vec3& v = sg.directions[size_t(i)];
                        q += sg.weights[size_t(i)] * std::pow(v(0), a) * std::pow(v(1), b) * std::pow(v(2), c);
                    }
                    double exact = 0;
                    if (a % 2 == 0 && b % 2 == 0 && c % 2 == 0)
                        exact = 2 * std::tgamma((a + 1) / 2.0) * std::tgamma((b + 1) / 2.0) * std::tgamma((c + 1) / 2.0) /
                                std::tgamma((a + b + c + 3) / 2.0);
                    CHECK(std::abs(q - exact) < 1e-12);
                }
    }
}

TEST_CASE("grid refinement of the smooth bump solution")
{
    const auto inc = IncidentField::plane(Vec3(0.6, 0, 0.8), CVec3(0, 1, 0), 1.0);
    std::vector<VectorField> sol;
    for (int n : {24, 48, 96}) {
        SolverOptions o;
        o.restart = 10;
        CubeGrid g(pi, n);
        sol.push_back(ScatteringSolver(bump_medium(g, 0.2), 1.0, o).solve(inc).values);
    }
    // nodes of the coarse grid are every other node of the next one
    auto diff = [](const VectorField& coarse, int nc, const VectorField& fine) {
        CubeGrid gc(pi, nc), gf(pi, 2 * nc);
        double num = 0, den = 0;
        for (Eigen::Index i = 0; i < gc.size(); ++i) {
            const Vec3i t = gc.triple(i);
            const Eigen::Index j = gf.index(2 * t(0), 2 * t(1), 2 * t(2));
            num += (coarse.row(i) - fine.row(j)).abs2().sum();
            den += fine.row(j).abs2().sum();
        }
        return std::sqrt(num / den);
    };
    const double d1 = diff(sol[0], 24, sol[1]), d2 = diff(sol[1], 48, sol[2]);
    MESSAGE("refinement differences " << d1 << " " << d2);
    CHECK(d1 >= 2 * d2);
}
