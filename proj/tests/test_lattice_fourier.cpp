#include "doctest.h"

#include "mvsc/lattice_fourier.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <random>

using namespace mvsc;

namespace {

const double c32 = std::pow(2 * pi, 1.5);

Eigen::Index find_lattice(const CubeGrid& g, const Vec3i& v)
{
    auto w = [&](int a) { return a < 0 ? a + g.n() : a; };
    return g.index(w(v(0)), w(v(1)), w(v(2)));
}

BumpProfile smooth_profile()
{
    BumpProfile p;
    p.bumps.push_back({Vec3(0.3, -0.2, 0.1), cplx(0.15, 0.02), 1.6});
    p.bumps.push_back({Vec3(-0.5, 0.4, 0.0), cplx(-0.05, 0.01), 1.2});
    return p;
}

// direct (non-FFT) coefficient at one frequency
cplx direct_coeff(const CubeGrid& g, const ScalarField& f, const Vec3i& gam)
{
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i)
        acc += f(i) * std::polar(1.0, -gam.cast<double>().dot(g.node(i)));
    return acc * g.cell_volume() / c32;
}

}  // namespace

TEST_CASE("constant field has only the zero coefficient")
{
    CubeGrid g(pi, 8);
    ScalarField c = fourier_coeffs(g, ScalarField::Ones(g.size()));
    CHECK(std::abs(c(0) - c32) < 1e-12);
    c(0) = 0.0;
    CHECK(c.abs().maxCoeff() < 1e-12);
}

TEST_CASE("normalized exponential has unit coefficient")
{
    CubeGrid g(pi, 16);
    ScalarField f(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) f(i) = std::polar(1.0, g.node(i)(0)) / c32;
    ScalarField c = fourier_coeffs(g, f);
    const Eigen::Index at = find_lattice(g, Vec3i(1, 0, 0));
    CHECK(std::abs(c(at) - 1.0) < 1e-12);
    c(at) = 0.0;
    CHECK(c.abs().maxCoeff() < 1e-12);
}

TEST_CASE("coefficients agree with direct summation and round-trip")
{
    CubeGrid g(pi, 16);
    const RefractiveIndex n = make_test_index(smooth_profile(), g, 0.5);
    const ScalarField f = n.contrast();
    for (const Vec3i& gam : {Vec3i(0, 0, 0), Vec3i(1, -2, 3), Vec3i(-4, 0, 7)}) {
        const cplx d = direct_coeff(g, f, gam);
        CHECK(std::abs(n.coeffs()(find_lattice(g, gam)) - d) < 1e-12 * (1 + std::abs(d)));
    }
    const ScalarField back = inverse_coeffs(g, n.coeffs());
    CHECK((back - f).matrix().norm() / f.matrix().norm() < 1e-12);
}

TEST_CASE("H^m norm values")
{
    CubeGrid g(pi, 8);
    ScalarField c = ScalarField::Zero(g.size());
    c(find_lattice(g, Vec3i(1, 1, 1))) = std::polar(1.0, 0.7);
    CHECK(hm_norm(g, c, 4) == doctest::Approx(16.0).epsilon(1e-14));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = cplx(nd(rng), nd(rng));
    CHECK(hm_norm(g, c, 0) == doctest::Approx(c.matrix().norm()).epsilon(1e-13));
    CHECK(hm_norm(g, c, 2) > hm_norm(g, c, 1));
}

TEST_CASE("H^m norm of a bump matches an independent weighted sum")
{
    CubeGrid g(pi, 16);
    const RefractiveIndex n = make_test_index(smooth_profile(), g, 0.5);
    long double acc = 0;
    for (int a = -8; a < 8; ++a)
        for (int b = -8; b < 8; ++b)
            for (int c = -8; c < 8; ++c) {
                const cplx v = n.coeffs()(find_lattice(g, Vec3i(a, b, c)));
                const long double w = std::pow(1.0L + a * a + b * b + c * c, 4);
                acc += w * std::norm(v);
            }
    CHECK(hm_norm(g, n.coeffs(), 4) == doctest::Approx(double(std::sqrt(acc))).epsilon(1e-12));
}

TEST_CASE("Parseval identity")
{
    CubeGrid g(pi, 16);
    const RefractiveIndex n = make_test_index(smooth_profile(), g, 0.5);
    const double grid_l2 = (n.contrast().abs2().sum()) * g.cell_volume();
    CHECK(std::pow(hm_norm(g, n.coeffs(), 0), 2) == doctest::Approx(grid_l2).epsilon(1e-10));
}

TEST_CASE("low-pass projection")
{
    CubeGrid g(pi, 8);
    const ScalarField ones = ScalarField::Ones(g.size());
    auto count = [&](double rho) { return int((project_low(g, ones, rho).abs() > 0).count()); };
    CHECK(count(0) == 1);
    CHECK(count(1) == 7);
    CHECK(count(1.5) == 19);
    CHECK(count(1.8) == 27);
    const ScalarField p = project_low(g, ones, 2.2);
    CHECK((project_low(g, p, 2.2) == p).all());
}

TEST_CASE("embedding constant")
{
    CHECK(embedding_constant(60.0) == doctest::Approx(std::pow(2 * pi, -1.5)).epsilon(1e-12));
    CHECK(embedding_constant(5.0) >= embedding_constant(6.0));
    CHECK_THROWS_AS(embedding_constant(3.5), Error);

    // brute-force lattice sum |g_i| <= 200 plus a numerically integrated tail bound
    const double m = 4.0;
    const int K = 200;
    double s = 0;
    for (int a = -K; a <= K; ++a)
        for (int b = -K; b <= K; ++b)
            for (int c = -K; c <= K; ++c) {
                const double q = 1.0 + a * a + b * b + c * c;
                s += 1.0 / (q * q);
            }
    const double sh = std::sqrt(3.0) / 2;
    boost::math::quadrature::exp_sinh<double> es;
    const double tail = es.integrate([&](double u) {
        const double r = u + K + 0.5;
        return 4 * pi * r * r * std::pow(1 + (r - sh) * (r - sh), 2 - m);
    });
    const double oracle = std::pow(2 * pi, -1.5) * std::sqrt(s + tail);
    CHECK(embedding_constant(m) == doctest::Approx(oracle).epsilon(5e-4));
    CHECK(embedding_constant(m) >= oracle * (1 - 1e-12));
}

TEST_CASE("second derivatives are bounded by the embedding constant")
{
    CubeGrid g(pi, 32);
    const RefractiveIndex n = make_test_index(smooth_profile(), g, 0.5);
    const ScalarField f = n.contrast();
    const double h = g.spacing();
    const int N = g.n();
    auto at = [&](int i, int j, int k) { return f(g.index((i + N) % N, (j + N) % N, (k + N) % N)); };
    double c2 = f.abs().maxCoeff();
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                const int e[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
                for (int a = 0; a < 3; ++a) {
                    const cplx d1 = (at(i + e[a][0], j + e[a][1], k + e[a][2]) -
                                     at(i - e[a][0], j - e[a][1], k - e[a][2])) / (2 * h);
                    c2 = std::max(c2, std::abs(d1));
                    for (int b = 0; b < 3; ++b) {
                        const cplx d2 = (at(i + e[a][0] + e[b][0], j + e[a][1] + e[b][1], k + e[a][2] + e[b][2]) -
                                         at(i + e[a][0] - e[b][0], j + e[a][1] - e[b][1], k + e[a][2] - e[b][2]) -
                                         at(i - e[a][0] + e[b][0], j - e[a][1] + e[b][1], k - e[a][2] + e[b][2]) +
                                         at(i - e[a][0] - e[b][0], j - e[a][1] - e[b][1], k - e[a][2] - e[b][2])) /
                                        (4 * h * h);
                        c2 = std::max(c2, std::abs(d2));
                    }
                }
            }
    for (double m : {4.0, 5.0, 6.0}) CHECK(c2 <= 1.05 * embedding_constant(m) * hm_norm(g, n.coeffs(), m));
}

TEST_CASE("smoothness parameters")
{
    SobolevParams p(4, 6);
    CHECK(p.nu() == doctest::Approx(2.0 / 6.5).epsilon(1e-14));
    CHECK(p.tau() == doctest::Approx(3.5));
    CHECK_THROWS_AS(SobolevParams(3.5, 6), Error);
    CHECK_THROWS_AS(SobolevParams(4, 4), Error);
    CHECK_THROWS_AS(SobolevParams(4, 9.5), Error);
}

TEST_CASE("test media synthesis")
{
    CubeGrid g(pi, 16);
    CHECK(make_test_index(BumpProfile{}, g, 0.5).is_background());

    BumpProfile one;
    one.bumps.push_back({Vec3::Zero(), 0.2, 1.0});
    const RefractiveIndex n = make_test_index(one, g, 0.5);
    CHECK(n.values().real().maxCoeff() == doctest::Approx(1.2).epsilon(1e-14));
    for (Eigen::Index i = 0; i < g.size(); ++i)
        if (g.node(i).norm() >= pi) CHECK(n.values()(i) == cplx(1.0));

    BumpProfile a, b, ab = smooth_profile();
    a.bumps = {ab.bumps[0]};
    b.bumps = {ab.bumps[1]};
    const ScalarField sum = make_test_index(a, g, 0.5).coeffs() + make_test_index(b, g, 0.5).coeffs();
    CHECK((make_test_index(ab, g, 0.5).coeffs() - sum).abs().maxCoeff() < 1e-14);

    BumpProfile deep;
    deep.bumps.push_back({Vec3::Zero(), -0.8, 1.0});
    CHECK_THROWS_AS(make_test_index(deep, g, 0.5), Error);
    BumpProfile outside;
    outside.bumps.push_back({Vec3(2.5, 0, 0), 0.1, 1.0});
    CHECK_THROWS_AS(make_test_index(outside, g, 0.5), Error);
    BumpProfile lossy;
    lossy.bumps.push_back({Vec3::Zero(), cplx(0.1, -0.1), 1.0});
    CHECK_THROWS_AS(make_test_index(lossy, g, 0.5), Error);
}

TEST_CASE("rotation of the medium")
{
    CubeGrid g(pi, 32);
    BumpProfile axial;
    axial.sharpness = 6.0;
    axial.bumps.push_back({Vec3(0, 0, 0.4), 0.2, 2.6});
    const RefractiveIndex n = make_test_index(axial, g, 0.5);
    CHECK((rotate_index(n, Eigen::Matrix3d::Identity()).values() - n.values()).abs().maxCoeff() == 0.0);

    Eigen::Matrix3d rz;
    rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((rotate_index(n, rz, 1e-4).values() - n.values()).abs().maxCoeff() < 1e-12);

    // a well-resolved medium round-trips under a generic rotation
    CubeGrid gf(pi, 48);
    BumpProfile wide;
    wide.sharpness = 10.0;
    wide.bumps.push_back({Vec3(0.1, -0.1, 0.05), cplx(0.2, 0.01), 2.9});
    const RefractiveIndex nw = make_test_index(wide, gf, 0.5);
    const Eigen::Matrix3d q =
        (Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()) * Eigen::AngleAxisd(0.3, Vec3::UnitX())).toRotationMatrix();
    const RefractiveIndex there = rotate_index(nw, q);
    const RefractiveIndex back = rotate_index(there, q.transpose());
    CHECK((back.values() - nw.values()).abs().maxCoeff() < 1e-8);
    CHECK(there.contrast_norm(4) == doctest::Approx(nw.contrast_norm(4)).epsilon(1e-6));

    BumpProfile sharp;
    sharp.bumps.push_back({Vec3::Zero(), 0.2, 0.5});
    CHECK_THROWS_AS(rotate_index(make_test_index(sharp, CubeGrid(pi, 8), 0.5), q), Error);
}

TEST_CASE("gridded interpolant matches the direct trigonometric sum")
{
    CubeGrid g(pi, 16);
    const RefractiveIndex n = make_test_index(smooth_profile(), g, 0.5);
    const TrigInterpolant f(n);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-pi, pi);
    const int N = g.n();
    for (int t = 0; t < 20; ++t) {
        const Vec3 x(u(rng), u(rng), u(rng));
        cplx direct = 0.0;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            const Vec3i gam = g.lattice(i);
            cplx e = 1.0;
            for (int d = 0; d < 3; ++d)
                e *= gam(d) == -N / 2 ? cplx(std::cos(gam(d) * x(d))) : std::polar(1.0, gam(d) * x(d));
            direct += n.coeffs()(i) * e;
        }
        direct /= c32;
        CHECK(std::abs(f(x) - direct) < 1e-11);
    }
    for (Eigen::Index i = 0; i < g.size(); i += 37) CHECK(std::abs(f(g.node(i)) - n.contrast()(i)) < 1e-11);
}
