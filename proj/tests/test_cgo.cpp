#include "doctest.h"

#include "mvsc/cgo.hpp"

#include <random>

using namespace mvsc;

namespace {

const double R = 3.5;
const double kappa = 1.0;

// smooth enough for spectral accuracy on the CGO cube
BumpProfile smooth_profile(double amp = 0.2)
{
    BumpProfile p;
    p.sharpness = 16.0;
    p.bumps.push_back({Vec3::Zero(), amp, 3.1});
    return p;
}

double profile_t0(const BumpProfile& p)
{
    return medium_t_min(make_test_index(p, CubeGrid(pi, 32), 0.5), R, kappa, 4.0);
}

double ball_norm(const ScalarField& f, const CubeGrid& g, double radius)
{
    double s = 0.0;
    for (auto i : ball_nodes(g, radius)) s += std::norm(f(i));
    return std::sqrt(s * g.cell_volume());
}

}  // namespace

TEST_CASE("t_min and q_bound")
{
    CHECK(t_min(2 * pi, 1.0, 1.0, 1.0, 1.0) == doctest::Approx(240.0).epsilon(1e-14));
    CHECK(t_min(2 * pi, 1.0, 1.0, 1.0, 2.0) == doctest::Approx(4 * 240.0).epsilon(1e-14));
    CHECK(t_min(2 * pi, 0.0, 1.0, 1.0, 1.0) == doctest::Approx(120.0).epsilon(1e-14));
    CHECK(q_bound(1.0, 1.0, 1.0, 1.0) == doctest::Approx(30.0).epsilon(1e-14));
    CHECK(q_bound(2.0, 1.0, 1.0, 1.0) > q_bound(1.0, 1.0, 1.0, 1.0));
    // t0 leaves room for the contraction hypothesis with R'' = 2R
    const double Rpp = 4 * pi;
    CHECK(t_min(2 * pi, 1.0, 1.0, 1.0, 1.0) >= 2 * (Rpp / pi) * q_bound(1.0, 1.0, 1.0, 1.0) * (1 - 1e-14));
    CHECK_THROWS_AS(t_min(-1.0, 1.0, 1.0, 1.0, 1.0), Error);
    CHECK_THROWS_AS(t_min(1.0, 1.0, 0.0, 1.0, 1.0), Error);
}

TEST_CASE("cgo vectors")
{
    auto v = cgo_vectors(Vec3(1, 0, 0), 240.0, 1.0);
    CHECK(std::abs(v.zeta1(0) - cplx(-0.5, 0)) < 1e-14);
    CHECK(std::abs(v.zeta1(1) - cplx(0, 240)) < 1e-12);
    CHECK(std::abs(v.zeta1(2) - std::sqrt(57600.75)) < 1e-12);

    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> gi(-4, 4);
    std::uniform_real_distribution<double> tu(10.0, 1e4), ku(0.2, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        Vec3 g(gi(rng), gi(rng), gi(rng));
        if (g.norm() < 1) g(0) = 1;
        const double t = tu(rng), k = ku(rng);
        v = cgo_vectors(g, t, k);
        const double scale = 2 * t * t + k * k;
        CHECK(std::abs(bdot(v.zeta1, v.zeta1) - k * k) <= 1e-10 * scale);
        CHECK(std::abs(bdot(v.zeta2, v.zeta2) - k * k) <= 1e-10 * scale);
        CHECK(std::abs(bdot(v.zeta1, v.eta1)) <= 1e-10 * t);
        CHECK(std::abs(bdot(v.zeta2, v.eta2)) <= 1e-10 * t);
        CHECK((v.zeta1 + v.zeta2 + g.cast<cplx>()).norm() <= 1e-10 * t);
        CHECK(v.zeta1.norm() == doctest::Approx(std::sqrt(scale)).epsilon(1e-12));
        CHECK(v.zeta2.norm() == doctest::Approx(std::sqrt(scale)).epsilon(1e-12));
        const double eta = std::sqrt(1 + g.squaredNorm() / (4 * t * t));
        CHECK(v.eta1.norm() == doctest::Approx(eta).epsilon(1e-12));
        CHECK(v.eta2.norm() == doctest::Approx(eta).epsilon(1e-12));
        CHECK(eta <= 3.0);
        const Eigen::Matrix3d q = v.frame();
        CHECK((q * q.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-13);
        CHECK(q.determinant() == doctest::Approx(1.0));
        const Vec3 im = q * v.zeta1.imag();
        CHECK(std::hypot(im(0), im(1)) < 1e-10 * t);
        CHECK(im(2) == doctest::Approx(t));
    }
    CHECK_THROWS_AS(cgo_vectors(Vec3::Zero(), 240.0, 1.0), Error);
    CHECK_THROWS_AS(cgo_vectors(Vec3(1, 0, 0), 100.0, 1.0, 240.0), Error);
    CHECK_THROWS_AS(cgo_vectors(Vec3(30, 0, 0), 10.0, 1.0), Error);
}

TEST_CASE("faddeev operator")
{
    const CubeGrid g(2 * R, 32);
    const CVec3 zeta = cgo_vectors(Vec3(0, 1, 0), 50.0, kappa).zeta1;
    // frame where Im zeta is on the z axis
    const Eigen::Matrix3cd q = frame_for(zeta).cast<cplx>();
    const CVec3 zf = q * zeta;
    const double t = zf.imag()(2);
    const double floor = pi * t / g.half_side();
    CHECK(faddeev_min_denominator(g, zf) >= floor * (1 - 1e-12));

    SUBCASE("operator bound on B(R')")
    {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> nd;
        const auto ball = ball_nodes(g, 1.5 * R);
        for (int trial = 0; trial < 20; ++trial) {
            ScalarField f = ScalarField::Zero(g.size());
            for (auto i : ball) f(i) = cplx(nd(rng), nd(rng));
            const ScalarField u = faddeev_apply(g, zf, f);
            CHECK(ball_norm(u, g, 1.5 * R) <= g.half_side() / (pi * t) * ball_norm(f, g, 1.5 * R));
        }
    }
    SUBCASE("single mode")
    {
        const Vec3 xi = g.frequency_unit() * Vec3(2, -3, 1.5);
        ScalarField f(g.size());
        for (Eigen::Index i = 0; i < g.size(); ++i) f(i) = std::exp(I * xi.dot(g.node(i)));
        const cplx den = xi.squaredNorm() + 2.0 * bdot(zf, xi.cast<cplx>());
        const ScalarField u = faddeev_apply(g, zf, f);
        CHECK((u - f / den).abs().maxCoeff() < 1e-14 / std::abs(den));
    }
    SUBCASE("inverts the conjugated Helmholtz operator")
    {
        const CubeGrid g2(2 * R, 48);
        ScalarField f(g2.size());
        for (Eigen::Index i = 0; i < g2.size(); ++i) {
            const Vec3 x = g2.node(i);
            f(i) = std::exp(-0.5 * (x - Vec3(0.3, -0.2, 0.1)).squaredNorm()) * cplx(1.0, 0.5 * x(0));
        }
        const ScalarField u = faddeev_apply(g2, zf, f);
        const VectorField gu = shifted_gradient(g2, u);
        ScalarField lap = ScalarField::Zero(g2.size());
        for (int d = 0; d < 3; ++d) lap += shifted_gradient(g2, gu.col(d)).col(d);
        ScalarField op = lap;
        for (int d = 0; d < 3; ++d) op += 2.0 * I * zf(d) * gu.col(d);
        // G inverts -(Delta + 2i zeta.grad)
        CHECK((op + f).abs().maxCoeff() < 1e-8 * f.abs().maxCoeff());
    }
    SUBCASE("frame contract")
    {
        const ScalarField zero = ScalarField::Zero(g.size());
        CHECK_THROWS_AS(faddeev_apply(g, zeta, zero), Error);
    }
}

TEST_CASE("potential matrix")
{
    const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
    const BumpProfile p = smooth_profile();
    const CgoMedium m = cgo_medium(p, 0.5, id, 2 * R, 48, kappa);
    const auto Q = q_matrix(m);
    double offdiag = 0.0;
    for (const auto& qk : Q) {
        offdiag = std::max(offdiag, (qk.topRightCorner<3, 3>() + qk.topRightCorner<3, 3>().transpose()).norm());
        offdiag = std::max(offdiag, (qk.bottomLeftCorner<3, 3>() + qk.bottomLeftCorner<3, 3>().transpose()).norm());
    }
    CHECK(offdiag < 1e-14);

    // bounded by the a-priori constant
    const auto n = make_test_index(p, CubeGrid(pi, 32), 0.5);
    CHECK(m.max_q_norm() <= 1.05 * q_bound(kappa, 0.5, embedding_constant(4.0), n.full_norm(4.0)));

    // supported where n != 1
    double outside = 0.0;
    for (size_t k = 0; k < m.nodes.size(); ++k)
        if (m.grid.node(m.nodes[k]).norm() > 3.1) outside = std::max(outside, Q[k].norm());
    CHECK(outside < 1e-8);

    // background
    const CgoMedium bg = cgo_medium(BumpProfile{}, 1.0, id, 2 * R, 24, kappa);
    CHECK(bg.max_q_norm() == 0.0);

    // locally constant medium: only the kappa^2 (1 - n0) diagonal survives
    const double n0 = 1.3;
    auto plateau = [&](const Vec3& x) -> cplx {
        const double r = x.norm();
        if (r <= 0.8) return n0 - 1.0;
        if (r >= 3.1) return 0.0;
        const double u = (r - 0.8) / 2.3;
        const double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
        return (n0 - 1.0) * b / (a + b);
    };
    const CgoMedium pm = cgo_medium(plateau, 0.5, id, 2 * R, 96, kappa);
    double dev = 0.0;
    for (size_t k = 0; k < pm.nodes.size(); ++k)
        if (pm.grid.node(pm.nodes[k]).norm() < 0.5) {
            const auto qk = pm.q_at(Eigen::Index(k));
            dev = std::max(dev, (qk - kappa * kappa * (1 - n0) * Eigen::Matrix<cplx, 6, 6>::Identity()).norm());
        }
    // spectral derivatives of the transition leak into the plateau at the percent level
    CHECK(dev < 0.01 * kappa * kappa * std::abs(1 - n0));
}

TEST_CASE("transformed right-hand side")
{
    const BumpProfile p = smooth_profile();
    const double t0 = profile_t0(p);
    const auto v = cgo_vectors(Vec3(1, 0, 0), t0, kappa);
    const Eigen::Matrix3d q = v.frame();
    const CVec3 zf = q.cast<cplx>() * v.zeta1, ef = q.cast<cplx>() * v.eta1;

    const CgoMedium bg = cgo_medium(BumpProfile{}, 1.0, q, 2 * R, 24, kappa);
    CHECK(cgo_rhs(bg, zf, ef).abs().maxCoeff() == 0.0);

    const CgoMedium m = cgo_medium(p, 0.5, q, 2 * R, 32, kappa);
    const SixField F1 = cgo_rhs(m, zf, ef);
    const SixField F2 = cgo_rhs(m, zf, 2.0 * ef);
    CHECK((F2 - 2.0 * F1).abs().maxCoeff() <= 1e-13 * F1.abs().maxCoeff());

    // bounded as t grows
    std::vector<double> ratio;
    for (double s : {1.0, 2.0, 4.0}) {
        const auto w = cgo_vectors(Vec3(1, 0, 0), s * t0, kappa);
        const CVec3 z = q.cast<cplx>() * w.zeta1, e = q.cast<cplx>() * w.eta1;
        ratio.push_back(std::sqrt(cgo_rhs(m, z, e).abs2().sum()) / e.norm());
    }
    CHECK(ratio[2] <= 1.2 * ratio[0]);
    CHECK(ratio[1] <= 1.2 * ratio[0]);
}

TEST_CASE("free CGO wave")
{
    const CVec3 zeta = cgo_vectors(Vec3(0, 0, 1), 3.0, kappa).zeta1;
    const CVec3 eta = cgo_vectors(Vec3(0, 0, 1), 3.0, kappa).eta1;
    const auto s = cgo_solve(BumpProfile{}, 1.0, kappa, zeta, eta, R, 24);
    CHECK(s.f.abs().maxCoeff() == 0.0);
    CHECK(s.V.abs().maxCoeff() == 0.0);
    const auto nodes = s.eval_nodes();
    const Eigen::Index i = nodes[nodes.size() / 3];
    const Vec3 x = s.rotation.transpose() * s.grid.node(i);
    const CVec3 expect = std::exp(I * bdot(zeta, x.cast<cplx>())) * eta;
    CHECK((s.E(i) - expect).norm() <= 1e-12 * expect.norm());
}

TEST_CASE("CGO solutions solve Maxwell and their remainders decay")
{
    const BumpProfile p = smooth_profile();
    const double t0 = profile_t0(p);
    const auto v = cgo_vectors(Vec3(1, 1, 0), t0, kappa, t0);
    const CgoMedium m64 = cgo_medium(p, 0.5, v.frame(), 2 * R, 64, kappa);
    const CgoOptions opt{1e-13, 200, t0};

    const auto s64 = cgo_solve(m64, v.zeta1, v.eta1, R, opt);
    CHECK(s64.contraction <= 0.5);
    CHECK(std::max(s64.residual_curl_e, s64.residual_curl_h) <= 1e-4);
    const CgoMedium m96 = cgo_medium(p, 0.5, v.frame(), 2 * R, 96, kappa);
    const auto s96 = cgo_solve(m96, v.zeta1, v.eta1, R, opt);
    CHECK(std::max(s96.residual_curl_e, s96.residual_curl_h) <
          std::max(s64.residual_curl_e, s64.residual_curl_h));

    std::vector<double> ts, rem;
    for (double s : {1.0, 2.0, 4.0}) {
        const auto w = cgo_vectors(Vec3(1, 1, 0), s * t0, kappa, t0);
        const auto sol = cgo_solve(m64, w.zeta1, w.eta1, R, opt);
        ts.push_back(w.t);
        rem.push_back((sol.norm_f + sol.norm_V) / w.eta1.norm());
    }
    const double slope = std::log(rem[2] / rem[0]) / std::log(ts[2] / ts[0]);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.3));
    for (int k = 0; k < 2; ++k) CHECK(rem[size_t(k + 1)] <= rem[size_t(k)] / 2 * 1.5);

    // the pair from one cgo_vectors call: the product expansion
    const auto s2 = cgo_solve(m64, v.zeta2, v.eta2, R, opt);
    const auto pc = product_expansion_check(v, s64, s2);
    CHECK(pc.corrected < 1e-8);
    // the displayed variant with f2 zeta2.V2 differs by exactly that term
    MESSAGE("product expansion: corrected " << pc.corrected << ", as displayed " << pc.displayed
                                            << ", term f2 zeta2.(V2-V1) up to " << pc.typo_term);
    CHECK(pc.displayed > pc.corrected);
}

TEST_CASE("Neumann contraction")
{
    const BumpProfile p = smooth_profile();
    const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
    const CgoMedium m = cgo_medium(p, 0.5, id, 2 * R, 32, kappa);
    const double qmax = m.max_q_norm();
    const double t = 2 * (m.grid.half_side() / pi) * qmax * 1.01;
    // zeta = (sqrt(t^2 + kappa^2), 0, i t), eta = (0, 1, 0)
    const CVec3 zeta(std::sqrt(t * t + kappa * kappa), 0.0, I * t);
    const auto s = cgo_solve(m, zeta, CVec3(0, 1, 0), R);
    CHECK(s.contraction <= 0.55);

    BumpProfile strong;
    strong.bumps.push_back({Vec3::Zero(), 3.0, 2.5});
    const CgoMedium ms = cgo_medium(strong, 0.5, id, 2 * R, 32, kappa);
    const double ts = 0.05;
    const CVec3 z2(std::sqrt(ts * ts + kappa * kappa), 0.0, I * ts);
    CHECK_THROWS_AS(cgo_solve(ms, z2, CVec3(0, 1, 0), R), ConvergenceError);
}
