#include "mvsc/cgo.hpp"

#include "mvsc/fft.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace mvsc {

double t_min(double R, double kappa, double b, double Lm, double Cm)
{
    if (!(R > 0 && kappa >= 0 && b > 0 && Lm > 0 && Cm > 0)) throw Error("t_min: inputs must be positive");
    const double lc = Lm * Cm;
    if (lc < 1.0) std::cerr << "warning: t_min with L_m C_m = " << lc << " < 1\n";
    return 60.0 * (R / pi) * (1.0 + kappa * kappa) * lc * lc / (b * b);
}

double q_bound(double kappa, double b, double Lm, double Cm)
{
    const double lc = Lm * Cm;
    return 15.0 * (1.0 + kappa * kappa) * lc * lc / (b * b);
}

double medium_t_min(const RefractiveIndex& n, double R, double kappa, double m)
{
    return t_min(R, kappa, n.lower_bound(), embedding_constant(m), n.full_norm(m));
}

namespace {

// first coordinate axis with a well-conditioned projection orthogonal to u
Vec3 orthogonal_axis(const Vec3& u)
{
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Unit(k);
        Vec3 p = e - u.dot(e) * u;
        if (p.norm() >= 0.5) return p.normalized();
    }
    throw Error("orthogonal_axis: degenerate direction");
}

}  // namespace

Eigen::Matrix3d CgoVectors::frame() const
{
    Eigen::Matrix3d q;
    q.row(0) = a2.transpose();
    q.row(1) = gamma.normalized().transpose();
    q.row(2) = a1.transpose();
    return q;
}

CgoVectors cgo_vectors(const Vec3& gamma, double t, double kappa, double t0)
{
    const double g = gamma.norm();
    if (g == 0.0) throw Error("cgo_vectors: gamma = 0 is not supported");
    if (t < t0) throw Error("cgo_vectors: t below t0");
    const double disc = kappa * kappa + t * t - g * g / 4.0;
    if (disc < 0.0) throw Error("cgo_vectors: |gamma| exceeds 2 sqrt(kappa^2 + t^2)");
    CgoVectors v;
    v.gamma = gamma;
    v.t = t;
    v.kappa = kappa;
    const Vec3 gh = gamma / g;
    v.a1 = orthogonal_axis(gh);
    v.a2 = gh.cross(v.a1);
    const double r = std::sqrt(disc);
    const CVec3 half = (-0.5 * gamma).cast<cplx>();
    v.zeta1 = half + I * t * v.a1.cast<cplx>() + r * v.a2.cast<cplx>();
    v.zeta2 = half - I * t * v.a1.cast<cplx>() - r * v.a2.cast<cplx>();
    v.eta1 = gh.cast<cplx>() - I * (g / (2 * t)) * v.a1.cast<cplx>();
    v.eta2 = gh.cast<cplx>() + I * (g / (2 * t)) * v.a1.cast<cplx>();
    return v;
}

Eigen::Matrix3d frame_for(const CVec3& zeta)
{
    const Vec3 im = zeta.imag();
    if (im.norm() == 0.0) throw Error("frame_for: Im zeta = 0");
    const Vec3 r2 = im.normalized();
    const Vec3 r0 = orthogonal_axis(r2);
    Eigen::Matrix3d q;
    q.row(0) = r0.transpose();
    q.row(1) = r2.cross(r0).transpose();
    q.row(2) = r2.transpose();
    return q;
}

namespace {

void check_axis(const CVec3& zeta, int axis)
{
    const Vec3 im = zeta.imag();
    const double t = std::abs(im(axis));
    if (t == 0.0) throw Error("faddeev_apply: Im zeta vanishes on the designated axis");
    for (int k = 0; k < 3; ++k)
        if (k != axis && std::abs(im(k)) > 1e-10 * t) throw Error("faddeev_apply: Im zeta not aligned with the axis");
}

// shifted frequency per axis index
std::vector<double> shifted_frequencies(const CubeGrid& grid, bool shifted)
{
    std::vector<double> xi(size_t(grid.n()));
    for (int k = 0; k < grid.n(); ++k)
        xi[size_t(k)] = grid.frequency_unit() * (grid.signed_index(k) + (shifted ? 0.5 : 0.0));
    return xi;
}

// Precomputed multiplier and modulation for one (grid, zeta).
struct Faddeev {
    const CubeGrid& grid;
    int axis;
    ScalarField symbol;      // 1 / (xi.xi + 2 zeta.xi)
    ScalarField modulation;  // e^{i s x_axis}
    double min_den = 0.0;

    Faddeev(const CubeGrid& g, const CVec3& zeta, int ax) : grid(g), axis(ax)
    {
        check_axis(zeta, ax);
        const int n = g.n();
        std::array<std::vector<double>, 3> xi;
        for (int d = 0; d < 3; ++d) xi[size_t(d)] = shifted_frequencies(g, d == ax);
        symbol.resize(g.size());
        modulation.resize(g.size());
        const double s = g.frequency_unit() / 2.0;
        min_den = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            const Vec3i t = g.triple(i);
            const Vec3 x(xi[0][size_t(t(0))], xi[1][size_t(t(1))], xi[2][size_t(t(2))]);
            const cplx den = x.squaredNorm() + 2.0 * bdot(zeta, x.cast<cplx>());
            min_den = std::min(min_den, std::abs(den));
            symbol(i) = 1.0 / den;
            modulation(i) = std::exp(I * s * g.coord(t(ax)));
        }
        const double floor = g.frequency_unit() * std::abs(zeta.imag()(ax));
        if (min_den < floor * (1.0 - 1e-12)) throw Error("faddeev_apply: denominator below its floor");
        (void)n;
    }

    ScalarField apply(const ScalarField& f) const
    {
        ScalarField w = f * modulation.conjugate();
        fft3_forward(w.data(), grid.n());
        w *= symbol;
        fft3_inverse(w.data(), grid.n());
        return w * modulation;
    }
};

VectorField curl(const std::array<VectorField, 3>& grads)
{
    // grads[c].col(d) = d/dx_d of component c
    VectorField out(grads[0].rows(), 3);
    out.col(0) = grads[2].col(1) - grads[1].col(2);
    out.col(1) = grads[0].col(2) - grads[2].col(0);
    out.col(2) = grads[1].col(0) - grads[0].col(1);
    return out;
}

// (grad + i zeta) x (c + A), A in the shifted space, c constant
VectorField shifted_curl(const CubeGrid& grid, const CVec3& zeta, const CVec3& c, const VectorField& A)
{
    std::array<VectorField, 3> g;
    for (int k = 0; k < 3; ++k) g[size_t(k)] = shifted_gradient(grid, A.col(k));
    VectorField out = curl(g);
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const CVec3 a = c + A.row(i).transpose().matrix();
        out.row(i) += (I * cross(zeta, a)).transpose().array();
    }
    return out;
}

double ball_norm(const VectorField& v, const std::vector<Eigen::Index>& nodes, double dv)
{
    double s = 0.0;
    for (auto i : nodes) s += v.row(i).abs2().sum();
    return std::sqrt(s * dv);
}

}  // namespace

ScalarField faddeev_apply(const CubeGrid& grid, const CVec3& zeta, const ScalarField& f, int axis)
{
    return Faddeev(grid, zeta, axis).apply(f);
}

VectorField faddeev_apply(const CubeGrid& grid, const CVec3& zeta, const VectorField& f, int axis)
{
    Faddeev op(grid, zeta, axis);
    VectorField out(f.rows(), 3);
    for (int k = 0; k < 3; ++k) out.col(k) = op.apply(f.col(k));
    return out;
}

double faddeev_min_denominator(const CubeGrid& grid, const CVec3& zeta, int axis)
{
    return Faddeev(grid, zeta, axis).min_den;
}

VectorField shifted_gradient(const CubeGrid& grid, const ScalarField& u, int axis)
{
    const double s = grid.frequency_unit() / 2.0;
    ScalarField mod(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) mod(i) = std::exp(I * s * grid.coord(grid.triple(i)(axis)));
    ScalarField w = u * mod.conjugate();
    fft3_forward(w.data(), grid.n());
    VectorField out(grid.size(), 3);
    for (int d = 0; d < 3; ++d) {
        auto xi = shifted_frequencies(grid, d == axis);
        // odd derivative: drop the unpaired Nyquist entry of unshifted axes
        if (d != axis) xi[size_t(grid.n() / 2)] = 0.0;
        ScalarField g(grid.size());
        for (Eigen::Index i = 0; i < grid.size(); ++i) g(i) = I * xi[size_t(grid.triple(i)(d))] * w(i);
        fft3_inverse(g.data(), grid.n());
        out.col(d) = g * mod;
    }
    return out;
}

CgoMedium cgo_medium(const std::function<cplx(const Vec3&)>& contrast_at, double b,
                     const Eigen::Matrix3d& rotation, double half_side, int points, double kappa)
{
    if (!(half_side > pi)) throw Error("cgo_medium: the cube must contain B(pi)");
    CgoMedium m;
    m.grid = CubeGrid(half_side, points);
    m.kappa = kappa;
    m.rotation = rotation;
    const CubeGrid& g = m.grid;
    ScalarField contrast = ScalarField::Zero(g.size());
    for (auto i : ball_nodes(g, pi)) {
        contrast(i) = contrast_at(rotation.transpose() * g.node(i));
        // Q lives where n != 1; spectral leakage elsewhere is dropped
        if (contrast(i) != 0.0) m.nodes.push_back(i);
    }
    m.n = contrast + 1.0;
    const auto der = spectral_derivatives(g, contrast);
    const auto K = Eigen::Index(m.nodes.size());
    m.n_s.resize(K);
    m.s_lap.resize(K);
    m.grad.resize(K, 3);
    m.dlog.resize(K, 6);
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto i = m.nodes[size_t(k)];
        const cplx nv = m.n(i);
        if (nv.real() < b - 1e-9) throw Error("cgo_medium: Re n below its lower bound");
        const CVec3 gr = der.grad.row(i).transpose();
        m.n_s(k) = nv;
        m.grad.row(k) = gr.transpose().array();
        m.s_lap(k) = der.laplacian(i) / (2.0 * nv) - bdot(gr, gr) / (4.0 * nv * nv);
        for (int a = 0; a < 3; ++a)
            for (int c = a; c < 3; ++c) {
                const int slot = hess_slot(a, c);
                m.dlog(k, slot) = der.hess(i, slot) / nv - gr(a) * gr(c) / (nv * nv);
            }
    }
    return m;
}

CgoMedium cgo_medium(const BumpProfile& profile, double b, const Eigen::Matrix3d& rotation, double half_side,
                     int points, double kappa)
{
    return cgo_medium([&](const Vec3& x) { return profile.contrast_at(x); }, b, rotation, half_side, points,
                      kappa);
}

Eigen::Matrix<cplx, 6, 6> CgoMedium::q_at(Eigen::Index k) const
{
    Eigen::Matrix<cplx, 6, 6> q = Eigen::Matrix<cplx, 6, 6>::Zero();
    const cplx nv = n_s(k);
    const cplx diag = kappa * kappa * (1.0 - nv);
    const CMat3 gx = cross_matrix(grad.row(k).transpose());
    const cplx c = I * kappa / std::sqrt(nv);
    CMat3 d;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) d(a, b) = dlog(k, hess_slot(a, b));
    q.topLeftCorner<3, 3>() = (diag + s_lap(k)) * CMat3::Identity() - d;
    q.topRightCorner<3, 3>() = -c * gx;
    q.bottomLeftCorner<3, 3>() = c * gx;
    q.bottomRightCorner<3, 3>() = diag * CMat3::Identity();
    return q;
}

double CgoMedium::max_q_norm() const
{
    double best = 0.0;
    for (Eigen::Index k = 0; k < Eigen::Index(nodes.size()); ++k) {
        Eigen::JacobiSVD<Eigen::Matrix<cplx, 6, 6>> svd(q_at(k));
        best = std::max(best, svd.singularValues()(0));
    }
    return best;
}

std::vector<Eigen::Matrix<cplx, 6, 6>> q_matrix(const CgoMedium& medium)
{
    std::vector<Eigen::Matrix<cplx, 6, 6>> out(medium.nodes.size());
    for (size_t k = 0; k < out.size(); ++k) out[k] = medium.q_at(Eigen::Index(k));
    return out;
}

SixField apply_q(const CgoMedium& m, const SixField& y)
{
    SixField out = SixField::Zero(y.rows(), 6);
    const double k2 = m.kappa * m.kappa;
    for (size_t k = 0; k < m.nodes.size(); ++k) {
        const auto i = m.nodes[k];
        const auto kk = Eigen::Index(k);
        const CVec3 e = y.row(i).head<3>().transpose();
        const CVec3 h = y.row(i).tail<3>().transpose();
        const cplx nv = m.n_s(kk);
        const CVec3 gr = m.grad.row(kk).transpose();
        const cplx c = I * m.kappa / std::sqrt(nv);
        CVec3 de;
        for (int a = 0; a < 3; ++a) {
            de(a) = 0.0;
            for (int b = 0; b < 3; ++b) de(a) += m.dlog(kk, hess_slot(a, b)) * e(b);
        }
        const CVec3 oe = (k2 * (1.0 - nv) + m.s_lap(kk)) * e - de - c * cross(gr, h);
        const CVec3 oh = c * cross(gr, e) + k2 * (1.0 - nv) * h;
        out.row(i).head<3>() = oe.transpose().array();
        out.row(i).tail<3>() = oh.transpose().array();
    }
    return out;
}

namespace {

SixField faddeev_six(const Faddeev& op, const SixField& y)
{
    SixField out(y.rows(), 6);
    for (int k = 0; k < 6; ++k) out.col(k) = op.apply(y.col(k));
    return out;
}

SixField rhs_source(const CgoMedium& m, const CVec3& zeta, const CVec3& eta)
{
    // (-i n^{-1/2} zeta.grad n - Delta n^{1/2}) eta in the electric slots, plus Q applied
    // to (n^{1/2} eta, kappa^{-1} zeta x eta)
    const auto sz = m.grid.size();
    SixField src = SixField::Zero(sz, 6);
    SixField plane = SixField::Zero(sz, 6);
    const CVec3 h0 = cross(zeta, eta) / m.kappa;
    for (size_t k = 0; k < m.nodes.size(); ++k) {
        const auto i = m.nodes[k];
        const auto kk = Eigen::Index(k);
        const cplx sq = std::sqrt(m.n_s(kk));
        const cplx a = -I / sq * bdot(zeta, m.grad.row(kk).transpose()) - sq * m.s_lap(kk);
        src.row(i).head<3>() = (a * eta).transpose().array();
        plane.row(i).head<3>() = (sq * eta).transpose().array();
        plane.row(i).tail<3>() = h0.transpose().array();
    }
    return src + apply_q(m, plane);
}

}  // namespace

SixField cgo_rhs(const CgoMedium& medium, const CVec3& zeta, const CVec3& eta)
{
    Faddeev op(medium.grid, zeta, 2);
    return -faddeev_six(op, rhs_source(medium, zeta, eta));
}

std::vector<Eigen::Index> CgoSolution::eval_nodes() const { return ball_nodes(grid, 1.5 * R); }

CVec3 CgoSolution::E(Eigen::Index idx) const
{
    const Vec3 y = grid.node(idx);
    const CVec3 zf = rotation.cast<cplx>() * zeta;
    const CVec3 u = U.row(idx).transpose();
    return rotation.transpose().cast<cplx>() * (std::exp(I * bdot(zf, y.cast<cplx>())) * u);
}

CgoSolution cgo_solve(const CgoMedium& m, const CVec3& zeta, const CVec3& eta, double R, const CgoOptions& opt)
{
    const double kappa = m.kappa;
    const double zn = zeta.norm();
    if (std::abs(bdot(zeta, zeta) - kappa * kappa) > 1e-10 * std::max(1.0, zn * zn))
        throw Error("cgo_solve: zeta.zeta != kappa^2");
    if (std::abs(bdot(zeta, eta)) > 1e-10 * std::max(1.0, zn * eta.norm())) throw Error("cgo_solve: zeta.eta != 0");
    if (std::abs(m.grid.half_side() - 2.0 * R) > 1e-12 * R) throw Error("cgo_solve: cube half-side must be 2R");
    CgoSolution s;
    s.zeta = zeta;
    s.eta = eta;
    s.t = zeta.imag().norm();
    s.kappa = kappa;
    s.R = R;
    s.rotation = m.rotation;
    s.grid = m.grid;
    if (s.t < opt.t0) throw Error("cgo_solve: |Im zeta| below t0");
    const CVec3 zf = m.rotation.cast<cplx>() * zeta;
    const CVec3 ef = m.rotation.cast<cplx>() * eta;
    const Faddeev op(m.grid, zf, 2);
    const auto sz = m.grid.size();

    const SixField F = -faddeev_six(op, rhs_source(m, zf, ef));
    SixField Y = F;
    const double fnorm = std::sqrt(F.abs2().sum());
    double prev = 0.0;
    int rising = 0;
    for (int it = 1; fnorm > 0.0; ++it) {
        SixField next = F - faddeev_six(op, apply_q(m, Y));
        const double upd = std::sqrt((next - Y).abs2().sum());
        Y = std::move(next);
        s.history.push_back(upd);
        s.iterations = it;
        if (prev > 0.0) {
            const double ratio = upd / prev;
            s.contraction = std::max(s.contraction, ratio);
            rising = ratio >= 1.0 ? rising + 1 : 0;
        }
        prev = upd;
        if (upd <= opt.tol * std::sqrt(Y.abs2().sum())) break;
        if (rising >= 3 || it >= opt.max_iter)
            throw ConvergenceError("cgo_solve: Neumann series does not converge (contraction factor " +
                                       std::to_string(s.contraction) + ")",
                                   s.history);
    }
    s.transformed = Y;

    // f = n^{-1/2} G(i n^{-1/2} grad n . eta), V = n^{-1/2} E' - f zeta
    ScalarField src = ScalarField::Zero(sz);
    for (size_t k = 0; k < m.nodes.size(); ++k) {
        const auto kk = Eigen::Index(k);
        src(m.nodes[k]) = I / std::sqrt(m.n_s(kk)) * bdot(m.grad.row(kk).transpose(), ef);
    }
    const ScalarField rn = m.n.sqrt().inverse();
    s.f = rn * op.apply(src);
    s.V.resize(sz, 3);
    VectorField Wv(sz, 3);  // U - eta
    for (int c = 0; c < 3; ++c) {
        Wv.col(c) = rn * Y.col(c);
        s.V.col(c) = Wv.col(c) - s.f * zf(c);
    }
    s.U = Wv;
    for (int c = 0; c < 3; ++c) s.U.col(c) += ef(c);

    // H = (i kappa)^{-1} (grad + i zeta) x U
    const CVec3 h0 = cross(zf, ef) / kappa;
    VectorField curlU = shifted_curl(m.grid, zf, ef, Wv);
    s.W = curlU / (I * kappa);
    VectorField Hrest = s.W;
    for (int c = 0; c < 3; ++c) Hrest.col(c) -= h0(c);
    VectorField curlH = shifted_curl(m.grid, zf, h0, Hrest);

    const auto nodes = s.eval_nodes();
    const double dv = m.grid.cell_volume();
    VectorField Hsys(sz, 3), r1(sz, 3), r2(sz, 3), nU(sz, 3);
    for (int c = 0; c < 3; ++c) {
        Hsys.col(c) = Y.col(3 + c) + h0(c);
        r1.col(c) = curlU.col(c) - I * kappa * Hsys.col(c);
        nU.col(c) = kappa * m.n * s.U.col(c);
        r2.col(c) = curlH.col(c) + I * nU.col(c);
    }
    s.residual_curl_e = ball_norm(r1, nodes, dv) / (kappa * ball_norm(Hsys, nodes, dv));
    s.residual_curl_h = ball_norm(r2, nodes, dv) / ball_norm(nU, nodes, dv);
    double nf = 0.0;
    for (auto i : nodes) nf += std::norm(s.f(i));
    s.norm_f = std::sqrt(nf * dv);
    s.norm_V = ball_norm(s.V, nodes, dv);
    return s;
}

CgoSolution cgo_solve(const BumpProfile& n, double b, double kappa, const CVec3& zeta, const CVec3& eta, double R,
                      int points, const CgoOptions& opt)
{
    const CgoMedium m = cgo_medium(n, b, frame_for(zeta), 2.0 * R, points, kappa);
    return cgo_solve(m, zeta, eta, R, opt);
}

ProductCheck product_expansion_check(const CgoVectors& v, const CgoSolution& s1, const CgoSolution& s2)
{
    if (s1.grid != s2.grid || !s1.rotation.isApprox(s2.rotation, 1e-14))
        throw Error("product_expansion_check: solutions on different frames");
    const Eigen::Matrix3cd q = s1.rotation.cast<cplx>();
    const CVec3 z1 = q * s1.zeta, z2 = q * s2.zeta, e1 = q * s1.eta, e2 = q * s2.eta;
    const CVec3 gam = q * v.gamma.cast<cplx>();
    const double g = v.gamma.norm(), t = v.t, k2 = v.kappa * v.kappa;
    ProductCheck out;
    for (auto i : s1.eval_nodes()) {
        const Vec3 y = s1.grid.node(i);
        const CVec3 u1 = s1.U.row(i).transpose(), u2 = s2.U.row(i).transpose();
        const CVec3 V1 = s1.V.row(i).transpose(), V2 = s2.V.row(i).transpose();
        const cplx f1 = s1.f(i), f2 = s2.f(i);
        const cplx phase = std::exp(I * bdot(z1 + z2 + gam, y.cast<cplx>()));
        const cplx lhs = bdot(u1, u2) * phase;
        const cplx common = 1.0 + g * g / (4 * t * t) - g * (f1 + f2) + bdot(e1, V2) + bdot(e2, V1) +
                            f1 * f2 * (g * g / 2 - k2) + f1 * bdot(z1, V2) + bdot(V1, V2);
        const cplx corrected = common + f2 * bdot(z2, V1);
        const cplx displayed = common + f2 * bdot(z2, V2);
        const double scale = std::abs(lhs);
        out.corrected = std::max(out.corrected, std::abs(lhs - corrected) / scale);
        out.displayed = std::max(out.displayed, std::abs(lhs - displayed) / scale);
        out.typo_term = std::max(out.typo_term, std::abs(f2 * bdot(z2, V2 - V1)));
    }
    return out;
}

}  // namespace mvsc
