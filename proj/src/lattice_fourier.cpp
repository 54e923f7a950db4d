#include "mvsc/lattice_fourier.hpp"

#include "mvsc/fft.hpp"

#include <algorithm>
#include <cmath>

namespace mvsc {

CubeGrid::CubeGrid(double half_side, int n) : half_side_(half_side), n_(n)
{
    if (n < 8 || n % 2 != 0) throw Error("CubeGrid: points per axis must be even and >= 8");
    if (!(half_side > 0)) throw Error("CubeGrid: half side must be positive");
}

Vec3i CubeGrid::triple(Eigen::Index idx) const
{
    const int k = int(idx % n_);
    const int j = int((idx / n_) % n_);
    const int i = int(idx / (Eigen::Index(n_) * n_));
    return {i, j, k};
}

Vec3 CubeGrid::node(Eigen::Index idx) const
{
    const Vec3i t = triple(idx);
    return {coord(t(0)), coord(t(1)), coord(t(2))};
}

Vec3i CubeGrid::lattice(Eigen::Index idx) const
{
    const Vec3i t = triple(idx);
    return {signed_index(t(0)), signed_index(t(1)), signed_index(t(2))};
}

std::vector<Eigen::Index> ball_nodes(const CubeGrid& grid, double radius)
{
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        if (grid.node(i).norm() < radius) out.push_back(i);
    return out;
}

SobolevParams::SobolevParams(double m_, double s_) : m(m_), s(s_)
{
    if (!(m > 3.5)) throw Error("smoothness: m must exceed 7/2");
    if (!(s > m)) throw Error("smoothness: s must exceed m");
    if (std::abs(s - (2 * m + 1.5)) < 1e-12) throw Error("smoothness: s = 2m + 3/2 is excluded");
}

double SobolevParams::tau() const { return std::max(2 * m + 1.5 - s, 0.0); }

double SobolevParams::nu() const
{
    return std::min((s - m) / (m + 2.5), (s - m) / (s - m + 1));
}

namespace {

void require_media_grid(const CubeGrid& grid, const Eigen::Index size)
{
    if (std::abs(grid.half_side() - pi) > 1e-12)
        throw Error("Fourier coefficients are defined on C(pi) grids only");
    if (size != grid.size()) throw Error("sample count does not match the grid");
}

double parity(const Vec3i& g) { return ((g.sum() % 2) + 2) % 2 ? -1.0 : 1.0; }

}  // namespace

ScalarField fourier_coeffs(const CubeGrid& grid, const ScalarField& values)
{
    require_media_grid(grid, values.size());
    ScalarField c = dft(values, grid.n());
    const double n3 = double(grid.size());
    const double scale = std::pow(2 * pi, 1.5) / n3;
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= scale * parity(grid.lattice(i));
    return c;
}

ScalarField inverse_coeffs(const CubeGrid& grid, const ScalarField& coeffs)
{
    require_media_grid(grid, coeffs.size());
    ScalarField f = coeffs;
    const double n3 = double(grid.size());
    const double scale = n3 / std::pow(2 * pi, 1.5);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) *= scale * parity(grid.lattice(i));
    fft3_inverse(f.data(), grid.n());
    return f;
}

double sobolev_weight(const Vec3i& g, double m)
{
    return std::pow(1.0 + double(g.squaredNorm()), m);
}

double hm_norm(const CubeGrid& grid, const ScalarField& coeffs, double m)
{
    if (coeffs.size() != grid.size()) throw Error("hm_norm: size mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        const double a = std::norm(coeffs(i));
        if (a != 0.0) acc += sobolev_weight(grid.lattice(i), m) * a;
    }
    return std::sqrt(acc);
}

cplx hm_inner(const CubeGrid& grid, const ScalarField& a, const ScalarField& b, double m)
{
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        acc += sobolev_weight(grid.lattice(i), m) * a(i) * std::conj(b(i));
    return acc;
}

ScalarField project_low(const CubeGrid& grid, const ScalarField& coeffs, double rho)
{
    ScalarField out = coeffs;
    const double r2 = rho * rho;
    for (Eigen::Index i = 0; i < out.size(); ++i)
        if (double(grid.lattice(i).squaredNorm()) > r2) out(i) = 0.0;
    return out;
}

double embedding_constant(double m, int cutoff)
{
    if (!(m > 3.5)) throw Error("embedding_constant: m must exceed 7/2");
    const int K = cutoff;
    std::vector<double> w(size_t(3) * K * K + 1);
    for (size_t r2 = 0; r2 < w.size(); ++r2) w[r2] = std::pow(1.0 + double(r2), 2.0 - m);
    // octant sum with multiplicities; small terms first for accuracy
    double sum = 0.0;
    for (int i = K; i >= 0; --i) {
        const double mi = i ? 2.0 : 1.0;
        for (int j = K; j >= 0; --j) {
            const double mj = j ? 2.0 : 1.0;
            double row = 0.0;
            for (int k = K; k >= 1; --k) row += w[size_t(i * i + j * j + k * k)];
            row = 2.0 * row + w[size_t(i * i + j * j)];
            sum += mi * mj * row;
        }
    }
    // Lattice points outside the cube of side K own unit cells outside the
    // ball of radius K + 1/2; on a cell, (1+|g|^2)^{2-m} <= (|x| - sqrt3/2)^{4-2m}.
    const double c = std::sqrt(3.0) / 2.0;
    const double a = K + 0.5 - c;
    const double p = 2.0 * m - 4.0;
    const double tail = 4 * pi * (std::pow(a, 3 - p) / (p - 3) + 2 * c * std::pow(a, 2 - p) / (p - 2) +
                                  c * c * std::pow(a, 1 - p) / (p - 1));
    return std::pow(2 * pi, -1.5) * std::sqrt(sum + tail);
}

int hess_slot(int i, int j)
{
    if (i == j) return i;
    const int lo = std::min(i, j), hi = std::max(i, j);
    if (lo == 0 && hi == 1) return 3;
    if (lo == 0 && hi == 2) return 4;
    return 5;
}

namespace {

// xi components per axis index with the Nyquist entry zeroed
std::vector<double> axis_frequencies(const CubeGrid& grid)
{
    std::vector<double> xi(size_t(grid.n()));
    for (int k = 0; k < grid.n(); ++k)
        xi[size_t(k)] = (k == grid.n() / 2) ? 0.0 : grid.frequency_unit() * grid.signed_index(k);
    return xi;
}

}  // namespace

VectorField spectral_gradient(const CubeGrid& grid, const ScalarField& f)
{
    const int n = grid.n();
    const ScalarField F = dft(f, n);
    const auto xi = axis_frequencies(grid);
    VectorField g(grid.size(), 3);
    for (int d = 0; d < 3; ++d) {
        ScalarField G(grid.size());
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const Vec3i t = grid.triple(i);
            G(i) = I * xi[size_t(t(d))] * F(i);
        }
        fft3_inverse(G.data(), n);
        g.col(d) = G;
    }
    return g;
}

SpectralDerivatives spectral_derivatives(const CubeGrid& grid, const ScalarField& f)
{
    const int n = grid.n();
    const ScalarField F = dft(f, n);
    const auto xi = axis_frequencies(grid);
    SpectralDerivatives out;
    out.value = f;
    out.grad.resize(grid.size(), 3);
    out.hess.resize(grid.size(), 6);
    ScalarField G(grid.size());
    for (int d = 0; d < 3; ++d) {
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            G(i) = I * xi[size_t(grid.triple(i)(d))] * F(i);
        fft3_inverse(G.data(), n);
        out.grad.col(d) = G;
    }
    const int pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
    for (int s = 0; s < 6; ++s) {
        const int a = pairs[s][0], b = pairs[s][1];
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const Vec3i t = grid.triple(i);
            G(i) = -xi[size_t(t(a))] * xi[size_t(t(b))] * F(i);
        }
        fft3_inverse(G.data(), n);
        out.hess.col(s) = G;
    }
    out.laplacian = out.hess.col(0) + out.hess.col(1) + out.hess.col(2);
    return out;
}

RefractiveIndex RefractiveIndex::from_values(const CubeGrid& grid, ScalarField values, double b,
                                             bool check)
{
    if (values.size() != grid.size()) throw Error("RefractiveIndex: sample count mismatch");
    if (!(b > 0)) throw Error("RefractiveIndex: lower bound b must be positive");
    RefractiveIndex n;
    n.grid_ = grid;
    n.b_ = b;
    n.coeffs_ = fourier_coeffs(grid, values - 1.0);
    n.values_ = std::move(values);
    if (check) {
        const std::string why = n.admissibility();
        if (!why.empty()) throw Error("RefractiveIndex: " + why);
    }
    return n;
}

RefractiveIndex RefractiveIndex::background(const CubeGrid& grid, double b)
{
    return from_values(grid, ScalarField::Ones(grid.size()), b);
}

std::string RefractiveIndex::admissibility() const
{
    const double tol = 1e-12;
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        const cplx v = values_(i);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return "non-finite sample";
        if (v.real() < b_ - tol) return "Re n below the lower bound b";
        if (v.imag() < -tol) return "negative Im n";
        if (grid_.node(i).norm() >= pi && std::abs(v - 1.0) > tol)
            return "n differs from 1 outside B(pi)";
    }
    return {};
}

bool RefractiveIndex::is_background() const { return (values_ - 1.0).abs().maxCoeff() == 0.0; }

double RefractiveIndex::full_norm(double m) const
{
    ScalarField c = coeffs_;
    c(0) += std::pow(2 * pi, 1.5);
    return hm_norm(grid_, c, m);
}

void RefractiveIndex::set_smoothness(const SobolevParams& p)
{
    smooth_ = p;
    c_s_ = hm_norm(grid_, coeffs_, p.s);
}

SpectralDerivatives RefractiveIndex::derivatives() const
{
    SpectralDerivatives d = spectral_derivatives(grid_, values_ - 1.0);
    d.value = values_;
    return d;
}

double bump(double r, double sharpness)
{
    if (r >= 1.0) return 0.0;
    return std::exp(sharpness * (1.0 - 1.0 / (1.0 - r * r)));
}

cplx BumpProfile::contrast_at(const Vec3& x) const
{
    cplx v = 0.0;
    for (const auto& b : bumps) v += b.amplitude * bump((x - b.center).norm() / b.width, sharpness);
    return v;
}

RefractiveIndex make_test_index(const BumpProfile& profile, const CubeGrid& grid, double b)
{
    for (const auto& bp : profile.bumps) {
        if (!(bp.width > 0)) throw Error("make_test_index: bump width must be positive");
        if (bp.center.norm() + bp.width > pi + 1e-12)
            throw Error("make_test_index: bump support leaves B(pi)");
    }
    ScalarField v(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) v(i) = 1.0 + profile.contrast_at(grid.node(i));
    RefractiveIndex n = RefractiveIndex::from_values(grid, std::move(v), b, false);
    const std::string why = n.admissibility();
    if (!why.empty()) throw Error("make_test_index: " + why);
    return n;
}

RefractiveIndex make_ball_index(double radius, cplx n0, const CubeGrid& grid, double b, int subsamples)
{
    if (!(radius > 0) || radius >= pi) throw Error("make_ball_index: radius must lie in (0, pi)");
    const double h = grid.spacing();
    const double reach = std::sqrt(3.0) * h / 2;
    ScalarField v(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Vec3 x = grid.node(i);
        const double r = x.norm();
        double frac;
        if (r <= radius - reach) {
            frac = 1.0;
        } else if (r >= radius + reach) {
            frac = 0.0;
        } else {
            int inside = 0;
            for (int a = 0; a < subsamples; ++a)
                for (int c = 0; c < subsamples; ++c)
                    for (int d = 0; d < subsamples; ++d) {
                        const Vec3 off((a + 0.5) / subsamples - 0.5, (c + 0.5) / subsamples - 0.5,
                                       (d + 0.5) / subsamples - 0.5);
                        if ((x + h * off).norm() < radius) ++inside;
                    }
            frac = double(inside) / std::pow(subsamples, 3);
        }
        v(i) = 1.0 + (n0 - 1.0) * frac;
    }
    return RefractiveIndex::from_values(grid, std::move(v), b);
}

TrigInterpolant::TrigInterpolant(const RefractiveIndex& n)
{
    const CubeGrid& g = n.grid();
    const int N = g.n();
    m_ = 2 * N;
    spread_ = 12;
    tau_ = pi * spread_ / (double(N) * N * 2.0 * 1.5);
    const auto& c = n.coeffs();
    double total = 0.0, edge = 0.0;
    u_ = ScalarField::Zero(Eigen::Index(m_) * m_ * m_);
    const double gauss_norm = std::sqrt(4 * pi * tau_);
    auto wrap = [&](int v) { return v < 0 ? v + m_ : v; };
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const Vec3i gam = g.lattice(i);
        const double a = std::norm(c(i));
        total += a;
        if (gam.cwiseAbs().maxCoeff() >= N / 2 - 1) edge += a;
        if (c(i) == 0.0) continue;
        // a Nyquist index is split evenly between +N/2 and -N/2 (cosine)
        std::vector<std::pair<Vec3i, double>> images{{gam, 1.0}};
        for (int d = 0; d < 3; ++d) {
            if (gam(d) != -N / 2) continue;
            const size_t cnt = images.size();
            for (size_t q = 0; q < cnt; ++q) {
                images[q].second *= 0.5;
                Vec3i other = images[q].first;
                other(d) = N / 2;
                images.push_back({other, images[q].second});
            }
        }
        for (const auto& [v, w] : images) {
            double deconv = 1.0;
            for (int d = 0; d < 3; ++d) deconv *= gauss_norm * std::exp(-double(v(d)) * v(d) * tau_);
            const double sign = ((v.sum() % 2) + 2) % 2 ? -1.0 : 1.0;  // nodes start at -pi
            u_((Eigen::Index(wrap(v(0))) * m_ + wrap(v(1))) * m_ + wrap(v(2))) +=
                w * sign * c(i) * std::pow(2 * pi, -1.5) / deconv;
        }
    }
    fft3_inverse(u_.data(), m_);
    u_ *= double(m_) * m_ * m_;
    edge_energy_ = total > 0 ? std::sqrt(edge / total) : 0.0;
}

cplx TrigInterpolant::operator()(const Vec3& x) const
{
    const double h = 2 * pi / m_;
    const int w = 2 * spread_;
    int base[3];
    std::vector<double> wt(size_t(3 * w));
    for (int d = 0; d < 3; ++d) {
        const double s = (x(d) + pi) / h;
        base[d] = int(std::floor(s)) - spread_ + 1;
        for (int q = 0; q < w; ++q) {
            const double dist = (s - (base[d] + q)) * h;
            wt[size_t(d * w + q)] = std::exp(-dist * dist / (4 * tau_));
        }
    }
    cplx acc = 0.0;
    for (int a = 0; a < w; ++a) {
        const Eigen::Index ia = ((base[0] + a) % m_ + m_) % m_;
        for (int b = 0; b < w; ++b) {
            const Eigen::Index ib = ((base[1] + b) % m_ + m_) % m_;
            const double wab = wt[size_t(a)] * wt[size_t(w + b)];
            const cplx* row = u_.data() + (ia * m_ + ib) * m_;
            cplx inner = 0.0;
            for (int c = 0; c < w; ++c) inner += wt[size_t(2 * w + c)] * row[((base[2] + c) % m_ + m_) % m_];
            acc += wab * inner;
        }
    }
    return acc * (h * h * h);
}

RefractiveIndex rotate_index(const RefractiveIndex& n, const Eigen::Matrix3d& rotation, double alias_tol)
{
    if ((rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).norm() > 1e-10)
        throw Error("rotate_index: rotation is not orthogonal");
    if ((rotation - Eigen::Matrix3d::Identity()).norm() == 0.0) return n;
    TrigInterpolant interp(n);
    if (interp.edge_energy() > alias_tol)
        throw Error("rotate_index: medium is not resolved (aliasing tail " +
                    std::to_string(interp.edge_energy()) + ")");
    const CubeGrid& grid = n.grid();
    ScalarField v = ScalarField::Ones(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Vec3 y = grid.node(i);
        if (y.norm() >= pi) continue;
        v(i) += interp(rotation.transpose() * y);
    }
    RefractiveIndex out = RefractiveIndex::from_values(grid, std::move(v), n.lower_bound(), false);
    if (n.smoothness()) out.set_smoothness(*n.smoothness());
    return out;
}

}  // namespace mvsc
