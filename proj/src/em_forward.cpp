#include "mvsc/em_forward.hpp"

#include "mvsc/fft.hpp"
#include "mvsc/parallel.hpp"

#include <cmath>

namespace mvsc {

cplx helmholtz_kernel(const Vec3& x, double kappa)
{
    const double r = x.norm();
    if (r == 0.0) throw Error("helmholtz_kernel: evaluation at the singularity");
    return std::polar(1.0, kappa * r) / (4 * pi * r);
}

CMat3 dyadic_green(const Vec3& rvec, double kappa)
{
    const double r = rvec.norm();
    if (r == 0.0) throw Error("dyadic Green tensor: coincident points");
    const cplx phi = std::polar(1.0, kappa * r) / (4 * pi * r);
    const cplx a = kappa * kappa + I * kappa / r - 1.0 / (r * r);
    const cplx b = -kappa * kappa - 3.0 * I * kappa / r + 3.0 / (r * r);
    const Vec3 u = rvec / r;
    return phi * (a * CMat3::Identity() + b * (u * u.transpose()).cast<cplx>());
}

CMat3 background_green(const Vec3& x, const Vec3& y, double kappa)
{
    if (!(kappa > 0)) throw Error("background_green: kappa must be positive");
    return (I / kappa) * dyadic_green(x - y, kappa);
}

IncidentField IncidentField::dipole(const Vec3& y, const CVec3& a, double kappa)
{
    if (!(kappa > 0)) throw Error("incident field: kappa must be positive");
    IncidentField f;
    f.src_ = Dipole{y, a};
    f.kappa_ = kappa;
    return f;
}

IncidentField IncidentField::plane(const Vec3& d, const CVec3& p, double kappa)
{
    if (!(kappa > 0)) throw Error("incident field: kappa must be positive");
    if (std::abs(d.norm() - 1.0) > 1e-10) throw Error("plane wave: direction must be a unit vector");
    IncidentField f;
    f.src_ = Plane{d, p};
    f.kappa_ = kappa;
    return f;
}

CVec3 IncidentField::E(const Vec3& x) const
{
    if (auto* dp = std::get_if<Dipole>(&src_)) {
        if ((x - dp->y).norm() == 0.0) throw Error("dipole field evaluated at its source point");
        return background_green(x, dp->y, kappa_) * dp->a;
    }
    const auto& pw = std::get<Plane>(src_);
    const CVec3 d = pw.d.cast<cplx>();
    return (pw.p - bdot(d, pw.p) * d) * std::polar(1.0, kappa_ * pw.d.dot(x));
}

CVec3 IncidentField::H(const Vec3& x) const
{
    if (auto* dp = std::get_if<Dipole>(&src_)) {
        const Vec3 rv = x - dp->y;
        const double r = rv.norm();
        if (r == 0.0) throw Error("dipole field evaluated at its source point");
        const cplx phi = std::polar(1.0, kappa_ * r) / (4 * pi * r);
        const CVec3 grad = (phi * (I * kappa_ - 1.0 / r) / r) * rv.cast<cplx>();
        return cross(grad, dp->a);
    }
    const auto& pw = std::get<Plane>(src_);
    return cross(pw.d.cast<cplx>(), pw.p) * std::polar(1.0, kappa_ * pw.d.dot(x));
}

cplx VolumePotential::truncated_symbol(double xi, double kappa, double rho)
{
    // (1/xi) \int_0^rho e^{i kappa r} sin(xi r) dr
    if (xi < 1e-8) {
        if (kappa == 0.0) return rho * rho / 2;
        return (std::polar(1.0, kappa * rho) * (1.0 - I * kappa * rho) - 1.0) / (kappa * kappa);
    }
    const double den = xi * xi - kappa * kappa;
    if (std::abs(den) > 1e-3 * (kappa * kappa + 1e-300) || kappa == 0.0) {
        const cplx e = std::polar(1.0, kappa * rho);
        return (1.0 - e * (std::cos(xi * rho) - I * kappa * std::sin(xi * rho) / xi)) / den;
    }
    static const auto rule = [] {
        std::vector<double> x, w;
        gauss_legendre(24, x, w);
        return std::make_pair(x, w);
    }();
    const int panels = 16;
    cplx acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = rho * p / panels, b = rho * (p + 1) / panels;
        for (size_t q = 0; q < rule.first.size(); ++q) {
            const double r = 0.5 * (a + b) + 0.5 * (b - a) * rule.first[q];
            acc += 0.5 * (b - a) * rule.second[q] * std::polar(1.0, kappa * r) * std::sin(xi * r);
        }
    }
    return acc / xi;
}

VolumePotential::VolumePotential(const CubeGrid& source, double kappa, double target_radius)
    : source_(source), kappa_(kappa)
{
    if (std::abs(source.half_side() - pi) > 1e-12) throw Error("VolumePotential: sources live on C(pi)");
    const double h = source.spacing();
    const double rho = target_radius + pi;
    offset_ = int(std::ceil((rho - pi) / h - 1e-9));
    const int m = source.n() + 2 * offset_;
    target_ = CubeGrid(pi + offset_ * h, m);
    const double unit = target_.frequency_unit();
    xi_axis_.resize(size_t(m));
    for (int k = 0; k < m; ++k) xi_axis_[size_t(k)] = k == m / 2 ? 0.0 : unit * target_.signed_index(k);
    symbol_.resize(target_.size());
    for (Eigen::Index i = 0; i < target_.size(); ++i) {
        const Vec3i g = target_.lattice(i);
        symbol_(i) = truncated_symbol(unit * std::sqrt(double(g.squaredNorm())), kappa, rho);
    }
}

Eigen::Index VolumePotential::embed(Eigen::Index idx) const
{
    const Vec3i t = source_.triple(idx);
    return target_.index(t(0) + offset_, t(1) + offset_, t(2) + offset_);
}

VectorField VolumePotential::apply(const VectorField& J, const ScalarField* q, LsForm form) const
{
    const int m = target_.n();
    const Eigen::Index total = target_.size();
    std::array<ScalarField, 3> Jh;
    for (int c = 0; c < 3; ++c) {
        Jh[size_t(c)] = ScalarField::Zero(total);
        for (Eigen::Index i = 0; i < source_.size(); ++i) Jh[size_t(c)](embed(i)) = J(i, c);
        fft3_forward(Jh[size_t(c)].data(), m);
    }
    ScalarField qh;
    const bool use_q = q != nullptr && form == LsForm::gradient;
    if (use_q) {
        qh = ScalarField::Zero(total);
        for (Eigen::Index i = 0; i < source_.size(); ++i) qh(embed(i)) = (*q)(i);
        fft3_forward(qh.data(), m);
    }
    const double k2 = kappa_ * kappa_;
    VectorField out(total, 3);
    for (Eigen::Index i = 0; i < total; ++i) {
        const Vec3i t = target_.triple(i);
        const double xi[3] = {xi_axis_[size_t(t(0))], xi_axis_[size_t(t(1))], xi_axis_[size_t(t(2))]};
        const cplx s = symbol_(i);
        if (form == LsForm::gradient) {
            for (int c = 0; c < 3; ++c) {
                cplx v = k2 * Jh[size_t(c)](i);
                if (use_q) v += I * xi[c] * qh(i);
                out(i, c) = s * v;
            }
        } else {
            const cplx div = xi[0] * Jh[0](i) + xi[1] * Jh[1](i) + xi[2] * Jh[2](i);
            for (int c = 0; c < 3; ++c) out(i, c) = s * (k2 * Jh[size_t(c)](i) - xi[c] * div);
        }
    }
    for (int c = 0; c < 3; ++c) {
        ScalarField col = out.col(c);
        fft3_inverse(col.data(), m);
        out.col(c) = col;
    }
    return out;
}

ScatteringSolver::ScatteringSolver(const RefractiveIndex& n, double kappa, SolverOptions options)
    : n_(n), kappa_(kappa), opt_(options)
{
    if (!(kappa > 0)) throw Error("ScatteringSolver: kappa must be positive");
    const CubeGrid& grid = n.grid();
    contrast_ = n.values() - 1.0;
    gradlog_ = VectorField::Zero(grid.size(), 3);
    const bool smooth_form = opt_.form == LsForm::gradient;
    VectorField grad;
    if (smooth_form && !n.is_background()) grad = spectral_gradient(grid, contrast_);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        if (grid.node(i).norm() >= pi) continue;
        bool active = contrast_(i) != 0.0;
        if (smooth_form && grad.size() > 0) {
            for (int c = 0; c < 3; ++c) gradlog_(i, c) = grad(i, c) / n.values()(i);
            active = active || gradlog_.row(i).abs().maxCoeff() > 0;
        }
        if (active) support_.push_back(i);
    }
    pot_ = std::make_shared<VolumePotential>(grid, kappa, pi);
}

VectorField ScatteringSolver::sample_incident(const IncidentField& inc) const
{
    const CubeGrid& grid = n_.grid();
    VectorField out = VectorField::Zero(grid.size(), 3);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Vec3 x = grid.node(i);
        if (x.norm() >= pi) continue;
        out.row(i) = inc.E(x).transpose();
    }
    return out;
}

void ScatteringSolver::sources(const VectorField& E, VectorField& J, ScalarField& q) const
{
    J = E.colwise() * contrast_;
    if (opt_.form == LsForm::gradient) q = (gradlog_ * E).rowwise().sum();
}

VectorField ScatteringSolver::potential(const VectorField& E) const
{
    const CubeGrid& grid = n_.grid();
    if (n_.is_background()) return VectorField::Zero(grid.size(), 3);
    VectorField J;
    ScalarField q;
    sources(E, J, q);
    const VectorField ext = pot_->apply(J, opt_.form == LsForm::gradient ? &q : nullptr, opt_.form);
    VectorField out = VectorField::Zero(grid.size(), 3);
    for (Eigen::Index i = 0; i < grid.size(); ++i)
        if (grid.node(i).norm() < pi) out.row(i) = ext.row(pot_->embed(i));
    return out;
}

VectorField ScatteringSolver::solve_samples(const VectorField& incident, SolveReport* report) const
{
    const Eigen::Index rows = incident.rows();
    if (n_.is_background()) {
        if (report) *report = SolveReport{0, 0.0, {0.0}};
        return incident;
    }
    auto flatten = [](const VectorField& f) {
        return Eigen::VectorXcd(Eigen::Map<const Eigen::VectorXcd>(f.data(), f.size()));
    };
    auto unflatten = [rows](const Eigen::VectorXcd& v) {
        return VectorField(Eigen::Map<const VectorField>(v.data(), rows, 3));
    };
    auto A = [&](const Eigen::VectorXcd& x) {
        const VectorField E = unflatten(x);
        return Eigen::VectorXcd(x - flatten(potential(E)));
    };
    const Eigen::VectorXcd b = flatten(incident);
    GmresOptions go{opt_.rtol, opt_.restart, opt_.max_iterations};
    GmresResult res = gmres(A, b, b, go);
    if (!res.converged)
        throw ConvergenceError("Lippmann-Schwinger solve did not converge (relative residual " +
                                   std::to_string(res.residual_history.back()) + ")",
                               res.residual_history);
    if (report) {
        report->iterations = res.iterations;
        report->residual = res.residual_history.back();
        report->history = res.residual_history;
    }
    return unflatten(res.x);
}

VectorFieldGrid ScatteringSolver::solve(const IncidentField& inc, SolveReport* report) const
{
    return {n_.grid(), solve_samples(sample_incident(inc), report)};
}

VectorField ScatteringSolver::born_scattered(const IncidentField& inc) const
{
    return potential(sample_incident(inc));
}

CVec3 ScatteringSolver::scattered_at(const VectorField& E, const Vec3& x) const
{
    if (x.norm() <= pi) throw Error("evaluate_scattered: point inside B(pi)");
    const CubeGrid& grid = n_.grid();
    const double w = grid.cell_volume();
    CVec3 acc = CVec3::Zero();
    const double k2 = kappa_ * kappa_;
    for (Eigen::Index i : support_) {
        const Vec3 rv = x - grid.node(i);
        const CVec3 e = E.row(i).transpose();
        const CVec3 J = contrast_(i) * e;
        if (opt_.form == LsForm::gradient) {
            const double r = rv.norm();
            const cplx phi = std::polar(1.0, kappa_ * r) / (4 * pi * r);
            const cplx q = (gradlog_.row(i).transpose().array() * e.array()).sum();
            acc += k2 * phi * J + (phi * (I * kappa_ - 1.0 / r) / r * q) * rv.cast<cplx>();
        } else {
            acc += dyadic_green(rv, kappa_) * J;
        }
    }
    return w * acc;
}

CVec3 ScatteringSolver::far_pattern(const VectorField& E, const Vec3& xhat) const
{
    const CubeGrid& grid = n_.grid();
    const double w = grid.cell_volume();
    CVec3 sJ = CVec3::Zero();
    cplx sq = 0.0;
    for (Eigen::Index i : support_) {
        const cplx ph = std::polar(1.0, -kappa_ * xhat.dot(grid.node(i)));
        const CVec3 e = E.row(i).transpose();
        sJ += ph * contrast_(i) * e;
        if (opt_.form == LsForm::gradient) sq += ph * (gradlog_.row(i).transpose().array() * e.array()).sum();
    }
    const double k2 = kappa_ * kappa_;
    if (opt_.form == LsForm::gradient)
        return (w / (4 * pi)) * (k2 * sJ + I * kappa_ * sq * xhat.cast<cplx>());
    const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - xhat * xhat.transpose();
    return (w * k2 / (4 * pi)) * (P.cast<cplx>() * sJ);
}

VectorFieldGrid ScatteringSolver::extend_total(const VectorField& E, const IncidentField& inc,
                                               double radius) const
{
    VolumePotential pot(n_.grid(), kappa_, radius);
    VectorField J;
    ScalarField q;
    sources(E, J, q);
    VectorField out = n_.is_background() ? VectorField::Zero(pot.target_grid().size(), 3)
                                         : pot.apply(J, opt_.form == LsForm::gradient ? &q : nullptr, opt_.form);
    const CubeGrid& tg = pot.target_grid();
    for (Eigen::Index i = 0; i < tg.size(); ++i) out.row(i) += inc.E(tg.node(i)).transpose().array();
    return {tg, out};
}

VectorFieldGrid solve_scattering(const RefractiveIndex& n, const IncidentField& inc, double kappa,
                                 SolverOptions options)
{
    return ScatteringSolver(n, kappa, options).solve(inc);
}

std::vector<CVec3> evaluate_scattered(const VectorFieldGrid& E, const RefractiveIndex& n, double kappa,
                                      const std::vector<Vec3>& points, SolverOptions options)
{
    if (E.grid != n.grid()) throw Error("evaluate_scattered: field and medium grids differ");
    ScatteringSolver s(n, kappa, options);
    std::vector<CVec3> out;
    for (const auto& x : points) out.push_back(s.scattered_at(E.values, x));
    return out;
}

double refinement_check(const RefractiveIndex& n, const IncidentField& inc, double kappa, double tol,
                        SolverOptions options)
{
    const CubeGrid& g = n.grid();
    const CubeGrid fine(pi, 2 * g.n());
    ScalarField c = ScalarField::Zero(fine.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const Vec3i l = g.lattice(i);
        if (l.cwiseAbs().maxCoeff() >= g.n() / 2) continue;
        auto wrap = [&](int v) { return v < 0 ? v + fine.n() : v; };
        c(fine.index(wrap(l(0)), wrap(l(1)), wrap(l(2)))) = n.coeffs()(i);
    }
    ScalarField v = inverse_coeffs(fine, c) + 1.0;
    for (Eigen::Index i = 0; i < fine.size(); ++i)
        if (fine.node(i).norm() >= pi) v(i) = 1.0;
    const RefractiveIndex nf = RefractiveIndex::from_values(fine, v, n.lower_bound(), false);
    const VectorField a = ScatteringSolver(n, kappa, options).solve(inc).values;
    const VectorField b = ScatteringSolver(nf, kappa, options).solve(inc).values;
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (g.node(i).norm() >= pi) continue;
        const Vec3i t = g.triple(i);
        const auto diff = a.row(i) - b.row(fine.index(2 * t(0), 2 * t(1), 2 * t(2)));
        num += diff.abs2().sum();
        den += a.row(i).abs2().sum();
    }
    const double rel = std::sqrt(num / den);
    if (rel > tol)
        throw Error("contrast too large for the discretization: refinement disagreement " + std::to_string(rel));
    return rel;
}

double NearFieldData::norm() const
{
    double acc = 0.0;
    for (int r = 0; r < receivers.size(); ++r)
        for (int s = 0; s < sources.size(); ++s)
            acc += receivers.area_weight(r) * sources.area_weight(s) * at(r, s).squaredNorm();
    return std::sqrt(acc);
}

double FarFieldData::norm() const
{
    double acc = 0.0;
    for (int r = 0; r < observation.size(); ++r)
        for (int s = 0; s < incidence.size(); ++s)
            acc += observation.weights[size_t(r)] * incidence.weights[size_t(s)] * at(r, s).squaredNorm();
    return std::sqrt(acc);
}

double distance(const NearFieldData& a, const NearFieldData& b)
{
    if (a.m.size() != b.m.size()) throw Error("near-field data of different shapes");
    NearFieldData d = a;
    for (size_t i = 0; i < d.m.size(); ++i) d.m[i] -= b.m[i];
    return d.norm();
}

double distance(const FarFieldData& a, const FarFieldData& b)
{
    if (a.m.size() != b.m.size()) throw Error("far-field data of different shapes");
    FarFieldData d = a;
    for (size_t i = 0; i < d.m.size(); ++i) d.m[i] -= b.m[i];
    return d.norm();
}

NearFieldData near_field_operator(const RefractiveIndex& n, double kappa, const SphereGrid& receivers,
                                  const SphereGrid& sources, SolverOptions options)
{
    if (receivers.radius <= pi || sources.radius <= pi)
        throw Error("near_field_operator: measurement sphere radius must exceed pi");
    NearFieldData out;
    out.receivers = receivers;
    out.sources = sources;
    out.m.assign(size_t(receivers.size()) * sources.size(), CMat3::Zero());
    if (n.is_background()) return out;
    const ScatteringSolver solver(n, kappa, options);
    parallel_for(sources.size() * 3, [&](int task) {
        const int s = task / 3, j = task % 3;
        CVec3 a = CVec3::Zero();
        a(j) = 1.0;
        try {
            const VectorFieldGrid E = solver.solve(IncidentField::dipole(sources.point(s), a, kappa));
            for (int r = 0; r < receivers.size(); ++r)
                out.at(r, s).col(j) = solver.scattered_at(E.values, receivers.point(r));
        } catch (const Error& e) {
            throw Error("near field, source node " + std::to_string(s) + " moment " + std::to_string(j) +
                        ": " + e.what());
        }
    });
    return out;
}

FarFieldData far_field_operator(const RefractiveIndex& n, double kappa, const SphereGrid& observation,
                                const SphereGrid& incidence, SolverOptions options)
{
    FarFieldData out;
    out.observation = observation;
    out.incidence = incidence;
    out.m.assign(size_t(observation.size()) * incidence.size(), CMat3::Zero());
    if (n.is_background()) return out;
    const ScatteringSolver solver(n, kappa, options);
    std::vector<std::array<std::vector<CVec3>, 2>> pats(size_t(incidence.size()));
    parallel_for(incidence.size() * 2, [&](int task) {
        const int s = task / 2, k = task % 2;
        const Vec3 d = incidence.directions[size_t(s)];
        const auto [t1, t2] = tangent_basis(d);
        const Vec3 p = k == 0 ? t1 : t2;
        try {
            const VectorFieldGrid E = solver.solve(IncidentField::plane(d, p.cast<cplx>(), kappa));
            auto& dst = pats[size_t(s)][size_t(k)];
            for (int r = 0; r < observation.size(); ++r)
                dst.push_back(solver.far_pattern(E.values, observation.directions[size_t(r)]));
        } catch (const Error& e) {
            throw Error("far field, incidence node " + std::to_string(s) + ": " + e.what());
        }
    });
    for (int s = 0; s < incidence.size(); ++s) {
        const auto [t1, t2] = tangent_basis(incidence.directions[size_t(s)]);
        for (int r = 0; r < observation.size(); ++r)
            out.at(r, s) = pats[size_t(s)][0][size_t(r)] * t1.cast<cplx>().transpose() +
                           pats[size_t(s)][1][size_t(r)] * t2.cast<cplx>().transpose();
    }
    return out;
}

NearFieldData background_near_field(const SphereGrid& receivers, const SphereGrid& sources, double kappa)
{
    NearFieldData out;
    out.receivers = receivers;
    out.sources = sources;
    out.part = DataPart::total;
    out.m.resize(size_t(receivers.size()) * sources.size());
    for (int r = 0; r < receivers.size(); ++r)
        for (int s = 0; s < sources.size(); ++s)
            out.at(r, s) = background_green(receivers.point(r), sources.point(s), kappa);
    return out;
}

}  // namespace mvsc
