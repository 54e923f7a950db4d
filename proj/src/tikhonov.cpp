#include "mvsc/tikhonov.hpp"

#include "mvsc/gmres.hpp"
#include "mvsc/parallel.hpp"

#include <ceres/ceres.h>

#include <cmath>
#include <random>

namespace mvsc {

double DataSet::norm() const
{
    double acc = 0.0;
    for (size_t i = 0; i < m.size(); ++i) acc += weight[i] * m[i].squaredNorm();
    return std::sqrt(acc);
}

DataSet DataSet::operator-(const DataSet& o) const
{
    if (m.size() != o.m.size()) throw Error("data sets of different shapes");
    DataSet d = *this;
    for (size_t i = 0; i < m.size(); ++i) d.m[i] -= o.m[i];
    return d;
}

double distance(const DataSet& a, const DataSet& b) { return (a - b).norm(); }

DataSet to_dataset(const NearFieldData& d)
{
    DataSet out;
    out.rows = d.receivers.size();
    out.cols = d.sources.size();
    out.m = d.m;
    for (int r = 0; r < out.rows; ++r)
        for (int s = 0; s < out.cols; ++s) out.weight.push_back(d.receivers.area_weight(r) * d.sources.area_weight(s));
    return out;
}

DataSet to_dataset(const FarFieldData& d)
{
    DataSet out;
    out.rows = d.observation.size();
    out.cols = d.incidence.size();
    out.m = d.m;
    for (int r = 0; r < out.rows; ++r)
        for (int s = 0; s < out.cols; ++s)
            out.weight.push_back(d.observation.weights[size_t(r)] * d.incidence.weights[size_t(s)]);
    return out;
}

namespace {

std::vector<CMat3> white_noise(size_t count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<CMat3> out(count);
    for (auto& b : out)
        for (int k = 0; k < 9; ++k) b(k) = cplx(nd(rng), nd(rng));
    return out;
}

// scales the noise blocks to weighted norm delta and adds them
template <class Data>
Data add_scaled(const Data& data, std::vector<CMat3> noise, double delta)
{
    if (!(delta >= 0)) throw Error("add_noise: delta must be non-negative");
    Data out = data;
    if (delta == 0.0) return out;
    Data tmp = data;
    tmp.m = noise;
    const double nn = tmp.norm();
    for (size_t i = 0; i < out.m.size(); ++i) out.m[i] += (delta / nn) * noise[i];
    return out;
}

}  // namespace

NearFieldData add_noise(const NearFieldData& data, double delta, std::uint64_t seed)
{
    return add_scaled(data, white_noise(data.m.size(), seed), delta);
}

FarFieldData add_noise(const FarFieldData& data, double delta, std::uint64_t seed)
{
    auto noise = white_noise(data.m.size(), seed);
    for (int r = 0; r < data.observation.size(); ++r) {
        const Vec3 x = data.observation.directions[size_t(r)];
        const Eigen::Matrix3cd px = (Eigen::Matrix3d::Identity() - x * x.transpose()).cast<cplx>();
        for (int s = 0; s < data.incidence.size(); ++s) {
            const Vec3 d = data.incidence.directions[size_t(s)];
            const Eigen::Matrix3cd pd = (Eigen::Matrix3d::Identity() - d * d.transpose()).cast<cplx>();
            auto& b = noise[size_t(r) * data.incidence.size() + s];
            b = px * b * pd;
        }
    }
    return add_scaled(data, std::move(noise), delta);
}

// ---------------------------------------------------------------------------

ForwardModel::ForwardModel(OperatorKind kind, double kappa, const CubeGrid& grid, const SphereGrid& receivers,
                           const SphereGrid& sources, double rtol)
    : kind_(kind), kappa_(kappa), rtol_(rtol), grid_(grid), rcv_(receivers), src_(sources)
{
    if (!(kappa > 0)) throw Error("ForwardModel: kappa must be positive");
    if (kind == OperatorKind::near && (receivers.radius <= pi || sources.radius <= pi))
        throw Error("ForwardModel: measurement sphere radius must exceed pi");
    pot_ = std::make_shared<VolumePotential>(grid, kappa, pi);
    ball_ = ball_nodes(grid, pi);
    const Eigen::Index nb = Eigen::Index(ball_.size());

    for (int s = 0; s < sources.size(); ++s) {
        std::vector<std::pair<CVec3, IncidentField>> cols;
        if (kind == OperatorKind::near) {
            for (int j = 0; j < 3; ++j) {
                CVec3 a = CVec3::Zero();
                a(j) = 1.0;
                cols.emplace_back(a, IncidentField::dipole(sources.point(s), a, kappa));
            }
        } else {
            const Vec3 d = sources.directions[size_t(s)];
            const auto [t1, t2] = tangent_basis(d);
            for (const Vec3& t : {t1, t2}) cols.emplace_back(t.cast<cplx>(), IncidentField::plane(d, t.cast<cplx>(), kappa));
        }
        for (auto& [a, inc] : cols) {
            VectorField e(nb, 3);
            for (Eigen::Index k = 0; k < nb; ++k) e.row(k) = inc.E(grid.node(ball_[size_t(k)])).transpose();
            col_block_.push_back(s);
            col_moment_.push_back(a);
            incident_.push_back(std::move(e));
        }
    }

    const double w = grid.cell_volume();
    recv_.resize(size_t(receivers.size()));
    for (int r = 0; r < receivers.size(); ++r) {
        auto& row = recv_[size_t(r)];
        row.resize(ball_.size());
        if (kind == OperatorKind::near) {
            const Vec3 x = receivers.point(r);
            for (size_t k = 0; k < ball_.size(); ++k) row[k] = w * dyadic_green(x - grid.node(ball_[k]), kappa);
        } else {
            const Vec3 xh = receivers.directions[size_t(r)];
            const Eigen::Matrix3cd P = (Eigen::Matrix3d::Identity() - xh * xh.transpose()).cast<cplx>();
            for (size_t k = 0; k < ball_.size(); ++k)
                row[k] = (w * kappa * kappa / (4 * pi)) * std::polar(1.0, -kappa * xh.dot(grid.node(ball_[k]))) * P;
        }
    }
}

double ForwardModel::block_weight(int r, int s) const
{
    if (kind_ == OperatorKind::near) return rcv_.area_weight(r) * src_.area_weight(s);
    return rcv_.weights[size_t(r)] * src_.weights[size_t(s)];
}

DataSet ForwardModel::zero_data() const
{
    DataSet d;
    d.rows = rcv_.size();
    d.cols = src_.size();
    d.m.assign(size_t(d.rows) * d.cols, CMat3::Zero());
    for (int r = 0; r < d.rows; ++r)
        for (int s = 0; s < d.cols; ++s) d.weight.push_back(block_weight(r, s));
    return d;
}

VectorField ForwardModel::potential(const ScalarField& c, const VectorField& E) const
{
    VectorField J = VectorField::Zero(grid_.size(), 3);
    for (size_t k = 0; k < ball_.size(); ++k) J.row(ball_[k]) = c(ball_[k]) * E.row(Eigen::Index(k));
    const VectorField ext = pot_->apply(J, nullptr, LsForm::grad_div);
    VectorField out(E.rows(), 3);
    for (size_t k = 0; k < ball_.size(); ++k) out.row(Eigen::Index(k)) = ext.row(pot_->embed(ball_[k]));
    return out;
}

VectorField ForwardModel::lsolve(const ScalarField& c, const VectorField& rhs) const
{
    const Eigen::Index rows = rhs.rows();
    auto flat = [](const VectorField& f) { return Eigen::VectorXcd(Eigen::Map<const Eigen::VectorXcd>(f.data(), f.size())); };
    auto unflat = [rows](const Eigen::VectorXcd& v) { return VectorField(Eigen::Map<const VectorField>(v.data(), rows, 3)); };
    auto A = [&](const Eigen::VectorXcd& x) { return Eigen::VectorXcd(x - flat(potential(c, unflat(x)))); };
    const Eigen::VectorXcd b = flat(rhs);
    const GmresResult res = gmres(A, b, b, GmresOptions{rtol_, 50, 2000});
    if (!res.converged)
        throw ConvergenceError("forward model: volume equation did not converge", res.residual_history);
    ++solves_;
    return unflat(res.x);
}

ForwardModel::State ForwardModel::solve(const ScalarField& contrast) const
{
    if (contrast.size() != grid_.size()) throw Error("ForwardModel: contrast size mismatch");
    State s;
    s.contrast = contrast;
    s.fields.resize(incident_.size());
    parallel_for(int(incident_.size()), [&](int k) { s.fields[size_t(k)] = lsolve(contrast, incident_[size_t(k)]); });
    return s;
}

DataSet ForwardModel::assemble(const std::vector<VectorField>& sources) const
{
    DataSet d = zero_data();
    for (size_t col = 0; col < sources.size(); ++col) {
        const int s = col_block_[col];
        const VectorField& J = sources[col];
        for (int r = 0; r < rcv_.size(); ++r) {
            CVec3 acc = CVec3::Zero();
            const auto& row = recv_[size_t(r)];
            for (size_t k = 0; k < ball_.size(); ++k) acc += row[k] * J.row(Eigen::Index(k)).transpose().matrix();
            d.at(r, s) += acc * col_moment_[col].transpose();
        }
    }
    return d;
}

namespace {

ScalarField on_ball(const ScalarField& f, const std::vector<Eigen::Index>& ball)
{
    ScalarField out(Eigen::Index(ball.size()));
    for (size_t k = 0; k < ball.size(); ++k) out(Eigen::Index(k)) = f(ball[k]);
    return out;
}

}  // namespace

DataSet ForwardModel::data(const State& s) const
{
    const ScalarField cb = on_ball(s.contrast, ball_);
    std::vector<VectorField> J(s.fields.size());
    for (size_t k = 0; k < J.size(); ++k) J[k] = s.fields[k].colwise() * cb;
    return assemble(J);
}

DataSet ForwardModel::frechet(const State& s, const ScalarField& h) const
{
    const ScalarField cb = on_ball(s.contrast, ball_), hb = on_ball(h, ball_);
    std::vector<VectorField> J(s.fields.size());
    parallel_for(int(J.size()), [&](int k) {
        const VectorField& E = s.fields[size_t(k)];
        const VectorField dE = lsolve(s.contrast, potential(h, E));
        J[size_t(k)] = E.colwise() * hb + dE.colwise() * cb;
    });
    return assemble(J);
}

ScalarField ForwardModel::adjoint(const State& s, const DataSet& res) const
{
    const Eigen::Index nb = Eigen::Index(ball_.size());
    std::vector<ScalarField> parts(s.fields.size());
    parallel_for(int(s.fields.size()), [&](int col) {
        const int blk = col_block_[size_t(col)];
        VectorField B = VectorField::Zero(nb, 3);
        for (int r = 0; r < rcv_.size(); ++r) {
            const CVec3 rho = (res.at(r, blk) * col_moment_[size_t(col)]).conjugate() * block_weight(r, blk);
            const auto& row = recv_[size_t(r)];
            for (Eigen::Index k = 0; k < nb; ++k) B.row(k) += (row[size_t(k)] * rho).transpose().array();
        }
        const VectorField Y = lsolve(s.contrast, B);
        parts[size_t(col)] = (Y * s.fields[size_t(col)]).rowwise().sum();
    });
    ScalarField G = ScalarField::Zero(grid_.size());
    for (const auto& p : parts)
        for (Eigen::Index k = 0; k < nb; ++k) G(ball_[size_t(k)]) += p(k);
    return G;
}

// ---------------------------------------------------------------------------

CoefficientMap::CoefficientMap(const CubeGrid& grid, double gamma_max, double m) : grid_(grid)
{
    if (!(gamma_max >= 0) || gamma_max >= grid.n() / 2) throw Error("CoefficientMap: gamma_max beyond the grid band");
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Vec3i g = grid.lattice(i);
        if (g.squaredNorm() <= gamma_max * gamma_max) {
            index_.push_back(i);
            scale_.push_back(std::sqrt(sobolev_weight(g, m)));
        }
    }
}

ScalarField CoefficientMap::contrast(const Eigen::VectorXd& x) const
{
    if (x.size() != 2 * size()) throw Error("CoefficientMap: variable count mismatch");
    ScalarField c = ScalarField::Zero(grid_.size());
    for (int k = 0; k < size(); ++k) c(index_[size_t(k)]) = cplx(x(2 * k), x(2 * k + 1)) / scale_[size_t(k)];
    return inverse_coeffs(grid_, c);
}

Eigen::VectorXd CoefficientMap::variables(const ScalarField& contrast) const
{
    const ScalarField c = fourier_coeffs(grid_, contrast);
    Eigen::VectorXd x(2 * size());
    for (int k = 0; k < size(); ++k) {
        const cplx z = c(index_[size_t(k)]) * scale_[size_t(k)];
        x(2 * k) = z.real();
        x(2 * k + 1) = z.imag();
    }
    return x;
}

Eigen::VectorXd CoefficientMap::pullback(const ScalarField& G) const
{
    // Re sum_i h_i G_i with h = inverse_coeffs(c): q_gamma = (2pi)^{-3/2} sum_i G_i e^{i gamma x_i}
    const ScalarField q = fourier_coeffs(grid_, G.conjugate()).conjugate() / grid_.cell_volume();
    Eigen::VectorXd g(2 * size());
    for (int k = 0; k < size(); ++k) {
        const cplx v = q(index_[size_t(k)]) / scale_[size_t(k)];
        g(2 * k) = v.real();
        g(2 * k + 1) = -v.imag();
    }
    return g;
}

// ---------------------------------------------------------------------------

double tikhonov_functional(const ForwardModel& F, const CoefficientMap& map, const DataSet& y, double alpha,
                           const Eigen::VectorXd& x, Eigen::VectorXd* grad, double* misfit)
{
    const ForwardModel::State st = F.solve(map.contrast(x));
    const DataSet r = F.data(st) - y;
    const double mis = r.norm();
    if (misfit) *misfit = mis;
    if (grad) *grad = (2.0 / alpha) * map.pullback(F.adjoint(st, r)) + x;
    return mis * mis / alpha + 0.5 * x.squaredNorm();
}

ForwardModel make_forward_model(const InverseProblem& p)
{
    return ForwardModel(p.kind, p.kappa, p.grid, p.receivers, p.sources, p.rtol);
}

namespace {

class TikhonovCost : public ceres::FirstOrderFunction {
public:
    TikhonovCost(const ForwardModel& F, const CoefficientMap& map, const DataSet& y, double alpha, int* evals)
        : F_(F), map_(map), y_(y), alpha_(alpha), evals_(evals) {}

    bool Evaluate(const double* p, double* cost, double* gradient) const override
    {
        const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(p, NumParameters());
        ++*evals_;
        try {
            Eigen::VectorXd g;
            *cost = tikhonov_functional(F_, map_, y_, alpha_, x, gradient ? &g : nullptr);
            if (gradient) Eigen::Map<Eigen::VectorXd>(gradient, NumParameters()) = g;
        } catch (const ConvergenceError&) {
            return false;
        }
        return std::isfinite(*cost);
    }
    int NumParameters() const override { return 2 * map_.size(); }

private:
    const ForwardModel& F_;
    const CoefficientMap& map_;
    const DataSet& y_;
    double alpha_;
    int* evals_;
};

class CostRecorder : public ceres::IterationCallback {
public:
    explicit CostRecorder(std::vector<double>& h) : h_(h) {}
    ceres::CallbackReturnType operator()(const ceres::IterationSummary& s) override
    {
        h_.push_back(s.cost);
        return ceres::SOLVER_CONTINUE;
    }

private:
    std::vector<double>& h_;
};

std::string check_domain(const RefractiveIndex& n, double b)
{
    const CubeGrid& g = n.grid();
    double min_re = 1e300, min_im = 1e300;
    for (auto i : ball_nodes(g, pi)) {
        min_re = std::min(min_re, n.values()(i).real());
        min_im = std::min(min_im, n.values()(i).imag());
    }
    std::string out;
    if (min_re < b) out += "Re n = " + std::to_string(min_re) + " below b; ";
    if (min_im < -1e-12) out += "Im n = " + std::to_string(min_im) + " negative; ";
    return out;
}

}  // namespace

TikhonovResult tikhonov_reconstruct(const ForwardModel& F, const InverseProblem& p, double alpha,
                                    const RefractiveIndex& init, const TikhonovOptions& opt)
{
    if (!(alpha > 0)) throw Error("tikhonov_reconstruct: alpha must be positive");
    if (init.grid() != p.grid || F.grid() != p.grid) throw Error("tikhonov_reconstruct: grid mismatch");
    const CoefficientMap map(p.grid, p.gamma_max, p.m);
    std::vector<double> x0v;
    Eigen::VectorXd x = map.variables(init.contrast());

    TikhonovResult out;
    int evals = 0;
    Eigen::VectorXd g0;
    const double f0 = tikhonov_functional(F, map, p.data, alpha, x, &g0);
    ++evals;

    ceres::GradientProblem problem(new TikhonovCost(F, map, p.data, alpha, &evals));
    ceres::GradientProblemSolver::Options o;
    o.line_search_direction_type = ceres::LBFGS;
    o.max_num_iterations = opt.max_iterations;
    o.gradient_tolerance = opt.gradient_tol * std::max(g0.lpNorm<Eigen::Infinity>(), 1e-300);
    o.function_tolerance = opt.function_tol;
    o.parameter_tolerance = 1e-14;
    o.logging_type = ceres::SILENT;
    CostRecorder rec(out.history);
    o.callbacks.push_back(&rec);
    ceres::GradientProblemSolver::Summary summary;
    if (g0.lpNorm<Eigen::Infinity>() > 0) ceres::Solve(o, problem, x.data(), &summary);

    double misfit = 0.0;
    out.functional = tikhonov_functional(F, map, p.data, alpha, x, nullptr, &misfit);
    out.misfit = misfit;
    out.penalty = 0.5 * x.squaredNorm();
    out.evaluations = evals + 1;
    out.iterations = int(summary.iterations.size() > 0 ? summary.iterations.size() - 1 : 0);
    out.converged = g0.lpNorm<Eigen::Infinity>() == 0 || summary.termination_type == ceres::CONVERGENCE;
    out.message = g0.lpNorm<Eigen::Infinity>() == 0 ? "zero gradient at the initial point" : summary.message;
    if (out.history.empty()) out.history.push_back(f0);
    for (size_t k = 1; k < out.history.size(); ++k)
        if (out.history[k] > out.history[k - 1] * (1 + 1e-12)) out.monotone = false;
    if (out.functional > f0 * (1 + 1e-12)) out.monotone = false;

    ScalarField v = map.contrast(x) + 1.0;
    out.n = RefractiveIndex::from_values(p.grid, v, p.b, false);
    out.admissibility = check_domain(out.n, p.b);
    return out;
}

TikhonovResult tikhonov_reconstruct(const InverseProblem& p, double alpha, const RefractiveIndex& init,
                                    const TikhonovOptions& opt)
{
    const ForwardModel F = make_forward_model(p);
    return tikhonov_reconstruct(F, p, alpha, init, opt);
}

double psi_derivative(double t, double nu)
{
    const double L = std::log(3.0 + 1.0 / t);
    return 2.0 * nu * std::pow(L, -2.0 * nu - 1.0) / ((3.0 + 1.0 / t) * t * t);
}

double alpha_rule(double delta, double A, double nu)
{
    if (!(delta > 0 && A > 0 && nu > 0 && nu < 1)) throw Error("alpha_rule: need delta > 0, A > 0, nu in (0, 1)");
    return 1.0 / (2.0 * A * psi_derivative(4.0 * delta * delta, nu));
}

RateStudy rate_study(const RefractiveIndex& n_dagger, const std::vector<double>& deltas, const InverseProblem& base,
                     const RateOptions& opt)
{
    if (deltas.size() < 2) throw Error("rate_study: need at least two noise levels");
    for (size_t k = 1; k < deltas.size(); ++k)
        if (!(deltas[k] < deltas[k - 1])) throw Error("rate_study: delta list must be strictly decreasing");
    if (deltas.front() < 1e3 * deltas.back()) throw Error("rate_study: delta list must span at least three decades");
    if (n_dagger.grid() != base.grid) throw Error("rate_study: grid mismatch");

    RateStudy st;
    st.nu_theory = opt.nu > 0 ? opt.nu : SobolevParams(base.m, opt.s).nu();
    const ForwardModel F = make_forward_model(base);
    // truth as seen by the model: the truncated coefficient expansion
    const CoefficientMap map(base.grid, base.gamma_max, base.m);
    const ScalarField truth = map.contrast(map.variables(n_dagger.contrast()));
    const ScalarField truth_coeffs = fourier_coeffs(base.grid, truth);
    const DataSet exact = F.data(F.solve(truth));
    RefractiveIndex current = RefractiveIndex::background(base.grid, base.b);
    std::vector<double> lx, ly;
    for (size_t k = 0; k < deltas.size(); ++k) {
        const double delta = deltas[k];
        InverseProblem p = base;
        p.delta = delta;
        p.data = exact;
        if (delta > 0) {
            // noise with weighted norm delta on the data blocks
            DataSet noise = exact;
            std::mt19937_64 rng(opt.seed + k);
            std::normal_distribution<double> nd;
            for (auto& b : noise.m)
                for (int i = 0; i < 9; ++i) b(i) = cplx(nd(rng), nd(rng));
            if (base.kind == OperatorKind::far) {
                for (int r = 0; r < noise.rows; ++r)
                    for (int s = 0; s < noise.cols; ++s) {
                        const Vec3 x = base.receivers.directions[size_t(r)], d = base.sources.directions[size_t(s)];
                        const Eigen::Matrix3cd px = (Eigen::Matrix3d::Identity() - x * x.transpose()).cast<cplx>();
                        const Eigen::Matrix3cd pd = (Eigen::Matrix3d::Identity() - d * d.transpose()).cast<cplx>();
                        noise.at(r, s) = px * noise.at(r, s) * pd;
                    }
            }
            const double nn = noise.norm();
            for (size_t i = 0; i < p.data.m.size(); ++i) p.data.m[i] += (delta / nn) * noise.m[i];
        }
        RateEntry e;
        e.delta = delta;
        e.alpha = alpha_rule(std::max(delta, 1e-300), opt.A, st.nu_theory);
        const TikhonovResult res = tikhonov_reconstruct(F, p, e.alpha, current, opt.tikhonov);
        e.error = hm_norm(base.grid, res.n.coeffs() - truth_coeffs, base.m);
        e.misfit = res.misfit;
        e.functional = res.functional;
        e.iterations = res.iterations;
        e.converged = res.converged;
        e.admissible = res.admissibility.empty();
        e.floor = delta <= opt.floor_delta;
        current = res.n;
        if (!e.floor) {
            lx.push_back(std::log(std::log(3.0 + 1.0 / (delta * delta))));
            ly.push_back(std::log(e.error));
        }
        st.entries.push_back(e);
    }
    for (size_t k = 1; k < st.entries.size(); ++k)
        if (st.entries[k].error > 1.10 * st.entries[k - 1].error) ++st.monotonicity_violations;
    if (lx.size() >= 2) {
        const double n = double(lx.size());
        double mx = 0, my = 0;
        for (size_t k = 0; k < lx.size(); ++k) {
            mx += lx[k] / n;
            my += ly[k] / n;
        }
        double sxy = 0, sxx = 0;
        for (size_t k = 0; k < lx.size(); ++k) {
            sxy += (lx[k] - mx) * (ly[k] - my);
            sxx += (lx[k] - mx) * (lx[k] - mx);
        }
        st.nu_hat = -sxy / sxx;
        st.log_c = my + st.nu_hat * mx;
    }
    return st;
}

}  // namespace mvsc
