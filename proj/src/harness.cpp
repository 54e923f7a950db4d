#include "mvsc/harness.hpp"

#include "mvsc/cgo.hpp"
#include "mvsc/parallel.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mvsc {

namespace pt = boost::property_tree;

namespace {

const std::vector<std::pair<Experiment, std::string>> experiment_names{
    {Experiment::forward, "forward"}, {Experiment::nearfield, "nearfield"}, {Experiment::farfield, "farfield"},
    {Experiment::cgo, "cgo"},         {Experiment::vsc_check, "vsc-check"}, {Experiment::invert, "invert"},
    {Experiment::rates, "rates"},     {Experiment::near2far, "near2far"}};

std::vector<double> parse_list(const std::string& key, const std::string& text)
{
    std::vector<std::string> parts;
    boost::split(parts, text, boost::is_any_of(", "), boost::token_compress_on);
    std::vector<double> out;
    for (auto& p : parts) {
        boost::trim(p);
        if (p.empty()) continue;
        try {
            size_t used = 0;
            out.push_back(std::stod(p, &used));
            if (used != p.size()) throw std::invalid_argument(p);
        } catch (const std::exception&) {
            throw Error("config: '" + key + "' has a non-numeric entry '" + p + "'");
        }
    }
    return out;
}

Vec3 parse_vec3(const std::string& key, const std::string& text)
{
    const auto v = parse_list(key, text);
    if (v.size() != 3) throw Error("config: '" + key + "' needs three components");
    return Vec3(v[0], v[1], v[2]);
}

cplx parse_complex(const std::string& key, const std::string& text)
{
    const auto v = parse_list(key, text);
    if (v.empty() || v.size() > 2) throw Error("config: '" + key + "' must be 're' or 're, im'");
    return cplx(v[0], v.size() == 2 ? v[1] : 0.0);
}

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }
json cjson(const CVec3& v) { return json::array({cjson(v(0)), cjson(v(1)), cjson(v(2))}); }
json vjson(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

SphereGrid sphere_from_spec(const std::string& spec, double radius)
{
    if (spec == "lebedev26") return SphereGrid::lebedev26(radius);
    if (boost::starts_with(spec, "degree:")) {
        const int d = std::stoi(spec.substr(7));
        if (d < 1) throw Error("config: sphere degree must be positive");
        return SphereGrid::for_degree(d, radius);
    }
    throw Error("config: unknown sphere grid '" + spec + "' (use lebedev26 or degree:K)");
}

}  // namespace

Experiment parse_experiment(const std::string& name)
{
    for (const auto& [e, n] : experiment_names)
        if (n == name) return e;
    throw Error("unknown experiment '" + name + "'");
}

std::string experiment_name(Experiment e)
{
    for (const auto& [k, n] : experiment_names)
        if (k == e) return n;
    return "?";
}

RefractiveIndex MediumSpec::make(const CubeGrid& grid) const
{
    switch (kind) {
    case Kind::background: return RefractiveIndex::background(grid, b);
    case Kind::ball: return make_ball_index(ball_radius, n0, grid, b);
    case Kind::bump: break;
    }
    return make_test_index(profile, grid, b);
}

SphereGrid ExperimentConfig::receiver_grid() const
{
    return sphere_from_spec(receivers, sphere_radius > 0 ? sphere_radius : R);
}
SphereGrid ExperimentConfig::source_grid() const
{
    return sphere_from_spec(sources, sphere_radius > 0 ? sphere_radius : R);
}

void validate(const ExperimentConfig& c)
{
    if (!(c.R > pi)) throw Error("config guard violated: R > pi is required (R = " + std::to_string(c.R) + ")");
    if (!(c.m > 3.5)) throw Error("config guard violated: m > 7/2 is required");
    if (!(c.s > c.m)) throw Error("config guard violated: s > m is required");
    if (std::abs(c.s - (2 * c.m + 1.5)) < 1e-12)
        throw Error("config guard violated: s = 2m + 3/2 is excluded (s != 2m + 3/2 is required)");
    if (!(c.theta > 0 && c.theta < 1)) throw Error("config guard violated: 0 < theta < 1 is required");
    if (!(c.kappa > 0)) throw Error("config guard violated: kappa > 0 is required");
    if (c.N < 8 || c.N % 2) throw Error("config guard violated: N must be even and at least 8");
    if (!(c.medium.b > 0 && c.medium.b <= 1)) throw Error("config guard violated: 0 < b <= 1 is required");
    if (c.sphere_radius != 0 && !(c.sphere_radius > pi))
        throw Error("config guard violated: measurement sphere radius must exceed pi");
    if (c.threads < 1) throw Error("config guard violated: threads >= 1 is required");
    if (!(c.beta > 0 && c.beta < 1)) throw Error("config guard violated: 0 < beta < 1 is required");
    for (double d : c.deltas)
        if (!(d >= 0)) throw Error("config guard violated: noise levels must be non-negative");
    if (c.operator_kind != "near" && c.operator_kind != "far")
        throw Error("config: operator must be 'near' or 'far'");
    if (!c.data_file.empty() && !fs::exists(c.data_file))
        throw Error("config: data file '" + c.data_file.string() + "' does not exist");
    if (c.kind == Experiment::rates) {
        if (c.deltas.size() < 2) throw Error("config: rates needs at least two noise levels");
        for (size_t k = 1; k < c.deltas.size(); ++k)
            if (!(c.deltas[k] < c.deltas[k - 1])) throw Error("config: noise levels must be strictly decreasing");
    }
    if (!(c.gamma_max >= 0 && c.gamma_max < c.N / 2)) throw Error("config: gamma_max beyond the grid band");
    sphere_from_spec(c.receivers, 1.0);
    sphere_from_spec(c.sources, 1.0);
    SobolevParams(c.m, c.s);
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base)
{
    pt::ptree t;
    std::istringstream is(text);
    try {
        pt::read_ini(is, t);
    } catch (const pt::ini_parser_error& e) {
        throw Error(std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    auto str = [&](const char* key) { return t.get_optional<std::string>(key); };
    auto num = [&](const char* key, double& v) {
        if (auto s = str(key)) {
            const auto l = parse_list(key, *s);
            if (l.size() != 1) throw Error(std::string("config: '") + key + "' must be a single number");
            v = l[0];
        }
    };
    auto integer = [&](const char* key, int& v) {
        double d = v;
        num(key, d);
        if (d != std::floor(d)) throw Error(std::string("config: '") + key + "' must be an integer");
        v = int(d);
    };

    if (auto s = str("experiment.kind")) c.kind = parse_experiment(*s);
    if (auto s = str("experiment.out")) c.out = base / *s;
    if (auto s = str("experiment.seed")) {
        try {
            c.seed = std::stoull(*s);
        } catch (const std::exception&) {
            throw Error("config: 'experiment.seed' must be an unsigned integer");
        }
    }
    integer("experiment.threads", c.threads);

    if (auto s = str("medium.type")) {
        if (*s == "background") c.medium.kind = MediumSpec::Kind::background;
        else if (*s == "bump") c.medium.kind = MediumSpec::Kind::bump;
        else if (*s == "ball") c.medium.kind = MediumSpec::Kind::ball;
        else throw Error("config: medium.type must be background, bump or ball");
    }
    integer("medium.N", c.N);
    num("medium.b", c.medium.b);
    Bump bump{Vec3::Zero(), 0.2, 3.1};
    double sharp = 16.0;
    if (auto s = str("medium.amplitude")) bump.amplitude = parse_complex("medium.amplitude", *s);
    num("medium.width", bump.width);
    num("medium.sharpness", sharp);
    if (auto s = str("medium.center")) bump.center = parse_vec3("medium.center", *s);
    c.medium.profile.sharpness = sharp;
    c.medium.profile.bumps = {bump};
    if (auto s = str("medium.amplitude2")) {
        Bump b2{Vec3::Zero(), parse_complex("medium.amplitude2", *s), 1.0};
        num("medium.width2", b2.width);
        if (auto v = str("medium.center2")) b2.center = parse_vec3("medium.center2", *v);
        c.medium.profile.bumps.push_back(b2);
    }
    if (auto s = str("medium.n0")) c.medium.n0 = parse_complex("medium.n0", *s);
    num("medium.radius", c.medium.ball_radius);

    num("physics.kappa", c.kappa);
    num("physics.R", c.R);
    num("physics.m", c.m);
    num("physics.s", c.s);
    num("physics.theta", c.theta);

    if (auto s = str("measurement.receivers")) c.receivers = *s;
    if (auto s = str("measurement.sources")) c.sources = *s;
    num("measurement.radius", c.sphere_radius);
    integer("measurement.L", c.L);

    if (auto s = str("incident.type")) c.incident = *s;
    if (c.incident != "plane" && c.incident != "dipole") throw Error("config: incident.type must be plane or dipole");
    if (auto s = str("incident.direction")) c.direction = parse_vec3("incident.direction", *s);
    if (auto s = str("incident.position")) c.position = parse_vec3("incident.position", *s);
    if (auto s = str("incident.polarization")) c.polarization = parse_vec3("incident.polarization", *s).cast<cplx>();

    if (auto s = str("noise.deltas")) c.deltas = parse_list("noise.deltas", *s);

    if (auto s = str("invert.operator")) c.operator_kind = *s;
    num("invert.alpha", c.alpha);
    num("invert.A", c.A);
    num("invert.nu", c.nu);
    num("invert.gamma_max", c.gamma_max);
    integer("invert.max_iterations", c.max_iterations);
    num("invert.gradient_tol", c.gradient_tol);
    num("invert.function_tol", c.function_tol);
    if (auto s = str("invert.data")) c.data_file = base / *s;

    if (auto s = str("cgo.gamma")) c.gamma = parse_vec3("cgo.gamma", *s);
    num("cgo.t", c.t);
    integer("cgo.points", c.cgo_points);

    if (auto s = str("vsc.amplitudes")) c.family_amplitudes = parse_list("vsc.amplitudes", *s);
    if (auto s = str("vsc.shifts")) c.family_shifts = parse_list("vsc.shifts", *s);
    num("vsc.beta", c.beta);

    num("near2far.second_amplitude", c.second_amplitude);

    validate(c);
    return c;
}

ExperimentConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig c = parse_config(ss.str(), path.parent_path());
    c.source = path;
    return c;
}

std::string csv_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
                      const std::vector<std::string>& ids)
{
    std::ostringstream os;
    if (!ids.empty()) os << "id,";
    os << boost::join(header, ",") << "\n";
    for (size_t r = 0; r < rows.size(); ++r) {
        if (!ids.empty()) os << ids[r] << ",";
        for (size_t k = 0; k < rows[r].size(); ++k) os << (k ? "," : "") << csv_number(rows[r][k]);
        os << "\n";
    }
    return os.str();
}

Near2FarReport near2far_consistency(const RefractiveIndex& n, double kappa, double R, int L,
                                    const SphereGrid& sphere)
{
    if (L <= 0) L = int(std::ceil(kappa * R)) + 12;
    if (!(sphere.radius > pi)) throw Error("near2far: sphere radius must exceed pi");
    Near2FarReport r;
    r.L = L;
    const SphereGrid dirs = SphereGrid::for_degree(2 * L);
    const FarFieldData far = far_field_operator(n, kappa, dirs, dirs);
    r.far_norm = far.norm();
    r.coeffs = far_coeffs(far, L);
    r.direct = near_field_operator(n, kappa, sphere, sphere);
    r.near_norm = r.direct.norm();
    r.series = near_data_from_far(r.coeffs, kappa, sphere, sphere, L);
    r.relative_error = r.near_norm > 0 ? distance(r.direct, r.series) / r.near_norm : distance(r.direct, r.series);

    // size of the outermost shell of coefficients
    double shell = 0.0;
    for (int l1 = 0; l1 <= L; ++l1)
        for (int k1 = -l1; k1 <= l1; ++k1)
            for (int l2 = 0; l2 <= L; ++l2)
                for (int k2 = -l2; k2 <= l2; ++k2)
                    if (std::max(l1, l2) == L) shell += r.coeffs.at(l1, k1, l2, k2).squaredNorm();
    const double total = r.coeffs.norm_sq();
    r.last_shell = total > 0 ? std::sqrt(shell / total) : 0.0;
    return r;
}

// ---------------------------------------------------------------------------

namespace {

struct Runner {
    const ExperimentConfig& c;
    Manifest man;
    json summary = json::object();

    explicit Runner(const ExperimentConfig& cfg) : c(cfg), man(cfg.out) {}

    fs::path file(const std::string& name) const { return c.out / name; }
    void text(const std::string& name, const std::string& body, const std::string& role)
    {
        write_text(file(name), body);
        man.add(file(name), role);
    }
    void save_json(const std::string& name, const json& j, const std::string& role)
    {
        text(name, j.dump(2) + "\n", role);
    }

    CubeGrid grid() const { return CubeGrid(pi, c.N); }
    RefractiveIndex medium() const { return c.medium.make(grid()); }

    IncidentField incident() const
    {
        if (c.incident == "dipole") return IncidentField::dipole(c.position, c.polarization, c.kappa);
        const Vec3 d = c.direction.normalized();
        return IncidentField::plane(d, c.polarization, c.kappa);
    }

    void forward()
    {
        const RefractiveIndex n = medium();
        const ScatteringSolver solver(n, c.kappa);
        SolveReport rep;
        const IncidentField inc = incident();
        const VectorFieldGrid E = solver.solve(inc, &rep);
        const VectorField scat = E.values - solver.sample_incident(inc);
        write_field(file("index.fld"), n.grid(), n.values(), "index");
        man.add(file("index.fld"), "refractive index samples");
        write_field(file("E_total.fld"), n.grid(), E.values, "E", {{"part", "total"}});
        man.add(file("E_total.fld"), "total electric field");
        write_field(file("E_scattered.fld"), n.grid(), scat, "E", {{"part", "scattered"}});
        man.add(file("E_scattered.fld"), "scattered electric field");
        summary["iterations"] = rep.iterations;
        summary["residual"] = rep.residual;
        summary["scattered_max"] = scat.abs().maxCoeff();
        summary["background"] = n.is_background();
    }

    void nearfield()
    {
        const RefractiveIndex n = medium();
        const SphereGrid rcv = c.receiver_grid(), src = c.source_grid();
        const NearFieldData w = near_field_operator(n, c.kappa, rcv, src);
        write_data(file("near.dat"), w);
        man.add(file("near.dat"), "scattered near-field data");
        summary["norm"] = w.norm();
        if (c.receivers == c.sources) {
            double num = 0, den = 0;
            for (int r = 0; r < rcv.size(); ++r)
                for (int s = 0; s < src.size(); ++s) {
                    num += (w.at(r, s) - w.at(s, r).transpose()).squaredNorm();
                    den += w.at(r, s).squaredNorm();
                }
            summary["reciprocity"] = den > 0 ? std::sqrt(num / den) : 0.0;
        }
    }

    void farfield()
    {
        const RefractiveIndex n = medium();
        const SphereGrid obs = sphere_from_spec(c.receivers, 1.0), inc = sphere_from_spec(c.sources, 1.0);
        const FarFieldData f = far_field_operator(n, c.kappa, obs, inc);
        write_data(file("far.dat"), f);
        man.add(file("far.dat"), "far-field pattern data");
        summary["norm"] = f.norm();
    }

    void cgo()
    {
        if (c.medium.kind != MediumSpec::Kind::bump && c.medium.kind != MediumSpec::Kind::background)
            throw Error("cgo: needs a smooth (bump or background) medium");
        const BumpProfile prof = c.medium.kind == MediumSpec::Kind::bump ? c.medium.profile : BumpProfile{};
        const double t0 = medium_t_min(c.medium.make(CubeGrid(pi, 32)), c.R, c.kappa, c.m);
        const double t = c.t > 0 ? c.t : t0;
        const CgoVectors v = cgo_vectors(c.gamma, t, c.kappa);
        const CgoMedium med = cgo_medium(prof, c.medium.b, v.frame(), 2 * c.R, c.cgo_points, c.kappa);
        CgoOptions o;
        const CgoSolution s1 = cgo_solve(med, v.zeta1, v.eta1, c.R, o);
        const CgoSolution s2 = cgo_solve(med, v.zeta2, v.eta2, c.R, o);
        json side = {{"gamma", vjson(c.gamma)}, {"t", t}, {"t0", t0}, {"kappa", c.kappa}, {"R", c.R},
                     {"points", c.cgo_points}};
        int j = 1;
        for (const CgoSolution* s : {&s1, &s2}) {
            const std::string tag = std::to_string(j++);
            write_field(file("U" + tag + ".fld"), s->grid, s->U, "U", {{"frame", "cgo"}});
            man.add(file("U" + tag + ".fld"), "CGO electric amplitude " + tag);
            write_field(file("W" + tag + ".fld"), s->grid, s->W, "W", {{"frame", "cgo"}});
            man.add(file("W" + tag + ".fld"), "CGO magnetic amplitude " + tag);
            side["solution" + tag] = {{"zeta", cjson(s->zeta)},
                                      {"eta", cjson(s->eta)},
                                      {"iterations", s->iterations},
                                      {"contraction", s->contraction},
                                      {"residual_curl_e", s->residual_curl_e},
                                      {"residual_curl_h", s->residual_curl_h},
                                      {"norm_f", s->norm_f},
                                      {"norm_V", s->norm_V}};
        }
        const ProductCheck pc = product_expansion_check(v, s1, s2);
        side["product_check"] = {{"corrected", pc.corrected}, {"displayed", pc.displayed}, {"typo_term", pc.typo_term}};
        save_json("cgo.json", side, "CGO sidecar");
        summary = side;
    }

    std::vector<VscMember> vsc_family(const RefractiveIndex& nd, bool far)
    {
        std::vector<std::pair<std::string, BumpProfile>> members;
        for (double a : c.family_amplitudes) {
            BumpProfile p = c.medium.profile;
            p.bumps[0].amplitude = a;
            members.emplace_back("amplitude_" + csv_number(a), p);
        }
        for (double sh : c.family_shifts) {
            BumpProfile p = c.medium.profile;
            p.bumps[0].center(0) += sh;
            p.bumps[0].width -= std::abs(sh);  // stays inside B(pi)
            members.emplace_back("shift_" + csv_number(sh), p);
        }
        const SphereGrid rcv = far ? sphere_from_spec(c.receivers, 1.0) : c.receiver_grid();
        const SphereGrid src = far ? sphere_from_spec(c.sources, 1.0) : c.source_grid();
        auto data_of = [&](const RefractiveIndex& n) {
            return far ? to_dataset(far_field_operator(n, c.kappa, rcv, src))
                       : to_dataset(near_field_operator(n, c.kappa, rcv, src));
        };
        const DataSet ref = data_of(nd);
        std::vector<VscMember> out;
        for (const auto& [id, p] : members) {
            VscMember m{id, make_test_index(p, grid(), c.medium.b), 0.0};
            m.data_diff = distance(data_of(m.n), ref);
            out.push_back(std::move(m));
        }
        return out;
    }

    static json report_json(const VscReport& r)
    {
        json j = {{"family", r.family}, {"violations", r.violations}};
        for (const auto& [k, v] : r.constants) j["constants"][k] = v;
        return j;
    }

    void vsc()
    {
        if (c.medium.kind != MediumSpec::Kind::bump) throw Error("vsc-check: needs a bump medium as n_dagger");
        const RefractiveIndex nd = medium();
        const bool far = c.operator_kind == "far";
        const auto family = vsc_family(nd, far);
        VscParams p;
        p.m = c.m;
        p.s = c.s;
        p.beta = c.beta;
        p.far = far;
        p.theta = c.theta;
        p.family = "config";
        const VscReport r = vsc_check(nd, family, p);
        std::vector<std::vector<double>> rows;
        std::vector<std::string> ids;
        for (const auto& row : r.rows) {
            ids.push_back(row.id);
            rows.push_back(row.values);
        }
        text("vsc.csv", csv_table(r.columns, rows, ids), "VSC samples");

        // tail inequality for every medium at rho in {2, 4, 8, 16}
        std::vector<std::vector<double>> tail;
        std::vector<std::string> tids;
        std::vector<const RefractiveIndex*> media{&nd};
        for (const auto& m : family) media.push_back(&m.n);
        int tail_violations = 0;
        for (size_t k = 0; k < media.size(); ++k)
            for (double rho : {2.0, 4.0, 8.0, 16.0}) {
                const double lhs = highfreq_tail(*media[k], rho, c.m), rhs = highfreq_tail_bound(*media[k], rho, c.m, c.s);
                if (lhs > rhs * (1 + 1e-12)) ++tail_violations;
                tids.push_back(k == 0 ? "n_dagger" : family[k - 1].id);
                tail.push_back({rho, lhs, rhs});
            }
        text("tail.csv", csv_table({"rho", "tail", "bound"}, tail, tids), "high-frequency tail table");
        summary = report_json(r);
        summary["tail_violations"] = tail_violations;
        save_json("vsc.json", summary, "VSC summary");
    }

    InverseProblem base_problem(const DataSet& data, double delta) const
    {
        InverseProblem p;
        p.kind = c.operator_kind == "far" ? OperatorKind::far : OperatorKind::near;
        p.kappa = c.kappa;
        p.receivers = p.kind == OperatorKind::far ? sphere_from_spec(c.receivers, 1.0) : c.receiver_grid();
        p.sources = p.kind == OperatorKind::far ? sphere_from_spec(c.sources, 1.0) : c.source_grid();
        p.grid = grid();
        p.data = data;
        p.delta = delta;
        p.m = c.m;
        p.gamma_max = c.gamma_max;
        p.b = c.medium.b;
        return p;
    }

    TikhonovOptions tik_options() const
    {
        TikhonovOptions o;
        o.gradient_tol = c.gradient_tol;
        o.function_tol = c.function_tol;
        o.max_iterations = c.max_iterations;
        return o;
    }

    void invert()
    {
        const bool far = c.operator_kind == "far";
        double delta = c.deltas.empty() ? 0.0 : c.deltas.front();
        DataSet y;
        json truth_info;
        std::optional<RefractiveIndex> truth;
        if (!c.data_file.empty()) {
            const std::string k = data_kind(c.data_file);
            if ((k == "far") != far) throw Error("invert: data file kind does not match invert.operator");
            y = far ? to_dataset(read_far_data(c.data_file)) : to_dataset(read_near_data(c.data_file));
        } else {
            truth = medium();
            InverseProblem p0 = base_problem({}, delta);
            const ForwardModel F = make_forward_model(p0);
            y = F.data(F.solve(truth->contrast()));
            if (delta > 0) {
                // white noise of norm delta, tangential for far data
                if (far) {
                    FarFieldData fd{p0.receivers, p0.sources, y.m};
                    y.m = add_noise(fd, delta, c.seed).m;
                } else {
                    NearFieldData nd{p0.receivers, p0.sources, y.m, DataPart::scattered};
                    y.m = add_noise(nd, delta, c.seed).m;
                }
            }
        }
        const InverseProblem p = base_problem(y, delta);
        double alpha = c.alpha;
        if (alpha <= 0) {
            if (!(delta > 0)) throw Error("invert: set invert.alpha or a positive noise level for the a-priori rule");
            alpha = alpha_rule(delta, c.A, c.nu > 0 ? c.nu : c.smoothness().nu());
        }
        const TikhonovResult r = tikhonov_reconstruct(p, alpha, RefractiveIndex::background(grid(), c.medium.b),
                                                      tik_options());
        write_field(file("reconstruction.fld"), r.n.grid(), r.n.values(), "index");
        man.add(file("reconstruction.fld"), "reconstructed refractive index");
        std::vector<std::vector<double>> hist;
        for (size_t k = 0; k < r.history.size(); ++k) hist.push_back({double(k), r.history[k]});
        text("history.csv", csv_table({"iteration", "functional"}, hist), "optimizer history");
        summary = {{"alpha", alpha},          {"delta", delta},         {"functional", r.functional},
                   {"misfit", r.misfit},      {"penalty", r.penalty},   {"iterations", r.iterations},
                   {"converged", r.converged}, {"monotone", r.monotone}, {"admissibility", r.admissibility},
                   {"message", r.message}};
        if (truth) {
            const CoefficientMap map(p.grid, p.gamma_max, p.m);
            const ScalarField proj = fourier_coeffs(p.grid, map.contrast(map.variables(truth->contrast())));
            summary["error_hm"] = hm_norm(p.grid, r.n.coeffs() - proj, p.m);
        }
        save_json("invert.json", summary, "inversion summary");
    }

    void rates()
    {
        const RefractiveIndex nd = medium();
        const InverseProblem base = base_problem({}, 0.0);
        RateOptions o;
        o.A = c.A;
        o.nu = c.nu;
        o.s = c.s;
        o.seed = c.seed;
        o.tikhonov = tik_options();
        const RateStudy st = rate_study(nd, c.deltas, base, o);
        std::vector<std::vector<double>> rows;
        for (const auto& e : st.entries)
            rows.push_back({e.delta, e.alpha, e.error, e.misfit, double(e.iterations), double(e.converged),
                            double(e.admissible), double(e.floor)});
        text("rates.csv",
             csv_table({"delta", "alpha", "error", "misfit", "iterations", "converged", "admissible", "floor"}, rows),
             "rate study table");
        summary = {{"nu_hat", st.nu_hat},
                   {"log_c", st.log_c},
                   {"nu_theory", st.nu_theory},
                   {"monotonicity_violations", st.monotonicity_violations},
                   {"entries", st.entries.size()},
                   {"operator", c.operator_kind}};
        save_json("rates.json", summary, "rate study summary");
    }

    void near2far()
    {
        const double radius = 2 * c.R;
        const SphereGrid sphere = sphere_from_spec(c.receivers, radius);
        std::vector<std::pair<std::string, RefractiveIndex>> media{{"medium", medium()}};
        if (c.second_amplitude != 0 && c.medium.kind == MediumSpec::Kind::bump) {
            BumpProfile p = c.medium.profile;
            p.bumps[0].amplitude = c.second_amplitude;
            media.emplace_back("second", make_test_index(p, grid(), c.medium.b));
        }
        std::vector<std::vector<double>> rows;
        std::vector<std::string> ids;
        std::vector<Near2FarReport> reps;
        for (const auto& [id, n] : media) {
            reps.push_back(near2far_consistency(n, c.kappa, c.R, c.L, sphere));
            const auto& r = reps.back();
            write_coeffs(file("coeffs_" + id + ".alf"), r.coeffs);
            man.add(file("coeffs_" + id + ".alf"), "far-field coefficients (" + id + ")");
            ids.push_back(id);
            rows.push_back({double(r.L), r.relative_error, r.last_shell, r.far_norm, r.near_norm});
            summary[id] = {{"L", r.L}, {"relative_error", r.relative_error}, {"last_shell", r.last_shell}};
        }
        text("near2far.csv", csv_table({"L", "relative_error", "last_shell", "far_norm", "near_norm"}, rows, ids),
             "near/far consistency table");
        if (reps.size() == 2) {
            // the near-by-far bound for the pair
            FarCoeffs d = reps[0].coeffs;
            for (size_t k = 0; k < d.entries.size(); ++k) d.entries[k] -= reps[1].coeffs.entries[k];
            const double far_diff = std::sqrt(d.norm_sq());
            const double near_diff = distance(reps[0].direct, reps[1].direct);
            const NearFarFit fit = fit_near_far({{far_diff, near_diff}}, c.theta);
            summary["pair"] = {{"far_diff", far_diff},
                               {"near_diff", near_diff},
                               {"theta", fit.theta},
                               {"omega", fit.omega},
                               {"rho", fit.rho},
                               {"bound", near_far_bound(far_diff, c.theta, fit.omega, fit.rho, fit.delta_max)}};
        }
        save_json("near2far.json", summary, "near/far consistency summary");
    }
};

}  // namespace

RunResult run_experiment(const ExperimentConfig& c)
{
    validate(c);
    set_thread_count(c.threads);
    Runner run(c);
    switch (c.kind) {
    case Experiment::forward: run.forward(); break;
    case Experiment::nearfield: run.nearfield(); break;
    case Experiment::farfield: run.farfield(); break;
    case Experiment::cgo: run.cgo(); break;
    case Experiment::vsc_check: run.vsc(); break;
    case Experiment::invert: run.invert(); break;
    case Experiment::rates: run.rates(); break;
    case Experiment::near2far: run.near2far(); break;
    }
    if (c.kind == Experiment::forward || c.kind == Experiment::nearfield || c.kind == Experiment::farfield)
        run.save_json("summary.json", run.summary, "run summary");
    if (!c.source.empty() && fs::exists(c.source)) {
        fs::copy_file(c.source, run.file("config.ini"), fs::copy_options::overwrite_existing);
        run.man.add(run.file("config.ini"), "configuration");
    }
    run.man.set("experiment", experiment_name(c.kind));
    run.man.set("seed", c.seed);
    run.man.set("threads", c.threads);
    return {run.man.write(), run.summary};
}

}  // namespace mvsc
