#pragma once

#include "mvsc/em_forward.hpp"

#include <cstdint>

namespace mvsc {

enum class OperatorKind { near, far };

// Data as 3x3 blocks (receiver/observation major) with per-block quadrature weights.
struct DataSet {
    int rows = 0, cols = 0;
    std::vector<CMat3> m;
    std::vector<double> weight;

    const CMat3& at(int r, int s) const { return m[size_t(r) * cols + s]; }
    CMat3& at(int r, int s) { return m[size_t(r) * cols + s]; }
    double norm() const;
    DataSet operator-(const DataSet& o) const;
};
DataSet to_dataset(const NearFieldData& d);
DataSet to_dataset(const FarFieldData& d);
double distance(const DataSet& a, const DataSet& b);

// Complex white noise with data-space norm exactly delta, deterministic per seed.
// Far-field noise is projected onto the tangential blocks (xhat^T M = 0, M d = 0).
NearFieldData add_noise(const NearFieldData& data, double delta, std::uint64_t seed);
FarFieldData add_noise(const FarFieldData& data, double delta, std::uint64_t seed);

// Discrete forward map n -> data in the grad-div form of the volume equation, whose
// discretization is symmetric under the bilinear pairing; that makes the adjoint a forward solve.
class ForwardModel {
public:
    // near: receivers and sources are spheres of radius > pi; far: observation and incidence directions
    ForwardModel(OperatorKind kind, double kappa, const CubeGrid& grid, const SphereGrid& receivers,
                 const SphereGrid& sources, double rtol = 1e-10);

    struct State {
        ScalarField contrast;             // n - 1 on the grid
        std::vector<VectorField> fields;  // total field per column (ball nodes only)
    };

    State solve(const ScalarField& contrast) const;
    DataSet data(const State& s) const;
    DataSet frechet(const State& s, const ScalarField& h) const;
    // G with Re <F'(n)[h], r>_Y = Re sum_i h_i G_i
    ScalarField adjoint(const State& s, const DataSet& r) const;

    OperatorKind kind() const { return kind_; }
    const CubeGrid& grid() const { return grid_; }
    int columns() const { return int(col_block_.size()); }
    DataSet zero_data() const;
    long solves() const { return solves_; }

private:
    OperatorKind kind_;
    double kappa_, rtol_;
    CubeGrid grid_;
    SphereGrid rcv_, src_;
    std::shared_ptr<const VolumePotential> pot_;
    std::vector<Eigen::Index> ball_;
    std::vector<int> col_block_;              // source block of each column
    std::vector<CVec3> col_moment_;           // orthonormal moment of each column
    std::vector<VectorField> incident_;       // per column, on the ball nodes
    std::vector<std::vector<CMat3>> recv_;    // per receiver, per ball node
    mutable long solves_ = 0;

    VectorField potential(const ScalarField& c, const VectorField& E) const;  // ball nodes -> ball nodes
    VectorField lsolve(const ScalarField& c, const VectorField& rhs) const;
    double block_weight(int r, int s) const;
    DataSet assemble(const std::vector<VectorField>& sources) const;  // per-column (n-1)E or equivalent
};

// Coefficients of n - 1 with |gamma| <= gamma_max, scaled so the H^m penalty is 1/2 |z|^2.
class CoefficientMap {
public:
    CoefficientMap(const CubeGrid& grid, double gamma_max, double m);
    int size() const { return int(index_.size()); }  // complex unknowns
    ScalarField contrast(const Eigen::VectorXd& x) const;   // real pairs -> n - 1 samples
    Eigen::VectorXd variables(const ScalarField& contrast) const;  // truncates beyond gamma_max
    // gradient of Re sum_i h_i G_i with respect to the real pairs
    Eigen::VectorXd pullback(const ScalarField& G) const;
    const CubeGrid& grid() const { return grid_; }

private:
    CubeGrid grid_;
    std::vector<Eigen::Index> index_;
    std::vector<double> scale_;  // <gamma>^{m/2}
};

struct InverseProblem {
    OperatorKind kind = OperatorKind::near;
    double kappa = 1.0;
    SphereGrid receivers, sources;
    CubeGrid grid{pi, 16};
    DataSet data;
    double delta = 0.0;
    double m = 4.0;
    double gamma_max = 3.0;
    double b = 0.5;
    double rtol = 1e-10;
};

struct TikhonovOptions {
    double gradient_tol = 1e-6;   // relative to the initial gradient
    double function_tol = 1e-10;  // stalled relative decrease
    int max_iterations = 200;
};

struct TikhonovResult {
    RefractiveIndex n;
    double functional = 0.0, misfit = 0.0, penalty = 0.0;  // misfit = ||F(n) - y||
    int iterations = 0, evaluations = 0;
    bool converged = false;
    bool monotone = true;         // functional non-increasing along accepted iterates
    std::string admissibility;    // empty when Re n >= b and Im n >= 0 on B(pi)
    std::vector<double> history;  // functional per iteration
    std::string message;
};

// (1/alpha) ||F(n) - y||^2 + (1/2) ||n - 1||^2_{H^m} and its gradient in the scaled variables
double tikhonov_functional(const ForwardModel& F, const CoefficientMap& map, const DataSet& y, double alpha,
                           const Eigen::VectorXd& x, Eigen::VectorXd* grad = nullptr, double* misfit = nullptr);

TikhonovResult tikhonov_reconstruct(const InverseProblem& p, double alpha, const RefractiveIndex& init,
                                    const TikhonovOptions& opt = {});
TikhonovResult tikhonov_reconstruct(const ForwardModel& F, const InverseProblem& p, double alpha,
                                    const RefractiveIndex& init, const TikhonovOptions& opt = {});

ForwardModel make_forward_model(const InverseProblem& p);

// alpha = (2 A d/dt (ln(3 + 1/t))^{-2 nu} at t = 4 delta^2)^{-1}
double alpha_rule(double delta, double A, double nu);
double psi_derivative(double t, double nu);  // d/dt (ln(3 + 1/t))^{-2 nu}

struct RateEntry {
    double delta = 0.0, alpha = 0.0, error = 0.0, misfit = 0.0, functional = 0.0;
    int iterations = 0;
    bool converged = false, admissible = true, floor = false;
};

struct RateStudy {
    std::vector<RateEntry> entries;
    double nu_hat = 0.0, log_c = 0.0;  // error ~ C (ln(3 + delta^-2))^{-nu_hat}
    double nu_theory = 0.0;
    int monotonicity_violations = 0;   // beyond the 10% allowance
};

struct RateOptions {
    double A = 1.0;
    double nu = 0.0;             // 0: from SobolevParams(m, s)
    double s = 6.0;
    double floor_delta = 1e-10;  // entries at or below are the exact-data anchor
    std::uint64_t seed = 1;
    TikhonovOptions tikhonov;
};

// n_dagger is first truncated to |gamma| <= gamma_max; data are its image under the same discrete
// model plus noise of norm delta, and errors are measured against the truncation.
// Each reconstruction is warm-started from the previous one.
RateStudy rate_study(const RefractiveIndex& n_dagger, const std::vector<double>& deltas, const InverseProblem& base,
                     const RateOptions& opt);

}  // namespace mvsc
