#pragma once

#include "mvsc/field_io.hpp"
#include "mvsc/tikhonov.hpp"
#include "mvsc/vsc_lab.hpp"

#include <cstdint>
#include <optional>

namespace mvsc {

enum class Experiment { forward, nearfield, farfield, cgo, vsc_check, invert, rates, near2far };
Experiment parse_experiment(const std::string& name);
std::string experiment_name(Experiment e);

struct MediumSpec {
    enum class Kind { background, bump, ball } kind = Kind::bump;
    BumpProfile profile;
    cplx n0 = 1.2;            // ball
    double ball_radius = 1.0;
    double b = 0.5;

    RefractiveIndex make(const CubeGrid& grid) const;
};

struct ExperimentConfig {
    Experiment kind = Experiment::forward;
    fs::path source;  // the config file, if any
    fs::path out = "out";
    std::uint64_t seed = 1;
    int threads = 1;

    MediumSpec medium;
    int N = 16;
    double kappa = 1.0, R = 3.5, m = 4.0, s = 6.0, theta = 0.5;

    // measurement spheres: "lebedev26" or "degree:K"
    std::string receivers = "lebedev26", sources = "lebedev26";
    double sphere_radius = 0.0;  // 0: R
    int L = 0;                   // 0: ceil(kappa R) + 12

    // forward
    std::string incident = "plane";
    Vec3 direction{0, 0, 1}, position{0, 0, 4};
    CVec3 polarization{1, 0, 0};

    // noise, inversion
    std::vector<double> deltas{1e-2};
    std::string operator_kind = "near";
    double alpha = 0.0;  // 0: a-priori rule
    double A = 1.0, nu = 0.0;
    double gamma_max = 2.0;
    int max_iterations = 100;
    double gradient_tol = 1e-6, function_tol = 1e-10;
    fs::path data_file;  // invert: measured data instead of synthetic

    // cgo
    Vec3 gamma{1, 0, 0};
    double t = 0.0;  // 0: the medium's t0
    int cgo_points = 32;

    // vsc-check family: amplitudes of bump members sharing the medium's shape
    std::vector<double> family_amplitudes{0.1, 0.15, 0.25, 0.3};
    std::vector<double> family_shifts{0.2, 0.4};
    double beta = 0.5;

    // near2far: amplitude of the second medium (0 skips it)
    double second_amplitude = 0.1;

    SphereGrid receiver_grid() const;
    SphereGrid source_grid() const;
    SobolevParams smoothness() const { return SobolevParams(m, s); }
};

// Reads an INI-style config and enforces the parameter guards; messages name the violated guard.
ExperimentConfig load_config(const fs::path& path);
ExperimentConfig parse_config(const std::string& text, const fs::path& base = {});
void validate(const ExperimentConfig& c);

struct RunResult {
    fs::path manifest;
    json summary;
};

// Runs the configured experiment, writing artifacts and manifest.json under c.out.
RunResult run_experiment(const ExperimentConfig& c);

struct Near2FarReport {
    int L = 0;
    double relative_error = 0.0;  // series vs direct on the near sphere
    double last_shell = 0.0;      // relative size of the max(l1, l2) = L terms
    double far_norm = 0.0, near_norm = 0.0;
    FarCoeffs coeffs;
    NearFieldData direct, series;
};
// Far data on a rule exact to degree 2L, coefficients, then the series on the sphere of radius 2R.
Near2FarReport near2far_consistency(const RefractiveIndex& n, double kappa, double R, int L,
                                    const SphereGrid& sphere);

// CSV helpers with round-trip double formatting
std::string csv_number(double v);
std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
                      const std::vector<std::string>& ids = {});

}  // namespace mvsc
