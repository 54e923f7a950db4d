#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvsc {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;
using Vec3i = Eigen::Vector3i;
using ScalarField = Eigen::ArrayXcd;
// one column per Cartesian component, rows follow grid node order
using VectorField = Eigen::Array<cplx, Eigen::Dynamic, 3>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

// Uniform grid on the open cube (-a, a)^3, nodes x_j = -a + j h, h = 2a/N.
// Linear index (i*N + j)*N + k, z fastest.
class CubeGrid {
public:
    CubeGrid() = default;
    CubeGrid(double half_side, int n);

    double half_side() const { return half_side_; }
    int n() const { return n_; }
    double spacing() const { return 2.0 * half_side_ / n_; }
    double cell_volume() const { double h = spacing(); return h * h * h; }
    Eigen::Index size() const { return Eigen::Index(n_) * n_ * n_; }

    Eigen::Index index(int i, int j, int k) const { return (Eigen::Index(i) * n_ + j) * n_ + k; }
    Vec3i triple(Eigen::Index idx) const;
    Vec3 node(Eigen::Index idx) const;
    double coord(int i) const { return -half_side_ + i * spacing(); }

    // signed DFT frequency index in [-N/2, N/2)
    int signed_index(int k) const { return k < n_ / 2 ? k : k - n_; }
    Vec3i lattice(Eigen::Index idx) const;
    double frequency_unit() const { return pi / half_side_; }

    bool operator==(const CubeGrid& o) const { return n_ == o.n_ && half_side_ == o.half_side_; }
    bool operator!=(const CubeGrid& o) const { return !(*this == o); }

private:
    double half_side_ = pi;
    int n_ = 0;
};

// nodes strictly inside the ball of the given radius
std::vector<Eigen::Index> ball_nodes(const CubeGrid& grid, double radius);

// Eigen's cross() conjugates complex operands; Maxwell fields need the plain bilinear one
inline CVec3 cross(const CVec3& a, const CVec3& b)
{
    return CVec3(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0));
}
// complex bilinear dot product (no conjugation)
inline cplx bdot(const CVec3& a, const CVec3& b) { return a.transpose() * b; }

inline Eigen::Matrix3cd cross_matrix(const CVec3& v)
{
    Eigen::Matrix3cd m;
    m << 0.0, -v(2), v(1),
         v(2), 0.0, -v(0),
        -v(1), v(0), 0.0;
    return m;
}

}  // namespace mvsc
