#pragma once

#include "mvsc/types.hpp"

namespace mvsc {

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Quadrature on the sphere of the given radius; weights sum to 4 pi (unit
// sphere measure), the area factor radius^2 is applied by area_weight().
struct SphereGrid {
    double radius = 1.0;
    std::vector<Vec3> directions;
    std::vector<double> weights;
    int degree = 0;  // harmonics integrated exactly up to this degree

    int size() const { return int(directions.size()); }
    Vec3 point(int i) const { return radius * directions[size_t(i)]; }
    double area_weight(int i) const { return radius * radius * weights[size_t(i)]; }
    SphereGrid scaled(double r) const { SphereGrid g = *this; g.radius = r; return g; }

    // Gauss-Legendre in cos(theta) times trapezoid in phi
    static SphereGrid gauss_product(int n_theta, int n_phi, double radius = 1.0);
    static SphereGrid for_degree(int degree, double radius = 1.0);
    // 26-point rule exact to degree 7
    static SphereGrid lebedev26(double radius = 1.0);
};

// Orthonormal tangential pair (t1, t2) with t1 x t2 = d.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& d);

}  // namespace mvsc
