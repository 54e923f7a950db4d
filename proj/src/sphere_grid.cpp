#include "mvsc/sphere_grid.hpp"

#include <cmath>

namespace mvsc {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
    nodes.assign(size_t(n), 0.0);
    weights.assign(size_t(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) { p1 = x; p0 = 1.0; }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        nodes[size_t(i)] = x;
        weights[size_t(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

SphereGrid SphereGrid::gauss_product(int n_theta, int n_phi, double radius)
{
    if (n_theta < 1 || n_phi < 1) throw Error("SphereGrid: empty rule");
    SphereGrid g;
    g.radius = radius;
    std::vector<double> x, w;
    gauss_legendre(n_theta, x, w);
    for (int i = 0; i < n_theta; ++i) {
        const double ct = x[size_t(i)], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int j = 0; j < n_phi; ++j) {
            const double ph = 2 * pi * j / n_phi;
            g.directions.emplace_back(st * std::cos(ph), st * std::sin(ph), ct);
            g.weights.push_back(w[size_t(i)] * 2 * pi / n_phi);
        }
    }
    g.degree = std::min(2 * n_theta - 1, n_phi - 1);
    return g;
}

SphereGrid SphereGrid::for_degree(int degree, double radius)
{
    return gauss_product((degree + 2) / 2, degree + 1, radius);
}

SphereGrid SphereGrid::lebedev26(double radius)
{
    SphereGrid g;
    g.radius = radius;
    auto add = [&](Vec3 v, double w) {
        g.directions.push_back(v.normalized());
        g.weights.push_back(4 * pi * w);
    };
    for (int d = 0; d < 3; ++d)
        for (int s : {1, -1}) {
            Vec3 v = Vec3::Zero();
            v(d) = s;
            add(v, 1.0 / 21.0);
        }
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            for (int sa : {1, -1})
                for (int sb : {1, -1}) {
                    Vec3 v = Vec3::Zero();
                    v(a) = sa;
                    v(b) = sb;
                    add(v, 4.0 / 105.0);
                }
    for (int sx : {1, -1})
        for (int sy : {1, -1})
            for (int sz : {1, -1}) add(Vec3(sx, sy, sz), 9.0 / 280.0);
    g.degree = 7;
    return g;
}

std::pair<Vec3, Vec3> tangent_basis(const Vec3& d)
{
    int axis = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(d(k)) < std::abs(d(axis))) axis = k;
    Vec3 e = Vec3::Zero();
    e(axis) = 1.0;
    const Vec3 t1 = (e - e.dot(d) * d).normalized();
    const Vec3 t2 = d.cross(t1);
    return {t1, t2};
}

}  // namespace mvsc
