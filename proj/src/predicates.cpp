// SPDX-License-Identifier: Apache-2.0
#include "splat2twin/predicates.hpp"

#include <Eigen/Geometry>
#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <limits>

namespace s2t {

namespace {

using Rational = boost::multiprecision::cpp_rational;

// Unit roundoff. Every arithmetic op contributes at most u relative error.
constexpr double kU = std::numeric_limits<double>::epsilon() / 2.0;
// Covers the second-order terms dropped by the running-error recurrences
// plus rounding inside the bound arithmetic itself.
constexpr double kSlack = 1.0 + 1e-6;

// Value with a running forward-error bound: |v - exact| <= e given the
// operands' own bounds (Higham-style recurrences, slightly inflated).
struct Guarded {
    double v;
    double e;
};

inline Guarded exact(double x) { return {x, 0.0}; }

inline Guarded diff(double a, double b) {
    const double v = a - b;
    return {v, kU * std::abs(v)};
}

inline Guarded operator+(Guarded a, Guarded b) {
    const double v = a.v + b.v;
    return {v, a.e + b.e + kU * (1.0 + 2.0 * kU) * std::abs(v)};
}

inline Guarded operator-(Guarded a, Guarded b) {
    const double v = a.v - b.v;
    return {v, a.e + b.e + kU * (1.0 + 2.0 * kU) * std::abs(v)};
}

inline Guarded operator*(Guarded a, Guarded b) {
    const double v = a.v * b.v;
    return {v, a.e * std::abs(b.v) + b.e * std::abs(a.v) + a.e * b.e +
                   kU * (1.0 + 2.0 * kU) * std::abs(v)};
}

// Sign when certain, otherwise nullopt triggers the exact path.
inline int certified_sign(const Guarded& g, bool& certain) {
    const double bound = g.e * kSlack;
    if (g.v > bound) {
        certain = true;
        return 1;
    }
    if (g.v < -bound) {
        certain = true;
        return -1;
    }
    certain = (bound == 0.0);  // exact zero with no accumulated error
    return 0;
}

inline int sign_of(const Rational& r) {
    if (r > 0) return 1;
    if (r < 0) return -1;
    return 0;
}

int orient3d_exact(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                   const Eigen::Vector3d& d) {
    const Rational ax(a.x()), ay(a.y()), az(a.z());
    const Rational ux = Rational(b.x()) - ax, uy = Rational(b.y()) - ay,
                   uz = Rational(b.z()) - az;
    const Rational vx = Rational(c.x()) - ax, vy = Rational(c.y()) - ay,
                   vz = Rational(c.z()) - az;
    const Rational wx = Rational(d.x()) - ax, wy = Rational(d.y()) - ay,
                   wz = Rational(d.z()) - az;
    const Rational det = ux * (vy * wz - vz * wy) - uy * (vx * wz - vz * wx) +
                         uz * (vx * wy - vy * wx);
    return sign_of(det);
}

int insphere_exact(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                   const Eigen::Vector3d& d, const Eigen::Vector3d& e) {
    const Rational ex(e.x()), ey(e.y()), ez(e.z());
    Rational m[4][4];
    const Eigen::Vector3d* pts[4] = {&a, &b, &c, &d};
    for (int r = 0; r < 4; ++r) {
        const Rational px = Rational(pts[r]->x()) - ex;
        const Rational py = Rational(pts[r]->y()) - ey;
        const Rational pz = Rational(pts[r]->z()) - ez;
        m[r][0] = px;
        m[r][1] = py;
        m[r][2] = pz;
        m[r][3] = px * px + py * py + pz * pz;
    }
    // Laplace expansion over 2x2 minors of the first two columns.
    auto minor2 = [&](int r0, int r1, int c0, int c1) {
        return m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    };
    const Rational det = minor2(0, 1, 0, 1) * minor2(2, 3, 2, 3) -
                         minor2(0, 2, 0, 1) * minor2(1, 3, 2, 3) +
                         minor2(0, 3, 0, 1) * minor2(1, 2, 2, 3) +
                         minor2(1, 2, 0, 1) * minor2(0, 3, 2, 3) -
                         minor2(1, 3, 0, 1) * minor2(0, 2, 2, 3) +
                         minor2(2, 3, 0, 1) * minor2(0, 1, 2, 3);
    // det < 0 <=> e strictly inside for a positively oriented (a,b,c,d).
    return -sign_of(det);
}

}  // namespace

int orient3d(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
             const Eigen::Vector3d& d) {
    const Guarded ux = diff(b.x(), a.x()), uy = diff(b.y(), a.y()), uz = diff(b.z(), a.z());
    const Guarded vx = diff(c.x(), a.x()), vy = diff(c.y(), a.y()), vz = diff(c.z(), a.z());
    const Guarded wx = diff(d.x(), a.x()), wy = diff(d.y(), a.y()), wz = diff(d.z(), a.z());
    const Guarded det =
        ux * (vy * wz - vz * wy) - uy * (vx * wz - vz * wx) + uz * (vx * wy - vy * wx);
    bool certain = false;
    const int s = certified_sign(det, certain);
    if (certain) return s;
    return orient3d_exact(a, b, c, d);
}

int insphere(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
             const Eigen::Vector3d& d, const Eigen::Vector3d& e) {
    const Eigen::Vector3d* pts[4] = {&a, &b, &c, &d};
    Guarded m[4][4];
    for (int r = 0; r < 4; ++r) {
        const Guarded px = diff(pts[r]->x(), e.x());
        const Guarded py = diff(pts[r]->y(), e.y());
        const Guarded pz = diff(pts[r]->z(), e.z());
        m[r][0] = px;
        m[r][1] = py;
        m[r][2] = pz;
        m[r][3] = px * px + py * py + pz * pz;
    }
    auto minor2 = [&](int r0, int r1, int c0, int c1) {
        return m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    };
    const Guarded det = minor2(0, 1, 0, 1) * minor2(2, 3, 2, 3) -
                        minor2(0, 2, 0, 1) * minor2(1, 3, 2, 3) +
                        minor2(0, 3, 0, 1) * minor2(1, 2, 2, 3) +
                        minor2(1, 2, 0, 1) * minor2(0, 3, 2, 3) -
                        minor2(1, 3, 0, 1) * minor2(0, 2, 2, 3) +
                        minor2(2, 3, 0, 1) * minor2(0, 1, 2, 3);
    bool certain = false;
    const int s = certified_sign(det, certain);
    if (certain) return -s;
    return insphere_exact(a, b, c, d, e);
}

int incircle_coplanar(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                      const Eigen::Vector3d& c, const Eigen::Vector3d& d) {
    // Project along the dominant component of the triangle normal. The
    // projected triangle keeps at least 1/sqrt(3) of its area, so a valid
    // (non-collinear) triangle never collapses.
    const Eigen::Vector3d n = (b - a).cross(c - a);
    int drop = 0;
    if (std::abs(n.y()) > std::abs(n.x())) drop = 1;
    if (std::abs(n.z()) > std::abs(n[drop])) drop = 2;
    const int i0 = (drop + 1) % 3, i1 = (drop + 2) % 3;
    const double pa[2] = {a[i0], a[i1]}, pb[2] = {b[i0], b[i1]}, pc[2] = {c[i0], c[i1]},
                 pd[2] = {d[i0], d[i1]};

    // orient2d of the projection decides the sign convention for incircle.
    const auto orient2d = [&](const double* p, const double* q, const double* r) -> int {
        const Guarded det = diff(q[0], p[0]) * diff(r[1], p[1]) -
                            diff(q[1], p[1]) * diff(r[0], p[0]);
        bool certain = false;
        const int s = certified_sign(det, certain);
        if (certain) return s;
        const Rational ex = (Rational(q[0]) - Rational(p[0])) * (Rational(r[1]) - Rational(p[1])) -
                            (Rational(q[1]) - Rational(p[1])) * (Rational(r[0]) - Rational(p[0]));
        return sign_of(ex);
    };
    const int orientation = orient2d(pa, pb, pc);
    if (orientation == 0) return 0;  // degenerate facet; treated as on-circle

    const auto row = [&](const double* p, Guarded out[3]) {
        out[0] = diff(p[0], pd[0]);
        out[1] = diff(p[1], pd[1]);
        out[2] = out[0] * out[0] + out[1] * out[1];
    };
    Guarded ra[3], rb[3], rc[3];
    row(pa, ra);
    row(pb, rb);
    row(pc, rc);
    const Guarded det = ra[0] * (rb[1] * rc[2] - rb[2] * rc[1]) -
                        ra[1] * (rb[0] * rc[2] - rb[2] * rc[0]) +
                        ra[2] * (rb[0] * rc[1] - rb[1] * rc[0]);
    bool certain = false;
    int s = certified_sign(det, certain);
    if (!certain) {
        const Rational dx(pd[0]), dy(pd[1]);
        Rational rm[3][3];
        const double* rows[3] = {pa, pb, pc};
        for (int r = 0; r < 3; ++r) {
            const Rational px = Rational(rows[r][0]) - dx;
            const Rational py = Rational(rows[r][1]) - dy;
            rm[r][0] = px;
            rm[r][1] = py;
            rm[r][2] = px * px + py * py;
        }
        const Rational ex = rm[0][0] * (rm[1][1] * rm[2][2] - rm[1][2] * rm[2][1]) -
                            rm[0][1] * (rm[1][0] * rm[2][2] - rm[1][2] * rm[2][0]) +
                            rm[0][2] * (rm[1][0] * rm[2][1] - rm[1][1] * rm[2][0]);
        s = sign_of(ex);
    }
    return orientation > 0 ? s : -s;
}

}  // namespace s2t
