// SPDX-License-Identifier: Apache-2.0
//
// Robust geometric predicates: double-precision evaluation guarded by a
// forward error bound, with an exact rational-arithmetic fallback when the
// bound cannot certify the sign. Results are therefore exact signs.

#pragma once

#include <Eigen/Core>

namespace s2t {

/// Sign of det[b-a, c-a, d-a]: +1 when d lies on the positive side of the
/// oriented plane (a,b,c) (left-handed screw of a->b->c pointing at d),
/// 0 when coplanar, -1 otherwise.
int orient3d(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
             const Eigen::Vector3d& d);

/// For a positively oriented tetrahedron (a,b,c,d) (orient3d(a,b,c,d) > 0):
/// +1 when e lies strictly inside the circumsphere, 0 on it, -1 outside.
int insphere(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
             const Eigen::Vector3d& d, const Eigen::Vector3d& e);

/// For coplanar points a, b, c, d with triangle (a,b,c): +1 when d lies
/// strictly inside the circumcircle of (a,b,c) within their common plane,
/// 0 on it, -1 outside. Independent of the triangle's orientation.
int incircle_coplanar(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                      const Eigen::Vector3d& c, const Eigen::Vector3d& d);

}  // namespace s2t
