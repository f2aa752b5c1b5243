#pragma once

#include <Eigen/Dense>

// Planar spatial algebra. Motion vectors are [omega, vx, vz], force vectors
// are [torque, fx, fz]; the working plane is (x, z) with z up and angles
// counterclockwise (pitch about the out-of-plane axis).

namespace torl {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline Mat2 rot2(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

// 90-degree counterclockwise rotation; perp(r) = zhat x r in 3D terms.
inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

// Coordinate transform from frame A to frame B.
//   E : rotation taking A-frame vectors into B-frame coordinates
//   r : origin of B expressed in A coordinates
struct Xform {
  Mat2 E = Mat2::Identity();
  Vec2 r = Vec2::Zero();

  static Xform Identity() { return {}; }

  // X_CA = X_CB * X_BA
  Xform operator*(const Xform& ba) const {
    Xform ca;
    ca.E = E * ba.E;
    ca.r = ba.r + ba.E.transpose() * r;
    return ca;
  }

  Vec2 point_to_parent(const Vec2& xb) const { return E.transpose() * xb + r; }
  Vec2 point_to_child(const Vec2& xa) const { return E * (xa - r); }

  Vec3 motion(const Vec3& va) const {
    Vec3 vb;
    vb(0) = va(0);
    vb.tail<2>() = E * (va.tail<2>() + va(0) * perp(r));
    return vb;
  }
  Vec3 motion_inv(const Vec3& vb) const {
    Vec3 va;
    va(0) = vb(0);
    va.tail<2>() = E.transpose() * vb.tail<2>() - vb(0) * perp(r);
    return va;
  }
  Vec3 force(const Vec3& fa) const {
    Vec3 fb;
    fb(0) = fa(0) - cross2(r, fa.tail<2>());
    fb.tail<2>() = E * fa.tail<2>();
    return fb;
  }
  Vec3 force_inv(const Vec3& fb) const {
    Vec3 fa;
    fa.tail<2>() = E.transpose() * fb.tail<2>();
    fa(0) = fb(0) + cross2(r, fa.tail<2>());
    return fa;
  }

  Mat3 motion_matrix() const {
    Mat3 m = Mat3::Zero();
    m(0, 0) = 1.0;
    m.block<2, 1>(1, 0) = E * perp(r);
    m.block<2, 2>(1, 1) = E;
    return m;
  }
};

// Motion-cross-motion product: crm(v) * u.
inline Vec3 crm(const Vec3& v, const Vec3& u) {
  return Vec3(0.0,
              -v(0) * u(2) + u(0) * v(2),
              v(0) * u(1) - u(0) * v(1));
}

// Motion-cross-force product: crf(v) * f = -crm(v)^T * f.
inline Vec3 crf(const Vec3& v, const Vec3& f) {
  return Vec3(v(1) * f(2) - v(2) * f(1),
              -v(0) * f(2),
              v(0) * f(1));
}

// Spatial inertia of a rigid body about its frame origin.
//   mass m, center of mass c (body frame), rotational inertia about the com.
inline Mat3 spatial_inertia(double m, const Vec2& c, double i_com) {
  Mat3 I;
  const double io = i_com + m * c.squaredNorm();
  I << io, -m * c.y(), m * c.x(),
      -m * c.y(), m, 0.0,
      m * c.x(), 0.0, m;
  return I;
}

}  // namespace torl
