#pragma once

#include <complex>

#include <Eigen/Core>

namespace spindrift {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat2c = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

}  // namespace spindrift
