#include "vgr/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vgr {

Camera::Camera(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) {
    throw ContractError("camera dimensions must be positive, got " + std::to_string(w) + "x" +
                        std::to_string(h));
  }
}

template <typename Scalar>
Mat3<Scalar> quat_to_rot(const Vec4<Scalar>& q_raw) {
  const Scalar norm = q_raw.norm();
  if (!(norm > std::numeric_limits<Scalar>::epsilon())) {
    throw DegenerateInput("quat_to_rot: zero quaternion");
  }
  const Vec4<Scalar> q = q_raw / norm;
  const Scalar w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3<Scalar> r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),   //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

template <typename Scalar>
Vec4<Scalar> quat_to_rot_backward(const Vec4<Scalar>& q_raw, const Mat3<Scalar>& g) {
  const Scalar norm = q_raw.norm();
  if (!(norm > std::numeric_limits<Scalar>::epsilon())) {
    throw DegenerateInput("quat_to_rot_backward: zero quaternion");
  }
  const Vec4<Scalar> q = q_raw / norm;
  const Scalar w = q[0], x = q[1], y = q[2], z = q[3];
  // d R / d (w, x, y, z) contracted with g.
  Vec4<Scalar> dq;
  dq[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  dq[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) +
               z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
  dq[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
               w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
  dq[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2 * z * g(1, 1) +
               y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  // Chain through q / |q|.
  return (dq - q * q.dot(dq)) / norm;
}

template <typename Scalar>
Column<Scalar> sh_basis(const Vec3<Scalar>& v, int degree) {
  if (degree < 0 || degree > 3) throw ContractError("sh degree must be in [0, 3]");
  constexpr double c1 = 0.4886025119029199;
  constexpr double c2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
  constexpr double c3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                           0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};
  Column<Scalar> b(sh_coeff_count(degree));
  b[0] = Scalar(kShC0);
  if (degree == 0) return b;
  const Scalar x = v.x(), y = v.y(), z = v.z();
  b[1] = Scalar(-c1) * y;
  b[2] = Scalar(c1) * z;
  b[3] = Scalar(-c1) * x;
  if (degree == 1) return b;
  const Scalar xx = x * x, yy = y * y, zz = z * z;
  b[4] = Scalar(c2[0]) * x * y;
  b[5] = Scalar(c2[1]) * y * z;
  b[6] = Scalar(c2[2]) * (2 * zz - xx - yy);
  b[7] = Scalar(c2[3]) * x * z;
  b[8] = Scalar(c2[4]) * (xx - yy);
  if (degree == 2) return b;
  b[9] = Scalar(c3[0]) * y * (3 * xx - yy);
  b[10] = Scalar(c3[1]) * x * y * z;
  b[11] = Scalar(c3[2]) * y * (4 * zz - xx - yy);
  b[12] = Scalar(c3[3]) * z * (2 * zz - 3 * xx - 3 * yy);
  b[13] = Scalar(c3[4]) * x * (4 * zz - xx - yy);
  b[14] = Scalar(c3[5]) * z * (xx - yy);
  b[15] = Scalar(c3[6]) * x * (xx - 3 * yy);
  return b;
}

template <typename Scalar>
Vec3<Scalar> sh_eval(std::span<const Scalar> sh, const Vec3<Scalar>& v, int degree) {
  const int terms = sh_coeff_count(degree);
  if (Index(sh.size()) < 3 * terms) throw ContractError("sh_eval: degree exceeds stored degree");
  const Column<Scalar> b = sh_basis(v, degree);
  Vec3<Scalar> c = Vec3<Scalar>::Constant(Scalar(0.5));
  for (int k = 0; k < terms; ++k) {
    for (int ch = 0; ch < 3; ++ch) c[ch] += b[k] * sh[3 * k + ch];
  }
  return c.cwiseMax(Scalar(0));
}

const char* block_name(Block b) {
  switch (b) {
    case Block::kMu0: return "mu0";
    case Block::kQ0: return "q0";
    case Block::kLogScale: return "log_scale";
    case Block::kOpacity: return "opacity_logit";
    case Block::kSh: return "sh";
    case Block::kPoly: return "poly";
    case Block::kFourCos: return "four_cos";
    case Block::kFourSin: return "four_sin";
    case Block::kRotPoly: return "rot_poly";
    case Block::kRotCos: return "rot_cos";
    case Block::kRotSin: return "rot_sin";
    case Block::kLabel: return "label";
    case Block::kFeature: return "feature";
  }
  return "?";
}

Index block_cols(Block b, const SetLayout& l) {
  const Index rot = l.rotation_dynamics ? 1 : 0;
  switch (b) {
    case Block::kMu0: return 3;
    case Block::kQ0: return 4;
    case Block::kLogScale: return 3;
    case Block::kOpacity: return 1;
    case Block::kSh: return 3 * sh_coeff_count(l.sh_degree);
    case Block::kPoly: return 3 * Index(l.poly_order);
    case Block::kFourCos:
    case Block::kFourSin: return 3 * Index(l.fourier_order);
    case Block::kRotPoly: return rot * 4 * l.poly_order;
    case Block::kRotCos:
    case Block::kRotSin: return rot * 4 * l.fourier_order;
    case Block::kLabel: return 1;
    case Block::kFeature: return l.feature_dim;
  }
  return 0;
}

#define VGR_INSTANTIATE(S)                                                                 \
  template Mat3<S> quat_to_rot<S>(const Vec4<S>&);                                         \
  template Vec4<S> quat_to_rot_backward<S>(const Vec4<S>&, const Mat3<S>&);                \
  template Column<S> sh_basis<S>(const Vec3<S>&, int);                                     \
  template Vec3<S> sh_eval<S>(std::span<const S>, const Vec3<S>&, int);

VGR_INSTANTIATE(float)
VGR_INSTANTIATE(double)
#undef VGR_INSTANTIATE

}  // namespace vgr
