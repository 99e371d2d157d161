#pragma once

// Shared domain types for the video Gaussian representation: the columnar
// Gaussian store, image planes, the orthographic camera, and the small
// quaternion / covariance / spherical-harmonic algebra every module uses.
//
// Camera space: x, y in [-1, 1] span the frame, z in [0, 1] runs near to far.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vgr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (shape mismatch, missing tape...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Inputs that admit no meaningful answer (zero quaternion, empty edge set...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared during optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
template <typename Scalar>
using Quats = Eigen::Matrix<Scalar, Eigen::Dynamic, 4, Eigen::RowMajor>;
template <typename Scalar>
using Column = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vec4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

inline constexpr double kShC0 = 0.28209479177387814;

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
Scalar logit(Scalar p) {
  return std::log(p / (Scalar(1) - p));
}

// ---------------------------------------------------------------------------
// Camera

/// Fixed identity-pose orthographic camera. Pixel (i, j) is centred at
/// (i + 0.5, j + 0.5); camera x, y in [-1, 1] map onto [0, W] x [0, H].
struct Camera {
  int width = 0;
  int height = 0;

  Camera() = default;
  Camera(int w, int h);

  Index pixel_count() const { return Index(width) * Index(height); }

  /// Jacobian of the projection, [[W/2, 0, 0], [0, H/2, 0]].
  template <typename Scalar>
  Eigen::Matrix<Scalar, 2, 3> jacobian() const {
    Eigen::Matrix<Scalar, 2, 3> j = Eigen::Matrix<Scalar, 2, 3>::Zero();
    j(0, 0) = Scalar(width) / Scalar(2);
    j(1, 1) = Scalar(height) / Scalar(2);
    return j;
  }
};

/// u = (x + 1) / 2 * W, v = (y + 1) / 2 * H; z is discarded.
template <typename Scalar>
Vec2<Scalar> project_point(const Vec3<Scalar>& mu, const Camera& cam) {
  return {(mu.x() + Scalar(1)) * Scalar(cam.width) / Scalar(2),
          (mu.y() + Scalar(1)) * Scalar(cam.height) / Scalar(2)};
}

// ---------------------------------------------------------------------------
// Image planes

/// Row-major pixels, channel-fastest: values(y * W + x, c).
template <typename Scalar>
struct ImagePlane {
  int width = 0;
  int height = 0;
  RowMatrix<Scalar> values;

  ImagePlane() = default;
  ImagePlane(int w, int h, int channels)
      : width(w), height(h), values(RowMatrix<Scalar>::Zero(Index(w) * h, channels)) {}

  int channels() const { return int(values.cols()); }
  Index pixel_count() const { return Index(width) * height; }
  bool same_shape(const ImagePlane& o) const {
    return width == o.width && height == o.height && channels() == o.channels();
  }

  Scalar& operator()(int x, int y, int c = 0) { return values(Index(y) * width + x, c); }
  Scalar operator()(int x, int y, int c = 0) const { return values(Index(y) * width + x, c); }

  template <typename Other>
  ImagePlane<Other> cast() const {
    ImagePlane<Other> out;
    out.width = width;
    out.height = height;
    out.values = values.template cast<Other>();
    return out;
  }
};

template <typename Scalar>
void require_same_shape(const ImagePlane<Scalar>& a, const ImagePlane<Scalar>& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw ContractError(std::string(what) + ": plane shapes differ (" +
                        std::to_string(a.width) + "x" + std::to_string(a.height) + "x" +
                        std::to_string(a.channels()) + " vs " + std::to_string(b.width) + "x" +
                        std::to_string(b.height) + "x" + std::to_string(b.channels()) + ")");
  }
}

// ---------------------------------------------------------------------------
// Quaternion / covariance algebra

/// Rotation matrix of q = (w, x, y, z); q is normalized first.
/// Throws DegenerateInput for a (numerically) zero quaternion.
template <typename Scalar>
Mat3<Scalar> quat_to_rot(const Vec4<Scalar>& q);

/// Gradient of a loss w.r.t. the raw (unnormalized) quaternion, given the
/// gradient w.r.t. the rotation matrix it produces.
template <typename Scalar>
Vec4<Scalar> quat_to_rot_backward(const Vec4<Scalar>& q, const Mat3<Scalar>& d_rot);

/// Hamilton product a * b, both (w, x, y, z).
template <typename Scalar>
Vec4<Scalar> quat_multiply(const Vec4<Scalar>& a, const Vec4<Scalar>& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

/// Sigma = R diag(s^2) R^T.
template <typename Scalar>
Mat3<Scalar> build_covariance(const Vec4<Scalar>& q, const Vec3<Scalar>& s) {
  const Mat3<Scalar> m = quat_to_rot(q) * s.asDiagonal();
  return m * m.transpose();
}

// ---------------------------------------------------------------------------
// Spherical harmonics

inline constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Real SH basis values at direction v, (degree + 1)^2 entries.
template <typename Scalar>
Column<Scalar> sh_basis(const Vec3<Scalar>& v, int degree);

/// Colour from an SH block laid out coefficient-major, channel-fastest
/// (sh[3k + c]). Offset by 0.5 and clamped at zero.
template <typename Scalar>
Vec3<Scalar> sh_eval(std::span<const Scalar> sh, const Vec3<Scalar>& v, int degree);

/// The orthographic camera looks down +z; every Gaussian shares this view direction.
template <typename Scalar>
Vec3<Scalar> view_direction() {
  return Vec3<Scalar>(0, 0, 1);
}

// ---------------------------------------------------------------------------
// Gaussian store

enum class FourierMode : std::uint32_t {
  kFullPeriod = 0,  // angular argument 2*pi*l*t, one fundamental period per video
  kLiteral = 1,     // angular argument l*t
};

/// Shape parameters shared by a GaussianSet and everything mirroring it.
struct SetLayout {
  int sh_degree = 0;
  int poly_order = 4;
  int fourier_order = 4;
  int feature_dim = 0;
  bool rotation_dynamics = false;
  FourierMode fourier_mode = FourierMode::kFullPeriod;

  bool operator==(const SetLayout&) const = default;
};

/// Per-Gaussian trajectory coefficients. Blocks are term-major: poly(i, 3n + a)
/// is the coefficient of t^(n+1) on axis a. Rotation blocks use 4 channels.
template <typename Scalar>
struct TrajectoryCoeffs {
  RowMatrix<Scalar> poly;
  RowMatrix<Scalar> four_cos;
  RowMatrix<Scalar> four_sin;
  RowMatrix<Scalar> rot_poly;
  RowMatrix<Scalar> rot_cos;
  RowMatrix<Scalar> rot_sin;
};

template <typename Scalar>
struct GaussianSet {
  SetLayout layout;
  Points3<Scalar> mu0;
  Quats<Scalar> q0;
  Points3<Scalar> log_scale;
  Column<Scalar> opacity_logit;
  RowMatrix<Scalar> sh;
  TrajectoryCoeffs<Scalar> traj;
  Column<Scalar> label;
  RowMatrix<Scalar> feature;

  Index count() const { return mu0.rows(); }

  /// All-zero set of the given size (quaternions zero too).
  static GaussianSet zeros(Index count, const SetLayout& layout);
  GaussianSet zeros_like() const { return zeros(count(), layout); }

  /// Throws ContractError unless every block has `count()` rows and the
  /// column counts implied by `layout`.
  void check_shapes() const;

  /// Rows in the given order (indices may repeat).
  GaussianSet gather(std::span<const Index> rows) const;
  /// Appends all rows of `other`, which must share the layout.
  void append(const GaussianSet& other);

  template <typename Other>
  GaussianSet<Other> cast() const;

  Vec3<Scalar> scale(Index i) const { return log_scale.row(i).transpose().array().exp(); }
  Scalar opacity(Index i) const { return sigmoid(opacity_logit[i]); }
};

/// Stable identifiers for the parameter blocks, in serialization order.
enum class Block {
  kMu0,
  kQ0,
  kLogScale,
  kOpacity,
  kSh,
  kPoly,
  kFourCos,
  kFourSin,
  kRotPoly,
  kRotCos,
  kRotSin,
  kLabel,
  kFeature,
};

const char* block_name(Block b);

/// Calls f(Block, block_of_each_set...) for every parameter block in
/// serialization order. All sets must share a layout.
template <typename F, typename... Sets>
void visit_blocks(F&& f, Sets&... sets) {
  f(Block::kMu0, sets.mu0...);
  f(Block::kQ0, sets.q0...);
  f(Block::kLogScale, sets.log_scale...);
  f(Block::kOpacity, sets.opacity_logit...);
  f(Block::kSh, sets.sh...);
  f(Block::kPoly, sets.traj.poly...);
  f(Block::kFourCos, sets.traj.four_cos...);
  f(Block::kFourSin, sets.traj.four_sin...);
  f(Block::kRotPoly, sets.traj.rot_poly...);
  f(Block::kRotCos, sets.traj.rot_cos...);
  f(Block::kRotSin, sets.traj.rot_sin...);
  f(Block::kLabel, sets.label...);
  f(Block::kFeature, sets.feature...);
}

/// Expected column count of a block for a layout.
Index block_cols(Block b, const SetLayout& layout);

// ---------------------------------------------------------------------------

template <typename Scalar>
GaussianSet<Scalar> GaussianSet<Scalar>::zeros(Index n, const SetLayout& layout) {
  GaussianSet s;
  s.layout = layout;
  visit_blocks(
      [&](Block b, auto& m) {
        m.setZero(n, block_cols(b, layout));
      },
      s);
  return s;
}

template <typename Scalar>
void GaussianSet<Scalar>::check_shapes() const {
  const Index n = count();
  visit_blocks(
      [&](Block b, const auto& m) {
        if (m.rows() != n || m.cols() != block_cols(b, layout)) {
          throw ContractError(std::string("GaussianSet block ") + block_name(b) + " has shape " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                              ", expected " + std::to_string(n) + "x" +
                              std::to_string(block_cols(b, layout)));
        }
      },
      *this);
}

template <typename Scalar>
GaussianSet<Scalar> GaussianSet<Scalar>::gather(std::span<const Index> rows) const {
  GaussianSet out;
  out.layout = layout;
  visit_blocks(
      [&](Block, auto& dst, const auto& src) {
        dst.resize(Index(rows.size()), src.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) dst.row(Index(r)) = src.row(rows[r]);
      },
      out, *this);
  return out;
}

template <typename Scalar>
void GaussianSet<Scalar>::append(const GaussianSet& other) {
  if (!(other.layout == layout)) throw ContractError("append: layouts differ");
  visit_blocks(
      [&](Block, auto& dst, const auto& src) {
        const Index old = dst.rows();
        dst.conservativeResize(old + src.rows(), Eigen::NoChange);
        dst.bottomRows(src.rows()) = src;
      },
      *this, other);
}

template <typename Scalar>
template <typename Other>
GaussianSet<Other> GaussianSet<Scalar>::cast() const {
  GaussianSet<Other> out;
  out.layout = layout;
  visit_blocks([&](Block, auto& dst, const auto& src) { dst = src.template cast<Other>(); }, out,
               *this);
  return out;
}

using GaussianSetf = GaussianSet<float>;
using GaussianSetd = GaussianSet<double>;
using ImagePlanef = ImagePlane<float>;

}  // namespace vgr
