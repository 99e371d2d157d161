#pragma once

// Per-Gaussian trajectories (polynomial + Fourier bases over normalized time),
// k-nearest-neighbour graphs, and the Kabsch rotation used by the rigidity loss.

#include "vgr/core.hpp"

#include <optional>
#include <vector>

namespace vgr {

/// Normalized frame times t_k = k / (n - 1).
class TimeMap {
 public:
  explicit TimeMap(int frame_count);

  int frame_count() const { return frame_count_; }
  double time(int frame) const;
  /// Nearest frame index for a normalized time (clamped).
  int frame_of(double t) const;

 private:
  int frame_count_;
};

/// Basis values at time t: [t^1..t^N, cos(w l t).., sin(w l t)..], l = 1..L.
struct TrajectoryBasis {
  std::vector<double> poly;
  std::vector<double> cos;
  std::vector<double> sin;
};

TrajectoryBasis trajectory_basis(const SetLayout& layout, double t);

/// mu(t) = mu0 + sum_n p_n t^n + sum_l (c_l cos(w l t) + s_l sin(w l t)).
template <typename Scalar>
Points3<Scalar> eval_position(const GaussianSet<Scalar>& set, double t);

/// Adds d_mu (gradient w.r.t. mu(t)) into mu0 and the trajectory blocks of `grads`.
template <typename Scalar>
void eval_position_backward(const SetLayout& layout, double t, const Points3<Scalar>& d_mu,
                            GaussianSet<Scalar>& grads);

/// Raw quaternion q0 + basis expansion (q0 itself without rotation dynamics).
template <typename Scalar>
Quats<Scalar> eval_rotation_raw(const GaussianSet<Scalar>& set, double t);

template <typename Scalar>
void eval_rotation_backward(const SetLayout& layout, double t, const Quats<Scalar>& d_q,
                            GaussianSet<Scalar>& grads);

/// Unit quaternions at time t. Throws DegenerateInput naming the first
/// Gaussian whose raw quaternion norm falls below 1e-8.
template <typename Scalar>
Quats<Scalar> eval_rotation(const GaussianSet<Scalar>& set, double t);

// ---------------------------------------------------------------------------

struct NeighborGraph {
  /// count x K, padded with -1 where a label group had fewer than K candidates.
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> neighbors;
  double build_time = 0.0;
  bool label_mask = false;
  /// Set when some row could not be filled to K.
  bool incomplete = false;

  Index count() const { return neighbors.rows(); }
  int k() const { return int(neighbors.cols()); }
};

/// Exact Euclidean K-NN on a uniform grid; ties broken by smaller index.
/// With `labels`, candidates are restricted to the same binarized label (> 0.5).
template <typename Scalar>
NeighborGraph build_neighbors(const Points3<Scalar>& positions, int k,
                              const Column<Scalar>* labels = nullptr, double build_time = 0.0);

struct KabschResult {
  Mat3<double> rotation = Mat3<double>::Identity();
  bool degenerate = false;
};

/// argmin over SO(3) of sum ||src_k - R dst_k||^2.
KabschResult kabsch_rotation(std::span<const Vec3<double>> src, std::span<const Vec3<double>> dst);

}  // namespace vgr
