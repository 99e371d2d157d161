#include "vgr/motion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>

namespace vgr {

TimeMap::TimeMap(int frame_count) : frame_count_(frame_count) {
  if (frame_count < 2) throw ContractError("TimeMap: at least 2 frames required");
}

double TimeMap::time(int frame) const {
  if (frame < 0 || frame >= frame_count_) throw ContractError("TimeMap: frame out of range");
  return double(frame) / double(frame_count_ - 1);
}

int TimeMap::frame_of(double t) const {
  const long k = std::lround(t * double(frame_count_ - 1));
  return int(std::clamp<long>(k, 0, frame_count_ - 1));
}

TrajectoryBasis trajectory_basis(const SetLayout& layout, double t) {
  TrajectoryBasis b;
  b.poly.resize(std::size_t(layout.poly_order));
  double p = 1.0;
  for (int n = 0; n < layout.poly_order; ++n) {
    p *= t;
    b.poly[std::size_t(n)] = p;
  }
  const double omega =
      layout.fourier_mode == FourierMode::kFullPeriod ? 2.0 * std::numbers::pi : 1.0;
  b.cos.resize(std::size_t(layout.fourier_order));
  b.sin.resize(std::size_t(layout.fourier_order));
  for (int l = 1; l <= layout.fourier_order; ++l) {
    b.cos[std::size_t(l - 1)] = std::cos(omega * l * t);
    b.sin[std::size_t(l - 1)] = std::sin(omega * l * t);
  }
  return b;
}

namespace {

// out += sum_k basis[k] * block.middleCols(width * k, width)
template <typename Out, typename Block>
void add_expansion(Out& out, const Block& block, const std::vector<double>& basis, int width) {
  using Scalar = typename Out::Scalar;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    out += Scalar(basis[k]) * block.middleCols(Index(k) * width, width);
  }
}

template <typename Grad, typename Block>
void scatter_expansion(const Grad& d, Block& block, const std::vector<double>& basis, int width) {
  using Scalar = typename Block::Scalar;
  if (basis.empty()) return;
  std::vector<Scalar> w(basis.begin(), basis.end());
  for (Index i = 0; i < d.rows(); ++i) {
    Scalar* out = &block(i, 0);
    for (std::size_t k = 0; k < w.size(); ++k) {
      for (int c = 0; c < width; ++c) out[Index(k) * width + c] += w[k] * d(i, c);
    }
  }
}

}  // namespace

template <typename Scalar>
Points3<Scalar> eval_position(const GaussianSet<Scalar>& set, double t) {
  const TrajectoryBasis b = trajectory_basis(set.layout, t);
  Points3<Scalar> mu = set.mu0;
  add_expansion(mu, set.traj.poly, b.poly, 3);
  add_expansion(mu, set.traj.four_cos, b.cos, 3);
  add_expansion(mu, set.traj.four_sin, b.sin, 3);
  return mu;
}

template <typename Scalar>
void eval_position_backward(const SetLayout& layout, double t, const Points3<Scalar>& d_mu,
                            GaussianSet<Scalar>& grads) {
  const TrajectoryBasis b = trajectory_basis(layout, t);
  grads.mu0 += d_mu;
  scatter_expansion(d_mu, grads.traj.poly, b.poly, 3);
  scatter_expansion(d_mu, grads.traj.four_cos, b.cos, 3);
  scatter_expansion(d_mu, grads.traj.four_sin, b.sin, 3);
}

template <typename Scalar>
Quats<Scalar> eval_rotation_raw(const GaussianSet<Scalar>& set, double t) {
  Quats<Scalar> q = set.q0;
  if (!set.layout.rotation_dynamics) return q;
  const TrajectoryBasis b = trajectory_basis(set.layout, t);
  add_expansion(q, set.traj.rot_poly, b.poly, 4);
  add_expansion(q, set.traj.rot_cos, b.cos, 4);
  add_expansion(q, set.traj.rot_sin, b.sin, 4);
  return q;
}

template <typename Scalar>
void eval_rotation_backward(const SetLayout& layout, double t, const Quats<Scalar>& d_q,
                            GaussianSet<Scalar>& grads) {
  grads.q0 += d_q;
  if (!layout.rotation_dynamics) return;
  const TrajectoryBasis b = trajectory_basis(layout, t);
  scatter_expansion(d_q, grads.traj.rot_poly, b.poly, 4);
  scatter_expansion(d_q, grads.traj.rot_cos, b.cos, 4);
  scatter_expansion(d_q, grads.traj.rot_sin, b.sin, 4);
}

template <typename Scalar>
Quats<Scalar> eval_rotation(const GaussianSet<Scalar>& set, double t) {
  Quats<Scalar> q = eval_rotation_raw(set, t);
  for (Index i = 0; i < q.rows(); ++i) {
    const Scalar n = q.row(i).norm();
    if (!(n >= Scalar(1e-8))) {
      throw DegenerateInput("eval_rotation: degenerate rotation for Gaussian " +
                            std::to_string(i) + " at t=" + std::to_string(t));
    }
    q.row(i) /= n;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Neighbour search

namespace {

struct Candidate {
  double d2;
  int index;
  bool operator<(const Candidate& o) const {
    return d2 < o.d2 || (d2 == o.d2 && index < o.index);
  }
};

class UniformGrid {
 public:
  UniformGrid(const std::vector<Vec3<double>>& pts, const std::vector<int>& ids) : pts_(pts), ids_(ids) {
    Vec3<double> lo = Vec3<double>::Constant(std::numeric_limits<double>::infinity());
    Vec3<double> hi = -lo;
    for (int id : ids) {
      lo = lo.cwiseMin(pts[std::size_t(id)]);
      hi = hi.cwiseMax(pts[std::size_t(id)]);
    }
    origin_ = lo;
    const Vec3<double> extent = (hi - lo).cwiseMax(1e-9);
    // Roughly two points per cell, at most 128 cells per axis.
    double volume = extent.prod();
    cell_ = std::cbrt(volume * 2.0 / double(std::max<std::size_t>(ids.size(), 1)));
    cell_ = std::max(cell_, extent.maxCoeff() / 128.0);
    if (!(cell_ > 0)) cell_ = 1.0;
    for (int a = 0; a < 3; ++a) dims_[a] = int(std::floor(extent[a] / cell_)) + 1;

    const std::size_t cells = std::size_t(dims_[0]) * dims_[1] * dims_[2];
    start_.assign(cells + 1, 0);
    std::vector<std::size_t> cell_of(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      cell_of[k] = linear(cell_coords(pts[std::size_t(ids[k])]));
      ++start_[cell_of[k] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) start_[c + 1] += start_[c];
    members_.resize(ids.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t k = 0; k < ids.size(); ++k) members_[fill[cell_of[k]]++] = ids[k];
  }

  /// K nearest members of the grid to point `self` (excluded), sorted.
  std::vector<Candidate> query(int self, int k) const {
    const Vec3<double>& p = pts_[std::size_t(self)];
    std::priority_queue<Candidate> best;  // max-heap on (d2, index)
    const auto c = cell_coords(p);
    const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
    for (int r = 0; r <= max_ring; ++r) {
      visit_ring(c, r, [&](std::size_t cell) {
        for (std::size_t m = start_[cell]; m < start_[cell + 1]; ++m) {
          const int id = members_[m];
          if (id == self) continue;
          const Candidate cand{(pts_[std::size_t(id)] - p).squaredNorm(), id};
          if (int(best.size()) < k) {
            best.push(cand);
          } else if (cand < best.top()) {
            best.pop();
            best.push(cand);
          }
        }
      });
      // Anything in ring r + 1 or beyond is at least r * cell_ away.
      if (int(best.size()) == k) {
        const double bound = double(r) * cell_;
        if (best.top().d2 < bound * bound) break;
      }
    }
    std::vector<Candidate> out;
    out.reserve(best.size());
    while (!best.empty()) {
      out.push_back(best.top());
      best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  std::array<int, 3> cell_coords(const Vec3<double>& p) const {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) {
      c[a] = std::clamp(int(std::floor((p[a] - origin_[a]) / cell_)), 0, dims_[a] - 1);
    }
    return c;
  }
  std::size_t linear(const std::array<int, 3>& c) const {
    return (std::size_t(c[2]) * dims_[1] + c[1]) * dims_[0] + c[0];
  }

  template <typename F>
  void visit_ring(const std::array<int, 3>& c, int r, F&& f) const {
    for (int dz = -r; dz <= r; ++dz) {
      const int z = c[2] + dz;
      if (z < 0 || z >= dims_[2]) continue;
      for (int dy = -r; dy <= r; ++dy) {
        const int y = c[1] + dy;
        if (y < 0 || y >= dims_[1]) continue;
        const bool face = std::abs(dz) == r || std::abs(dy) == r;
        for (int dx = -r; dx <= r; dx += (face ? 1 : std::max(1, 2 * r))) {
          const int x = c[0] + dx;
          if (x < 0 || x >= dims_[0]) continue;
          f(linear({x, y, z}));
        }
      }
    }
  }

  const std::vector<Vec3<double>>& pts_;
  const std::vector<int>& ids_;
  Vec3<double> origin_;
  double cell_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::size_t> start_;
  std::vector<int> members_;
};

}  // namespace

template <typename Scalar>
NeighborGraph build_neighbors(const Points3<Scalar>& positions, int k, const Column<Scalar>* labels,
                              double build_time) {
  const Index n = positions.rows();
  if (k < 1) throw ContractError("build_neighbors: K must be positive");
  if (n <= k) throw ContractError("build_neighbors: need more than K points");
  if (labels && labels->rows() != n) throw ContractError("build_neighbors: label count mismatch");

  std::vector<Vec3<double>> pts(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pts[std::size_t(i)] = positions.row(i).transpose().template cast<double>();

  std::vector<std::vector<int>> groups(labels ? 2 : 1);
  for (Index i = 0; i < n; ++i) {
    const int g = labels ? ((*labels)[i] > Scalar(0.5) ? 1 : 0) : 0;
    groups[std::size_t(g)].push_back(int(i));
  }

  NeighborGraph graph;
  graph.neighbors.setConstant(n, k, -1);
  graph.build_time = build_time;
  graph.label_mask = labels != nullptr;
  for (const auto& ids : groups) {
    if (ids.empty()) continue;
    const int want = std::min<int>(k, int(ids.size()) - 1);
    if (want < k) graph.incomplete = true;
    if (want <= 0) continue;
    const UniformGrid grid(pts, ids);
    for (int id : ids) {
      const auto found = grid.query(id, want);
      for (std::size_t j = 0; j < found.size(); ++j) graph.neighbors(id, Index(j)) = found[j].index;
    }
  }
  return graph;
}

KabschResult kabsch_rotation(std::span<const Vec3<double>> src, std::span<const Vec3<double>> dst) {
  if (src.size() != dst.size() || src.empty()) {
    throw ContractError("kabsch_rotation: edge lists must be non-empty and of equal length");
  }
  Mat3<double> cross = Mat3<double>::Zero();
  for (std::size_t k = 0; k < src.size(); ++k) cross += src[k] * dst[k].transpose();
  KabschResult result;
  if (!(cross.cwiseAbs().maxCoeff() > 0.0)) {
    result.degenerate = true;
    return result;
  }
  // max tr(R^T cross) over SO(3): R = U diag(1, 1, det(U V^T)) V^T.
  const Eigen::JacobiSVD<Mat3<double>> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3<double> d = Mat3<double>::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  result.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  return result;
}

#define VGR_INSTANTIATE(S)                                                                      \
  template Points3<S> eval_position<S>(const GaussianSet<S>&, double);                          \
  template void eval_position_backward<S>(const SetLayout&, double, const Points3<S>&,          \
                                          GaussianSet<S>&);                                     \
  template Quats<S> eval_rotation_raw<S>(const GaussianSet<S>&, double);                        \
  template void eval_rotation_backward<S>(const SetLayout&, double, const Quats<S>&,            \
                                          GaussianSet<S>&);                                     \
  template Quats<S> eval_rotation<S>(const GaussianSet<S>&, double);                            \
  template NeighborGraph build_neighbors<S>(const Points3<S>&, int, const Column<S>*, double);

VGR_INSTANTIATE(float)
VGR_INSTANTIATE(double)
#undef VGR_INSTANTIATE

}  // namespace vgr
