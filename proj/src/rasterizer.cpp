#include "vgr/rasterizer.hpp"

#include "vgr/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <type_traits>

namespace vgr {

const char* attribute_name(Attribute a) {
  switch (a) {
    case kColor: return "color";
    case kDepth: return "depth";
    case kFlow: return "flow";
    case kLabel: return "label";
    case kFeature: return "feature";
    case kAlpha: return "alpha";
  }
  return "?";
}

ChannelLayout ChannelLayout::make(AttributeMask attributes, int feature_dim) {
  ChannelLayout l;
  int c = 0;
  if (attributes & kColor) { l.color = c; c += 3; }
  if (attributes & kDepth) { l.depth = c; c += 1; }
  if (attributes & kFlow) { l.flow = c; c += 2; }
  if (attributes & kLabel) { l.label = c; c += 1; }
  if (attributes & kFeature) {
    if (feature_dim <= 0) throw ContractError("feature rendering requested with feature dimension 0");
    l.feature = c;
    l.feature_dim = feature_dim;
    c += feature_dim;
  }
  l.total = c;
  return l;
}

template <typename Scalar>
const ImagePlane<Scalar>& RenderOutput<Scalar>::plane(Attribute a) const {
  const auto it = planes.find(a);
  if (it == planes.end()) {
    throw ContractError(std::string("attribute plane not rendered: ") + attribute_name(a));
  }
  return it->second;
}

template <typename Scalar>
std::span<const TapeEntry<Scalar>> RenderOutput<Scalar>::tape(int x, int y) const {
  if (!has_tape) throw ContractError("render output carries no compositing tape");
  const std::size_t p = std::size_t(y) * std::size_t(camera.width) + std::size_t(x);
  const int ts = options.tile_size;
  const auto& t = tile_tape[std::size_t((y / ts) * tiles_x + x / ts)];
  return {t.data() + pixel_begin[p], pixel_count[p]};
}

template <typename Scalar>
Projected2D<Scalar> project_gaussian(const Vec3<Scalar>& position, const Vec4<Scalar>& rotation,
                                     const Vec3<Scalar>& log_scale, const Camera& cam,
                                     const RenderOptions& options) {
  Projected2D<Scalar> p;
  if (!position.allFinite() || !rotation.allFinite() || !log_scale.allFinite() ||
      !(rotation.norm() > Scalar(0))) {
    return p;
  }
  const Mat3<Scalar> sigma = build_covariance<Scalar>(rotation, log_scale.array().exp().matrix());
  const Eigen::Matrix<Scalar, 2, 3> j = cam.jacobian<Scalar>();
  p.cov2d = j * sigma * j.transpose();
  p.cov2d(0, 0) += Scalar(options.dilation);
  p.cov2d(1, 1) += Scalar(options.dilation);
  p.cov2d(1, 0) = p.cov2d(0, 1);
  const Scalar det = p.cov2d.determinant();
  if (!(det > Scalar(0)) || !p.cov2d.allFinite()) return p;
  p.inv_cov2d << p.cov2d(1, 1) / det, -p.cov2d(0, 1) / det, -p.cov2d(0, 1) / det,
      p.cov2d(0, 0) / det;
  const Scalar mid = Scalar(0.5) * (p.cov2d(0, 0) + p.cov2d(1, 1));
  const Scalar lambda_max = mid + std::sqrt(std::max(Scalar(0), mid * mid - det));
  p.radius = Scalar(options.kernel_extent) * std::sqrt(lambda_max);
  p.mu2d = project_point(position, cam);
  p.depth_key = position.z();
  p.valid = std::isfinite(p.radius);
  return p;
}

namespace {

template <typename Scalar>
struct PackedSplat {
  Scalar mx, my;
  Scalar qa, qb, qc;  // inverse covariance entries
  Scalar alpha;
  std::int32_t index;
};

struct TileRect {
  int x0, y0, x1, y1;  // inclusive tile bounds; empty when x0 > x1
};

template <typename Scalar>
TileRect tile_rect(const Projected2D<Scalar>& p, int tiles_x, int tiles_y, int ts) {
  const double lo_x = double(p.mu2d.x() - p.radius), hi_x = double(p.mu2d.x() + p.radius);
  const double lo_y = double(p.mu2d.y() - p.radius), hi_y = double(p.mu2d.y() + p.radius);
  TileRect r{std::max(0, int(std::floor(lo_x / ts))), std::max(0, int(std::floor(lo_y / ts))),
             std::min(tiles_x - 1, int(std::floor(hi_x / ts))),
             std::min(tiles_y - 1, int(std::floor(hi_y / ts)))};
  if (hi_x < 0 || hi_y < 0) r.x0 = r.x1 + 1;
  return r;
}

template <typename Scalar>
void check_inputs(const SplatInputs<Scalar>& in, AttributeMask attributes, const ChannelLayout& ch) {
  const Index n = in.count();
  auto need = [&](Index rows, Index cols, Index want_cols, const char* what) {
    if (rows != n || cols != want_cols) {
      throw ContractError(std::string("rasterize: input '") + what + "' has shape " +
                          std::to_string(rows) + "x" + std::to_string(cols));
    }
  };
  need(in.rotations.rows(), 4, 4, "rotations");
  need(in.log_scales.rows(), 3, 3, "log_scales");
  need(in.opacity_logits.rows(), 1, 1, "opacity_logits");
  if (attributes & kColor) need(in.colors.rows(), 3, 3, "colors");
  if (attributes & kFlow) need(in.flow.rows(), in.flow.cols(), 2, "flow");
  if (attributes & kLabel) need(in.label.rows(), 1, 1, "label");
  if (attributes & kFeature) need(in.feature.rows(), in.feature.cols(), ch.feature_dim, "feature");
}

}  // namespace

template <typename Scalar>
RenderOutput<Scalar> rasterize(const SplatInputs<Scalar>& inputs, const Camera& cam,
                               AttributeMask attributes, const RenderOptions& options) {
  RenderOutput<Scalar> out;
  out.camera = cam;
  out.attributes = attributes & ~AttributeMask(kAlpha);
  out.options = options;
  const int feature_dim = (attributes & kFeature) ? int(inputs.feature.cols()) : 0;
  out.channels = ChannelLayout::make(out.attributes, feature_dim);
  const ChannelLayout& ch = out.channels;
  check_inputs(inputs, out.attributes, ch);

  const Index n = inputs.count();
  const int w = cam.width, h = cam.height;
  const int ts = options.tile_size;
  out.tiles_x = (w + ts - 1) / ts;
  out.tiles_y = (h + ts - 1) / ts;
  const int tile_total = out.tiles_x * out.tiles_y;

  // Per-Gaussian attribute values.
  out.values.resize(n, ch.total);
  if (ch.color >= 0) out.values.middleCols(ch.color, 3) = inputs.colors;
  if (ch.depth >= 0) out.values.col(ch.depth) = inputs.positions.col(2);
  if (ch.flow >= 0) out.values.middleCols(ch.flow, 2) = inputs.flow;
  if (ch.label >= 0) out.values.col(ch.label) = inputs.label;
  if (ch.feature >= 0) out.values.middleCols(ch.feature, ch.feature_dim) = inputs.feature;

  // Projection.
  out.projected.resize(std::size_t(n));
  std::vector<std::int32_t> order;
  order.reserve(std::size_t(n));
  for (Index i = 0; i < n; ++i) {
    auto& p = out.projected[std::size_t(i)];
    p = project_gaussian<Scalar>(inputs.positions.row(i).transpose(),
                                 inputs.rotations.row(i).transpose(),
                                 inputs.log_scales.row(i).transpose(), cam, options);
    if (std::isnan(inputs.opacity_logits[i])) p.valid = false;
    if (p.valid && !out.values.row(i).allFinite()) p.valid = false;
    if (!p.valid) {
      ++out.skipped_nonfinite;
      continue;
    }
    order.push_back(std::int32_t(i));
  }
  std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    return out.projected[std::size_t(a)].depth_key < out.projected[std::size_t(b)].depth_key;
  });

  // Tile binning in depth order keeps each list sorted.
  std::vector<std::vector<std::int32_t>> bins(static_cast<std::size_t>(tile_total));
  for (std::int32_t g : order) {
    const TileRect r = tile_rect(out.projected[std::size_t(g)], out.tiles_x, out.tiles_y, ts);
    for (int ty = r.y0; ty <= r.y1; ++ty) {
      for (int tx = r.x0; tx <= r.x1; ++tx) bins[std::size_t(ty * out.tiles_x + tx)].push_back(g);
    }
  }

  const int channels = ch.total;
  RowMatrix<Scalar> accum = RowMatrix<Scalar>::Zero(Index(w) * h, channels);
  Column<Scalar> alpha_plane = Column<Scalar>::Zero(Index(w) * h);
  out.has_tape = options.keep_tape;
  if (out.has_tape) {
    out.tile_tape.assign(std::size_t(tile_total), {});
    out.pixel_begin.assign(std::size_t(w) * h, 0);
    out.pixel_count.assign(std::size_t(w) * h, 0);
  }

  const Scalar cutoff = Scalar(0.5 * options.kernel_extent * options.kernel_extent);
  const Scalar min_t = Scalar(options.min_transmittance);
  const int workers = options.threads > 0 ? options.threads : default_thread_count();

  // Pixels are visited in 4x4 blocks inside each tile, and a block only scans
  // the splats whose padded axis-aligned extent reaches it. The culling is
  // conservative, so composites equal a scan of the whole tile list.
  constexpr int kBlock = 4;
  const Scalar extent = Scalar(options.kernel_extent);
  parallel_for(tile_total, workers, [&](long tile, int) {
    const auto& bin = bins[std::size_t(tile)];
    std::vector<PackedSplat<Scalar>> packed(bin.size());
    std::vector<std::array<Scalar, 4>> box(bin.size());
    for (std::size_t k = 0; k < bin.size(); ++k) {
      const auto& p = out.projected[std::size_t(bin[k])];
      packed[k] = {p.mu2d.x(), p.mu2d.y(), p.inv_cov2d(0, 0), p.inv_cov2d(0, 1),
                   p.inv_cov2d(1, 1), sigmoid(inputs.opacity_logits[bin[k]]), bin[k]};
      const Scalar hx = extent * std::sqrt(p.cov2d(0, 0)) * Scalar(1.01) + Scalar(0.01);
      const Scalar hy = extent * std::sqrt(p.cov2d(1, 1)) * Scalar(1.01) + Scalar(0.01);
      box[k] = {p.mu2d.x() - hx, p.mu2d.x() + hx, p.mu2d.y() - hy, p.mu2d.y() + hy};
    }
    const int tx = int(tile % out.tiles_x), ty = int(tile / out.tiles_x);
    const int x_end = std::min(w, (tx + 1) * ts), y_end = std::min(h, (ty + 1) * ts);
    // The tape is built in a reused per-thread buffer and copied out once.
    thread_local std::vector<TapeEntry<Scalar>> scratch;
    scratch.clear();
    auto* tape = out.has_tape ? &scratch : nullptr;
    std::vector<PackedSplat<Scalar>> local;
    local.reserve(packed.size());
    std::vector<Scalar> local_values(packed.size() * std::size_t(channels));  // rows in `local` order

    auto composite = [&](auto fixed) {
      constexpr int kFixed = decltype(fixed)::value;
      const int nc = kFixed > 0 ? kFixed : channels;
      std::vector<Scalar> acc_store(static_cast<std::size_t>(nc));
      Scalar* acc = acc_store.data();
      for (int by = ty * ts; by < y_end; by += kBlock) {
        for (int bx = tx * ts; bx < x_end; bx += kBlock) {
          const int bx_end = std::min(x_end, bx + kBlock), by_end = std::min(y_end, by + kBlock);
          const Scalar lo_x = Scalar(bx) + Scalar(0.5), hi_x = Scalar(bx_end) - Scalar(0.5);
          const Scalar lo_y = Scalar(by) + Scalar(0.5), hi_y = Scalar(by_end) - Scalar(0.5);
          local.clear();
          for (std::size_t k = 0; k < packed.size(); ++k) {
            const auto& b = box[k];
            if (b[1] < lo_x || b[0] > hi_x || b[3] < lo_y || b[2] > hi_y) continue;
            const Scalar* v = out.values.data() + Index(packed[k].index) * nc;
            std::copy(v, v + nc, local_values.data() + local.size() * std::size_t(nc));
            local.push_back(packed[k]);
          }
          for (int y = by; y < by_end; ++y) {
            for (int x = bx; x < bx_end; ++x) {
              const Scalar px = Scalar(x) + Scalar(0.5), py = Scalar(y) + Scalar(0.5);
              const std::size_t pix = std::size_t(y) * w + x;
              if (tape) out.pixel_begin[pix] = std::uint32_t(tape->size());
              std::fill(acc, acc + nc, Scalar(0));
              Scalar t = 1, alpha_sum = 0;
              int contributors = 0;
              for (std::size_t k = 0; k < local.size(); ++k) {
                const auto& s = local[k];
                const Scalar dx = px - s.mx, dy = py - s.my;
                const Scalar power = Scalar(0.5) * (s.qa * dx * dx + s.qc * dy * dy) + s.qb * dx * dy;
                if (power > cutoff) continue;
                const Scalar sigma = s.alpha * std::exp(-power);
                const Scalar weight = t * sigma;
                const Scalar* v = local_values.data() + k * std::size_t(nc);
                for (int c = 0; c < nc; ++c) acc[c] += weight * v[c];
                alpha_sum += weight;
                if (tape) tape->push_back({s.index, sigma, t});
                t *= Scalar(1) - sigma;
                if (t < min_t || ++contributors >= options.max_contributors) break;
              }
              for (int c = 0; c < nc; ++c) accum(Index(pix), c) = acc[c];
              alpha_plane[Index(pix)] = alpha_sum;
              if (tape) out.pixel_count[pix] = std::uint32_t(tape->size()) - out.pixel_begin[pix];
            }
          }
        }
      }
    };
    switch (channels) {
      case 2: composite(std::integral_constant<int, 2>{}); break;
      case 3: composite(std::integral_constant<int, 3>{}); break;
      case 4: composite(std::integral_constant<int, 4>{}); break;
      case 5: composite(std::integral_constant<int, 5>{}); break;
      case 7: composite(std::integral_constant<int, 7>{}); break;
      default: composite(std::integral_constant<int, 0>{}); break;
    }
    if (tape) out.tile_tape[std::size_t(tile)].assign(scratch.begin(), scratch.end());
  });

  auto take = [&](Attribute a, int offset, int count) {
    ImagePlane<Scalar> plane(w, h, count);
    plane.values = accum.middleCols(offset, count);
    out.planes.emplace(a, std::move(plane));
  };
  if (ch.color >= 0) take(kColor, ch.color, 3);
  if (ch.depth >= 0) {
    take(kDepth, ch.depth, 1);
    auto& d = out.planes.at(kDepth).values;
    d.col(0).array() /= alpha_plane.array().max(Scalar(1e-6));
  }
  if (ch.flow >= 0) take(kFlow, ch.flow, 2);
  if (ch.label >= 0) take(kLabel, ch.label, 1);
  if (ch.feature >= 0) take(kFeature, ch.feature, ch.feature_dim);
  ImagePlane<Scalar> alpha(w, h, 1);
  alpha.values.col(0) = alpha_plane;
  out.planes.emplace(kAlpha, std::move(alpha));
  out.inputs = inputs;
  return out;
}

template <typename Scalar>
SplatGrads<Scalar> rasterize_backward(const RenderOutput<Scalar>& out,
                                      const PlaneMap<Scalar>& grad_planes) {
  if (!out.has_tape) throw ContractError("rasterize_backward: forward pass kept no tape");
  const ChannelLayout& ch = out.channels;
  const int channels = ch.total;
  const Index n = out.inputs.count();
  const int w = out.camera.width, h = out.camera.height;
  const Index pixels = Index(w) * h;

  // Upstream gradient per pixel for every composited channel plus alpha.
  RowMatrix<Scalar> g = RowMatrix<Scalar>::Zero(pixels, channels + 1);
  const int alpha_channel = channels;
  for (const auto& [attr, gp] : grad_planes) {
    require_same_shape(gp, out.plane(attr), "rasterize_backward");
    switch (attr) {
      case kColor: g.middleCols(ch.color, 3) += gp.values; break;
      case kFlow: g.middleCols(ch.flow, 2) += gp.values; break;
      case kLabel: g.col(ch.label) += gp.values.col(0); break;
      case kFeature: g.middleCols(ch.feature, ch.feature_dim) += gp.values; break;
      case kAlpha: g.col(alpha_channel) += gp.values.col(0); break;
      case kDepth: {
        // depth = numerator / max(A, 1e-6)
        const auto& a = out.plane(kAlpha).values.col(0);
        const auto& d = out.plane(kDepth).values.col(0);
        for (Index p = 0; p < pixels; ++p) {
          const Scalar denom = std::max(a[p], Scalar(1e-6));
          g(p, ch.depth) += gp.values(p, 0) / denom;
          if (a[p] > Scalar(1e-6)) g(p, alpha_channel) -= gp.values(p, 0) * d[p] / a[p];
        }
        break;
      }
    }
  }

  const int workers = out.options.threads > 0 ? out.options.threads : default_thread_count();
  const int ts = out.options.tile_size;
  const int tile_total = out.tiles_x * out.tiles_y;

  // Per-Gaussian screen geometry (mx, my, qa, qb, qc, alpha) and per-worker
  // gradients (mu2d x, y, conic a, b, c, opacity), one contiguous row each.
  RowMatrix<Scalar> geo(n, 6);
  for (Index i = 0; i < n; ++i) {
    const auto& p = out.projected[std::size_t(i)];
    geo.row(i) << p.mu2d.x(), p.mu2d.y(), p.inv_cov2d(0, 0), p.inv_cov2d(0, 1), p.inv_cov2d(1, 1),
        sigmoid(out.inputs.opacity_logits[i]);
  }
  struct Partial {
    RowMatrix<Scalar> geo, values;
  };
  std::vector<Partial> partial(std::size_t(std::min(workers, std::max(tile_total, 1))));
  for (auto& p : partial) {
    p.geo.setZero(n, 6);
    p.values.setZero(n, channels);
  }

  parallel_for(tile_total, int(partial.size()), [&](long tile, int worker) {
    Partial& acc = partial[std::size_t(worker)];
    const auto& tape = out.tile_tape[std::size_t(tile)];
    const int tx = int(tile % out.tiles_x), ty = int(tile / out.tiles_x);
    auto accumulate = [&](auto fixed) {
      constexpr int kFixed = decltype(fixed)::value;
      const int nc = kFixed > 0 ? kFixed : channels;
      std::vector<Scalar> behind_store(std::size_t(nc) + 1);
      Scalar* behind = behind_store.data();
      for (int y = ty * ts; y < std::min(h, (ty + 1) * ts); ++y) {
        for (int x = tx * ts; x < std::min(w, (tx + 1) * ts); ++x) {
          const std::size_t pix = std::size_t(y) * w + x;
          const std::uint32_t count = out.pixel_count[pix];
          if (count == 0) continue;
          const Scalar* gp = g.data() + Index(pix) * (nc + 1);
          const Scalar px = Scalar(x) + Scalar(0.5), py = Scalar(y) + Scalar(0.5);
          std::fill(behind, behind + nc + 1, Scalar(0));
          const TapeEntry<Scalar>* entries = tape.data() + out.pixel_begin[pix];
          for (std::uint32_t k = count; k-- > 0;) {
            const TapeEntry<Scalar>& e = entries[k];
            const Scalar sigma = e.sigma, t = e.transmittance;
            const Scalar weight = t * sigma;
            const Scalar* v = out.values.data() + Index(e.gaussian) * nc;
            Scalar* dv = acc.values.data() + Index(e.gaussian) * nc;
            Scalar d_sigma = 0;
            for (int c = 0; c < nc; ++c) {
              dv[c] += weight * gp[c];
              d_sigma += gp[c] * (v[c] - behind[c]);
              behind[c] = sigma * v[c] + (Scalar(1) - sigma) * behind[c];
            }
            d_sigma += gp[nc] * (Scalar(1) - behind[nc]);
            behind[nc] = sigma + (Scalar(1) - sigma) * behind[nc];
            d_sigma *= t;

            const Scalar* q = geo.data() + Index(e.gaussian) * 6;
            const Scalar dx = px - q[0], dy = py - q[1];
            const Scalar qa = q[2], qb = q[3], qc = q[4];
            // sigma = alpha * kernel; recompute the kernel only if alpha underflowed.
            const Scalar kernel =
                q[5] > Scalar(0)
                    ? sigma / q[5]
                    : std::exp(-(Scalar(0.5) * (qa * dx * dx + qc * dy * dy) + qb * dx * dy));
            const Scalar d_power = -d_sigma * sigma;
            Scalar* dg = acc.geo.data() + Index(e.gaussian) * 6;
            // d power / d mu2d = -Q d
            dg[0] -= d_power * (qa * dx + qb * dy);
            dg[1] -= d_power * (qb * dx + qc * dy);
            dg[2] += d_power * Scalar(0.5) * dx * dx;
            dg[3] += d_power * dx * dy;
            dg[4] += d_power * Scalar(0.5) * dy * dy;
            dg[5] += d_sigma * kernel;
          }
        }
      }
    };
    switch (channels) {
      case 2: accumulate(std::integral_constant<int, 2>{}); break;
      case 3: accumulate(std::integral_constant<int, 3>{}); break;
      case 5: accumulate(std::integral_constant<int, 5>{}); break;
      case 7: accumulate(std::integral_constant<int, 7>{}); break;
      default: accumulate(std::integral_constant<int, 0>{}); break;
    }
  });
  for (std::size_t k = 1; k < partial.size(); ++k) {
    partial[0].geo += partial[k].geo;
    partial[0].values += partial[k].values;
  }

  SplatGrads<Scalar> grads;
  grads.mu2d = partial[0].geo.leftCols(2);
  grads.conic = partial[0].geo.middleCols(2, 3);
  grads.opacity = partial[0].geo.col(5);
  const RowMatrix<Scalar>& dvalues = partial[0].values;
  grads.cov2d.setZero(n, 3);
  grads.positions.setZero(n, 3);
  grads.rotations.setZero(n, 4);
  grads.log_scales.setZero(n, 3);
  grads.opacity_logits.setZero(n);
  grads.screen_grad_norm.setZero(n);
  grads.visible.assign(std::size_t(n), 0);
  if (ch.color >= 0) grads.colors = dvalues.middleCols(ch.color, 3);
  if (ch.flow >= 0) grads.flow = dvalues.middleCols(ch.flow, 2);
  if (ch.label >= 0) grads.label = dvalues.col(ch.label);
  if (ch.feature >= 0) grads.feature = dvalues.middleCols(ch.feature, ch.feature_dim);

  const Scalar half_w = Scalar(w) / 2, half_h = Scalar(h) / 2;
  for (Index i = 0; i < n; ++i) {
    const auto& p = out.projected[std::size_t(i)];
    if (!p.valid) continue;
    const TileRect r = tile_rect(p, out.tiles_x, out.tiles_y, ts);
    grads.visible[std::size_t(i)] = r.x0 <= r.x1 && r.y0 <= r.y1;

    // Conic -> 2D covariance: dC = -Q dQ Q with dQ the symmetric gradient.
    const Mat2<Scalar>& q = p.inv_cov2d;
    Mat2<Scalar> g_q;
    g_q << grads.conic(i, 0), grads.conic(i, 1) / 2, grads.conic(i, 1) / 2, grads.conic(i, 2);
    const Mat2<Scalar> g_c = -q * g_q * q;
    grads.cov2d.row(i) << g_c(0, 0), 2 * g_c(0, 1), g_c(1, 1);

    // 2D covariance -> 3D covariance through the constant Jacobian.
    Mat3<Scalar> g_sigma = Mat3<Scalar>::Zero();
    g_sigma(0, 0) = half_w * half_w * g_c(0, 0);
    g_sigma(1, 1) = half_h * half_h * g_c(1, 1);
    g_sigma(0, 1) = g_sigma(1, 0) = half_w * half_h * g_c(0, 1);

    // Sigma = M M^T, M = R S.
    const Vec4<Scalar> rot = out.inputs.rotations.row(i).transpose();
    const Vec3<Scalar> s = out.inputs.log_scales.row(i).transpose().array().exp();
    const Mat3<Scalar> r_mat = quat_to_rot(rot);
    const Mat3<Scalar> m = r_mat * s.asDiagonal();
    const Mat3<Scalar> g_m = Scalar(2) * g_sigma * m;
    for (int k = 0; k < 3; ++k) grads.log_scales(i, k) = g_m.col(k).dot(r_mat.col(k)) * s[k];
    grads.rotations.row(i) = quat_to_rot_backward<Scalar>(rot, g_m * s.asDiagonal()).transpose();

    grads.positions(i, 0) = grads.mu2d(i, 0) * half_w;
    grads.positions(i, 1) = grads.mu2d(i, 1) * half_h;
    if (ch.depth >= 0) grads.positions(i, 2) = dvalues(i, ch.depth);
    grads.screen_grad_norm[i] = std::hypot(grads.positions(i, 0), grads.positions(i, 1));

    const Scalar a = sigmoid(out.inputs.opacity_logits[i]);
    grads.opacity_logits[i] = grads.opacity[i] * a * (Scalar(1) - a);
  }
  return grads;
}

#define VGR_INSTANTIATE(S)                                                                      \
  template struct RenderOutput<S>;                                                              \
  template Projected2D<S> project_gaussian<S>(const Vec3<S>&, const Vec4<S>&, const Vec3<S>&,   \
                                              const Camera&, const RenderOptions&);             \
  template RenderOutput<S> rasterize<S>(const SplatInputs<S>&, const Camera&, AttributeMask,    \
                                        const RenderOptions&);                                  \
  template SplatGrads<S> rasterize_backward<S>(const RenderOutput<S>&, const PlaneMap<S>&);

VGR_INSTANTIATE(float)
VGR_INSTANTIATE(double)
#undef VGR_INSTANTIATE

}  // namespace vgr
