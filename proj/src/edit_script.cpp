#include "vgr/edit_script.hpp"

#include "vgr/motion.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace vgr {

namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

struct LineParser {
  const std::vector<std::string>& tok;
  std::string where;

  [[noreturn]] void fail(const std::string& msg) const { throw ContractError(where + msg); }

  double number(std::size_t i) const {
    if (i >= tok.size()) fail("missing argument for '" + tok[0] + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(tok[i], &used);
      if (used != tok[i].size() || !std::isfinite(v)) fail("invalid number '" + tok[i] + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("invalid number '" + tok[i] + "'");
    }
  }
  void arity(std::size_t n) const {
    if (tok.size() != n) fail("'" + tok[0] + "' takes " + std::to_string(n - 1) + " arguments");
  }
};

Directive parse_select(const LineParser& p, std::vector<std::string>& known_ids) {
  std::vector<std::string> tok = p.tok;
  Directive d;
  d.kind = Directive::Kind::kSelect;
  if (tok.size() >= 3 && tok[tok.size() - 2] == "as") {
    d.save_as = tok.back();
    tok.resize(tok.size() - 2);
  }
  const LineParser q{tok, p.where};
  if (tok.size() < 2) q.fail("select needs a selector");
  const std::string& kind = tok[1];
  if (kind == "all") {
    q.arity(2);
    d.selector = Directive::Selector::kAll;
  } else if (kind == "label") {
    q.arity(4);
    d.selector = Directive::Selector::kLabel;
    d.compare = tok[2];
    if (d.compare != ">" && d.compare != ">=" && d.compare != "<" && d.compare != "<=") {
      q.fail("label comparison must be one of > >= < <=");
    }
    d.value = q.number(3);
  } else if (kind == "box") {
    if (tok.size() != 8 && !(tok.size() == 10 && tok[8] == "at")) {
      q.fail("select box takes x0 y0 z0 x1 y1 z1 [at t]");
    }
    for (int a = 0; a < 3; ++a) {
      d.box_min[a] = q.number(2 + std::size_t(a));
      d.box_max[a] = q.number(5 + std::size_t(a));
      if (d.box_min[a] > d.box_max[a]) q.fail("select box has min > max");
    }
    if (tok.size() == 10) d.at_time = q.number(9);
    d.selector = Directive::Selector::kBox;
  } else if (kind == "id") {
    q.arity(3);
    d.selector = Directive::Selector::kId;
    d.id = tok[2];
    if (std::find(known_ids.begin(), known_ids.end(), d.id) == known_ids.end()) {
      q.fail("unknown selection id '" + d.id + "'");
    }
  } else {
    q.fail("unknown selector '" + kind + "'");
  }
  if (!d.save_as.empty()) known_ids.push_back(d.save_as);
  return d;
}

}  // namespace

EditScript parse_edit_script(const std::string& text, const std::string& origin) {
  EditScript script;
  std::vector<std::string> known_ids;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    const LineParser p{tok, origin + ":" + std::to_string(lineno) + ": "};
    Directive d;
    const std::string& op = tok[0];
    using K = Directive::Kind;
    if (op == "select") {
      d = parse_select(p, known_ids);
    } else if (op == "delete") {
      p.arity(1);
      d.kind = K::kDelete;
    } else if (op == "duplicate" || op == "translate") {
      p.arity(4);
      d.kind = op == "duplicate" ? K::kDuplicate : K::kTranslate;
      d.vec = {p.number(1), p.number(2), p.number(3)};
    } else if (op == "rotate") {
      p.arity(5);
      d.kind = K::kRotate;
      d.quat = {p.number(1), p.number(2), p.number(3), p.number(4)};
      if (d.quat.norm() < 1e-8) p.fail("rotate needs a non-zero quaternion");
      d.quat.normalize();
    } else if (op == "rescale" || op == "set_opacity_mul") {
      p.arity(2);
      d.kind = op == "rescale" ? K::kRescale : K::kOpacityMul;
      d.value = p.number(1);
      if (!(d.value > 0)) p.fail(op + " factor must be positive");
    } else if (op == "retime") {
      d.kind = K::kRetime;
      if (tok.size() == 3 && tok[1] == "linear") {
        d.retime = Directive::Retime::kLinear;
        d.value = p.number(2);
        if (!(d.value > 0)) p.fail("retime rate must be positive");
      } else if (tok.size() == 2 && tok[1] == "ease") {
        d.retime = Directive::Retime::kEase;
      } else {
        p.fail("retime takes 'linear r' or 'ease'");
      }
    } else if (op == "global_transform") {
      p.arity(8);
      d.kind = K::kGlobalTransform;
      d.quat = {p.number(1), p.number(2), p.number(3), p.number(4)};
      if (d.quat.norm() < 1e-8) p.fail("global_transform needs a non-zero quaternion");
      d.quat.normalize();
      d.vec = {p.number(5), p.number(6), p.number(7)};
    } else if (op == "stereo_baseline") {
      if (tok.size() != 2 && tok.size() != 3) p.fail("stereo_baseline takes b [toe_in_degrees]");
      d.kind = K::kStereoBaseline;
      d.value = p.number(1);
      if (d.value < 0) p.fail("stereo baseline must be non-negative");
      if (tok.size() == 3) d.toe_in_deg = p.number(2);
    } else {
      p.fail("unknown directive '" + op + "'");
    }
    d.line = lineno;
    script.directives.push_back(std::move(d));
  }
  return script;
}

EditScript load_edit_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot read edit script " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_edit_script(ss.str(), path.string());
}

// ---------------------------------------------------------------------------

namespace {

Eigen::RowVectorXd basis_row(const SetLayout& layout, double t) {
  const TrajectoryBasis b = trajectory_basis(layout, t);
  Eigen::RowVectorXd row(1 + b.poly.size() + b.cos.size() + b.sin.size());
  Index k = 0;
  row[k++] = 1.0;
  for (double v : b.poly) row[k++] = v;
  for (double v : b.cos) row[k++] = v;
  for (double v : b.sin) row[k++] = v;
  return row;
}

/// Refits [base | poly | cos | sin] (width channels each) of the listed rows.
template <typename Base, typename Coeffs>
void refit(Base& base, Coeffs& poly, Coeffs& cos, Coeffs& sin, int width, const SetLayout& layout,
           std::span<const Index> rows, const std::function<double(double)>& remap) {
  constexpr int kSamples = 128;
  const int n_poly = layout.poly_order, n_four = layout.fourier_order;
  const Index terms = 1 + n_poly + 2 * n_four;
  Eigen::MatrixXd a(kSamples, terms), target_basis(kSamples, terms);
  for (int s = 0; s < kSamples; ++s) {
    const double t = double(s) / (kSamples - 1);
    a.row(s) = basis_row(layout, t);
    target_basis.row(s) = basis_row(layout, remap(t));
  }
  // Coefficients in term-major order: coeff(term, channel).
  Eigen::MatrixXd rhs(kSamples, Index(rows.size()) * width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index i = rows[r];
    Eigen::MatrixXd c(terms, width);
    for (int ch = 0; ch < width; ++ch) {
      c(0, ch) = double(base(i, ch));
      for (int n = 0; n < n_poly; ++n) c(1 + n, ch) = double(poly(i, n * width + ch));
      for (int l = 0; l < n_four; ++l) {
        c(1 + n_poly + l, ch) = double(cos(i, l * width + ch));
        c(1 + n_poly + n_four + l, ch) = double(sin(i, l * width + ch));
      }
    }
    rhs.middleCols(Index(r) * width, width) = target_basis * c;
  }
  const Eigen::MatrixXd sol = a.colPivHouseholderQr().solve(rhs);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index i = rows[r];
    const auto c = sol.middleCols(Index(r) * width, width);
    for (int ch = 0; ch < width; ++ch) {
      base(i, ch) = float(c(0, ch));
      for (int n = 0; n < n_poly; ++n) poly(i, n * width + ch) = float(c(1 + n, ch));
      for (int l = 0; l < n_four; ++l) {
        cos(i, l * width + ch) = float(c(1 + n_poly + l, ch));
        sin(i, l * width + ch) = float(c(1 + n_poly + n_four + l, ch));
      }
    }
  }
}

std::vector<Index> rows_of(const std::vector<char>& mask) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(Index(i));
  }
  return out;
}

Vec3<double> centroid(const GaussianSetf& set, std::span<const Index> rows) {
  Vec3<double> c = Vec3<double>::Zero();
  for (Index i : rows) c += set.mu0.row(i).transpose().cast<double>();
  return c / double(rows.size());
}

/// Rotates displacement coefficients (term-major, 3 channels) by r.
template <typename M>
void rotate_coeffs(M& block, Index row, const Mat3<double>& r) {
  for (Index k = 0; k + 2 < block.cols(); k += 3) {
    const Vec3<double> v(block(row, k), block(row, k + 1), block(row, k + 2));
    const Vec3<double> w = r * v;
    for (int a = 0; a < 3; ++a) block(row, k + a) = float(w[a]);
  }
}

template <typename M>
void rotate_quat_coeffs(M& block, Index row, const Vec4<double>& q) {
  for (Index k = 0; k + 3 < block.cols(); k += 4) {
    const Vec4<double> v(block(row, k), block(row, k + 1), block(row, k + 2), block(row, k + 3));
    const Vec4<double> w = quat_multiply(q, v);
    for (int a = 0; a < 4; ++a) block(row, k + a) = float(w[a]);
  }
}

void rigid_rows(GaussianSetf& set, std::span<const Index> rows, const Vec4<double>& q,
                const Vec3<double>& pivot, const Vec3<double>& translation) {
  const Mat3<double> r = quat_to_rot(q);
  for (Index i : rows) {
    const Vec3<double> p = set.mu0.row(i).transpose().cast<double>();
    set.mu0.row(i) = (r * (p - pivot) + pivot + translation).cast<float>().transpose();
    const Vec4<double> q0 = set.q0.row(i).transpose().cast<double>();
    set.q0.row(i) = quat_multiply(q, q0).cast<float>().transpose();
    rotate_coeffs(set.traj.poly, i, r);
    rotate_coeffs(set.traj.four_cos, i, r);
    rotate_coeffs(set.traj.four_sin, i, r);
    if (set.layout.rotation_dynamics) {
      rotate_quat_coeffs(set.traj.rot_poly, i, q);
      rotate_quat_coeffs(set.traj.rot_cos, i, q);
      rotate_quat_coeffs(set.traj.rot_sin, i, q);
    }
  }
}

}  // namespace

void retime_set(GaussianSetf& set, std::span<const Index> rows, Directive::Retime mode, double rate) {
  std::function<double(double)> remap;
  if (mode == Directive::Retime::kLinear) {
    remap = [rate](double t) { return rate * t; };
  } else {
    remap = [](double t) { return t * t * (3.0 - 2.0 * t); };
  }
  refit(set.mu0, set.traj.poly, set.traj.four_cos, set.traj.four_sin, 3, set.layout, rows, remap);
  if (set.layout.rotation_dynamics) {
    refit(set.q0, set.traj.rot_poly, set.traj.rot_cos, set.traj.rot_sin, 4, set.layout, rows, remap);
  }
}

EditResult edit_geometry(const GaussianSetf& input, const EditScript& script) {
  EditResult result;
  GaussianSetf set = input;
  set.check_shapes();
  std::vector<char> selection;
  bool have_selection = false;
  std::map<std::string, std::vector<char>> saved;
  using K = Directive::Kind;

  auto where = [](const Directive& d) { return "line " + std::to_string(d.line) + ": "; };

  for (const Directive& d : script.directives) {
    const Index n = set.count();
    if (d.kind == K::kSelect) {
      selection.assign(std::size_t(n), 0);
      have_selection = true;
      switch (d.selector) {
        case Directive::Selector::kAll: std::fill(selection.begin(), selection.end(), 1); break;
        case Directive::Selector::kLabel:
          for (Index i = 0; i < n; ++i) {
            const double l = set.label[i];
            const bool hit = d.compare == ">"    ? l > d.value
                             : d.compare == ">=" ? l >= d.value
                             : d.compare == "<"  ? l < d.value
                                                 : l <= d.value;
            selection[std::size_t(i)] = hit;
          }
          break;
        case Directive::Selector::kBox: {
          const Points3<float> pos = eval_position(set, d.at_time);
          for (Index i = 0; i < n; ++i) {
            const Vec3<double> p = pos.row(i).transpose().cast<double>();
            selection[std::size_t(i)] =
                (p.array() >= d.box_min.array()).all() && (p.array() <= d.box_max.array()).all();
          }
          break;
        }
        case Directive::Selector::kId: {
          auto it = saved.find(d.id);
          if (it == saved.end()) throw ContractError(where(d) + "unknown selection id '" + d.id + "'");
          selection = it->second;
          break;
        }
      }
      if (!d.save_as.empty()) saved[d.save_as] = selection;
      continue;
    }
    if (d.kind == K::kStereoBaseline) {
      result.stereo = StereoSettings{d.value, d.toe_in_deg};
      continue;
    }
    if (d.kind == K::kGlobalTransform) {
      std::vector<Index> all(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) all[std::size_t(i)] = i;
      rigid_rows(set, all, d.quat, Vec3<double>::Zero(), d.vec);
      continue;
    }

    const std::vector<Index> rows = have_selection ? rows_of(selection) : std::vector<Index>{};
    if (rows.empty()) {
      result.warnings.push_back(where(d) + "empty selection, directive skipped");
      continue;
    }
    switch (d.kind) {
      case K::kDelete: {
        std::vector<Index> keep;
        for (Index i = 0; i < n; ++i) {
          if (!selection[std::size_t(i)]) keep.push_back(i);
        }
        set = set.gather(keep);
        auto compact = [&](std::vector<char>& m) {
          std::vector<char> out;
          for (Index i : keep) out.push_back(m[std::size_t(i)]);
          m = std::move(out);
        };
        for (auto& [_, m] : saved) compact(m);
        selection.assign(keep.size(), 0);
        break;
      }
      case K::kDuplicate: {
        GaussianSetf copy = set.gather(rows);
        for (Index r = 0; r < copy.count(); ++r) {
          copy.mu0.row(r) = (copy.mu0.row(r).cast<double>() + d.vec.transpose()).cast<float>();
        }
        set.append(copy);
        for (auto& [_, m] : saved) m.resize(std::size_t(set.count()), 0);
        selection.assign(std::size_t(set.count()), 0);
        std::fill(selection.begin() + n, selection.end(), 1);
        break;
      }
      case K::kTranslate:
        for (Index i : rows) set.mu0.row(i) = (set.mu0.row(i).cast<double>() + d.vec.transpose()).cast<float>();
        break;
      case K::kRotate:
        rigid_rows(set, rows, d.quat, centroid(set, rows), Vec3<double>::Zero());
        break;
      case K::kRescale: {
        const Vec3<double> c = centroid(set, rows);
        const float log_f = float(std::log(d.value));
        for (Index i : rows) {
          const Vec3<double> p = set.mu0.row(i).transpose().cast<double>();
          set.mu0.row(i) = (c + d.value * (p - c)).cast<float>().transpose();
          set.log_scale.row(i).array() += log_f;
          set.traj.poly.row(i) *= float(d.value);
          set.traj.four_cos.row(i) *= float(d.value);
          set.traj.four_sin.row(i) *= float(d.value);
        }
        break;
      }
      case K::kOpacityMul:
        for (Index i : rows) {
          const double a = std::min(double(sigmoid(set.opacity_logit[i])) * d.value, 1.0 - 1e-6);
          set.opacity_logit[i] = float(std::log(a / (1.0 - a)));
        }
        break;
      case K::kRetime:
        retime_set(set, rows, d.retime, d.value);
        break;
      default:
        break;
    }
  }
  result.set = std::move(set);
  return result;
}

}  // namespace vgr
