#include "vgr/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace vgr {

namespace {

struct Entry {
  ConfigKey info;
  std::function<std::string(const CliConfig&)> get;
  std::function<void(CliConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ContractError("invalid value '" + value + "' for " + key + " (expected " + expected + ")");
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

long parse_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
Entry real(const char* section, const char* key, const char* help, T CliConfig::*outer, double T::*field) {
  return {{section, key, help},
          [=](const CliConfig& c) { return format_double(c.*outer.*field); },
          [=](CliConfig& c, const std::string& v) { c.*outer.*field = parse_double(key, v); }};
}

template <typename T, typename I>
Entry integer(const char* section, const char* key, const char* help, T CliConfig::*outer, I T::*field) {
  return {{section, key, help},
          [=](const CliConfig& c) { return std::to_string(c.*outer.*field); },
          [=](CliConfig& c, const std::string& v) {
            if constexpr (std::is_unsigned_v<I>) {
              I x = 0;
              const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
              if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
              c.*outer.*field = x;
            } else {
              c.*outer.*field = I(parse_long(key, v));
            }
          }};
}

/// Helper for nested members: config.fit.<sub>.<field>.
template <typename Sub, typename F>
Entry fit_nested(const char* section, const char* key, const char* help, Sub FitConfig::*sub, F Sub::*field) {
  if constexpr (std::is_same_v<F, double>) {
    return {{section, key, help},
            [=](const CliConfig& c) { return format_double(c.fit.*sub.*field); },
            [=](CliConfig& c, const std::string& v) { c.fit.*sub.*field = parse_double(key, v); }};
  } else if constexpr (std::is_same_v<F, bool>) {
    return {{section, key, help},
            [=](const CliConfig& c) { return std::string(c.fit.*sub.*field ? "true" : "false"); },
            [=](CliConfig& c, const std::string& v) { c.fit.*sub.*field = parse_bool(key, v); }};
  } else {
    return {{section, key, help},
            [=](const CliConfig& c) { return std::to_string(c.fit.*sub.*field); },
            [=](CliConfig& c, const std::string& v) { c.fit.*sub.*field = F(parse_long(key, v)); }};
  }
}

Entry path_entry(const char* key, const char* help, std::filesystem::path PriorPaths::*field) {
  return {{"paths", key, help},
          [=](const CliConfig& c) { return (c.paths.*field).string(); },
          [=](CliConfig& c, const std::string& v) { c.paths.*field = v; }};
}

std::vector<Entry> build_entries() {
  using F = FitConfig;
  std::vector<Entry> e;
  auto fit_real = [&](const char* s, const char* k, const char* h, double F::*f) {
    e.push_back(real<F>(s, k, h, &CliConfig::fit, f));
  };
  auto fit_int = [&](const char* s, const char* k, const char* h, long F::*f) {
    e.push_back(integer<F, long>(s, k, h, &CliConfig::fit, f));
  };

  fit_int("fit", "steps", "optimizer steps", &F::steps);
  fit_int("fit", "init_count", "initial Gaussian count", &F::init_count);
  e.push_back(integer<F, std::uint64_t>("fit", "seed", "random seed", &CliConfig::fit, &F::seed));
  e.push_back(fit_nested("fit", "sh_degree", "spherical-harmonic degree (0..3)", &F::layout, &SetLayout::sh_degree));
  e.push_back(fit_nested("fit", "poly_order", "polynomial trajectory order N", &F::layout, &SetLayout::poly_order));
  e.push_back(fit_nested("fit", "fourier_order", "Fourier trajectory order L", &F::layout, &SetLayout::fourier_order));
  e.push_back(fit_nested("fit", "feature_dim", "per-Gaussian feature dimension", &F::layout, &SetLayout::feature_dim));
  e.push_back(fit_nested("fit", "rotation_dynamics", "time-varying rotations", &F::layout,
                         &SetLayout::rotation_dynamics));
  e.push_back({{"fit", "fourier_mode", "full (2 pi l t) or literal (l t)"},
               [](const CliConfig& c) {
                 return std::string(c.fit.layout.fourier_mode == FourierMode::kLiteral ? "literal" : "full");
               },
               [](CliConfig& c, const std::string& v) {
                 if (v == "full") {
                   c.fit.layout.fourier_mode = FourierMode::kFullPeriod;
                 } else if (v == "literal") {
                   c.fit.layout.fourier_mode = FourierMode::kLiteral;
                 } else {
                   bad_value("fourier_mode", v, "full or literal");
                 }
               }});
  e.push_back(integer<F, int>("fit", "neighbors_k", "ARAP neighbours per Gaussian", &CliConfig::fit, &F::neighbors_k));
  fit_int("fit", "arap_samples", "Gaussians sampled for ARAP per step", &F::arap_samples);
  fit_int("fit", "neighbor_rebuild", "steps between neighbour-graph rebuilds", &F::neighbor_rebuild);
  e.push_back({{"fit", "arap_label_mask", "restrict neighbours to the same label"},
               [](const CliConfig& c) { return std::string(c.fit.arap_label_mask ? "true" : "false"); },
               [](CliConfig& c, const std::string& v) { c.fit.arap_label_mask = parse_bool("arap_label_mask", v); }});
  fit_real("fit", "depth_trim", "fraction of largest depth residuals dropped", &F::depth_trim);
  fit_int("fit", "log_every", "steps between log lines", &F::log_every);

  using R = LearningRates;
  const std::pair<const char*, double R::*> rates[] = {
      {"lr_position", &R::position}, {"lr_position_end", &R::position_end},
      {"lr_poly", &R::poly},         {"lr_poly_end", &R::poly_end},
      {"lr_fourier", &R::fourier},   {"lr_fourier_end", &R::fourier_end},
      {"lr_rotation", &R::rotation}, {"lr_scaling", &R::scaling},
      {"lr_opacity", &R::opacity},   {"lr_sh_dc", &R::sh_dc},
      {"lr_sh_rest", &R::sh_rest},   {"lr_label", &R::label},
      {"lr_feature", &R::feature},
  };
  for (const auto& [k, f] : rates) e.push_back(fit_nested("rates", k, "learning rate", &F::rates, f));

  using W = LossWeights;
  const std::pair<const char*, double W::*> weights[] = {
      {"lambda_render", &W::render}, {"lambda_flow", &W::flow},   {"lambda_depth", &W::depth},
      {"lambda_arap", &W::arap},     {"lambda_label", &W::label}, {"lambda_feature", &W::feature},
  };
  for (const auto& [k, f] : weights) e.push_back(fit_nested("weights", k, "loss weight", &F::weights, f));

  fit_int("density", "density_interval", "steps between density-control events", &F::density_interval);
  fit_int("density", "warmup", "first step eligible for densification", &F::warmup);
  fit_int("density", "densify_until", "last densification step (-1: steps / 2)", &F::densify_until);
  fit_int("density", "opacity_reset_interval", "steps between opacity resets", &F::opacity_reset_interval);
  fit_real("density", "opacity_reset_value", "opacity after a reset", &F::opacity_reset_value);
  fit_real("density", "densify_grad_threshold", "mean screen-gradient threshold", &F::densify_grad_threshold);
  fit_real("density", "prune_opacity", "prune below this opacity", &F::prune_opacity);
  fit_real("density", "split_scale_fraction", "clone/split scale threshold as a fraction of extent",
           &F::split_scale_fraction);
  fit_real("density", "scene_extent", "scene extent in camera units", &F::scene_extent);
  fit_real("density", "split_factor", "scale divisor for split children", &F::split_factor);
  fit_int("density", "max_count", "maximum Gaussian count", &F::max_count);

  using O = RenderOptions;
  e.push_back(fit_nested("render", "kernel_extent", "kernel truncation in standard deviations", &F::render,
                         &O::kernel_extent));
  e.push_back(fit_nested("render", "dilation", "2D covariance dilation (px^2)", &F::render, &O::dilation));
  e.push_back(fit_nested("render", "min_transmittance", "early-stop transmittance", &F::render,
                         &O::min_transmittance));
  e.push_back(fit_nested("render", "max_contributors", "per-pixel contributor cap", &F::render,
                         &O::max_contributors));
  e.push_back(fit_nested("render", "tile_size", "tile edge in pixels", &F::render, &O::tile_size));
  e.push_back(fit_nested("render", "threads", "worker threads (0: automatic)", &F::render, &O::threads));

  e.push_back(integer<F, int>("video", "width", "frame width in pixels", &CliConfig::fit, &F::width));
  e.push_back(integer<F, int>("video", "height", "frame height in pixels", &CliConfig::fit, &F::height));
  e.push_back(integer<F, int>("video", "frame_count", "number of frames", &CliConfig::fit, &F::frame_count));

  e.push_back(path_entry("frames", "directory of numbered PNG frames", &PriorPaths::frames));
  e.push_back(path_entry("flow", "directory of flow_%04d_%04d.flo files", &PriorPaths::flow));
  e.push_back(path_entry("depth", "directory of numbered PFM depth maps", &PriorPaths::depth));
  e.push_back(path_entry("masks", "directory of numbered PNG masks", &PriorPaths::masks));
  e.push_back(path_entry("features", "directory of numbered VGRF feature maps", &PriorPaths::features));
  e.push_back({{"paths", "out", "checkpoint written by fit"},
               [](const CliConfig& c) { return c.out; },
               [](CliConfig& c, const std::string& v) { c.out = v; }});
  e.push_back({{"paths", "log", "training log file (CSV)"},
               [](const CliConfig& c) { return c.log; },
               [](CliConfig& c, const std::string& v) { c.log = v; }});
  return e;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> all = build_entries();
  return all;
}

const Entry& find(const std::string& key) {
  for (const auto& e : entries()) {
    if (e.info.key == key) return e;
  }
  throw ContractError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : entries()) k.push_back(e.info);
    return k;
  }();
  return keys;
}

bool is_config_key(const std::string& key) {
  for (const auto& e : entries()) {
    if (e.info.key == key) return true;
  }
  return false;
}

void set_config_value(CliConfig& config, const std::string& key, const std::string& value) {
  find(key).set(config, trim(value));
}

std::string get_config_value(const CliConfig& config, const std::string& key) { return find(key).get(config); }

void apply_config_text(CliConfig& config, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ContractError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ContractError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      const Entry& e = find(key);
      if (!section.empty() && e.info.section != section) {
        throw ContractError("unknown config key '" + section + "." + key + "'");
      }
      e.set(config, trim(line.substr(eq + 1)));
    } catch (const ContractError& err) {
      throw ContractError(where + err.what());
    }
  }
}

void load_config_file(CliConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str(), path.string());
}

void apply_environment(CliConfig& config) {
  if (const char* seed = std::getenv("VGR_SEED")) set_config_value(config, "seed", seed);
  if (const char* threads = std::getenv("VGR_THREADS")) {
    const long n = parse_long("VGR_THREADS", trim(threads));
    if (n < 1) bad_value("VGR_THREADS", threads, "a positive integer");
    if (config.fit.render.threads <= 0 || config.fit.render.threads > n) config.fit.render.threads = int(n);
  }
}

std::string config_to_text(const CliConfig& config, bool include_paths) {
  std::string out, section;
  for (const auto& e : entries()) {
    if (!include_paths && e.info.section == "paths") continue;
    if (e.info.section != section) {
      if (!out.empty()) out += '\n';
      section = e.info.section;
      out += "[" + section + "]\n";
    }
    out += e.info.key + " = " + e.get(config) + "\n";
  }
  return out;
}

std::string fit_config_to_text(const FitConfig& config) {
  CliConfig c;
  c.fit = config;
  return config_to_text(c, false);
}

FitConfig fit_config_from_text(const std::string& text) {
  CliConfig c;
  apply_config_text(c, text, "checkpoint config");
  return c.fit;
}

}  // namespace vgr
