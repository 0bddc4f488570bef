#include "dspect/config.hpp"

#include <algorithm>
#include <stdexcept>

#include "dspect/io.hpp"

namespace dspect {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      throw std::invalid_argument("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(where + "." + key + " has the wrong type");
  }
}

}  // namespace

void RunConfig::validate() const {
  const auto& presets = phantom_presets();
  if (std::find(presets.begin(), presets.end(), preset) == presets.end()) {
    throw std::invalid_argument("phantom.preset: unknown preset '" + preset + "'");
  }
  geom.validate();
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  const auto& kinds = schedule_kinds();
  if (std::find(kinds.begin(), kinds.end(), schedule) == kinds.end()) {
    throw std::invalid_argument("schedule.kind: unknown schedule '" + schedule + "'");
  }
  if (bins_per_head < 1) throw std::invalid_argument("schedule.bins_per_head must be positive");
  if (bin_width < 0.0) throw std::invalid_argument("schedule.bin_width must be nonnegative");
  if (rays_per_bin < 1) throw std::invalid_argument("schedule.rays_per_bin must be positive");
  if (attenuation.kind != "none" && attenuation.kind != "disk") {
    throw std::invalid_argument("attenuation.kind must be none or disk");
  }
  if (attenuation.mu < 0.0 || !(attenuation.radius_fraction > 0.0)) {
    throw std::invalid_argument("attenuation needs mu >= 0 and radius_fraction > 0");
  }
  if (noise.kind == "poisson") {
    if (noise.scale < 0.0 || (noise.scale == 0.0 && !(noise.target_mean_counts > 0.0))) {
      throw std::invalid_argument("noise: poisson needs scale > 0 or target_mean_counts > 0");
    }
  } else if (noise.kind == "montecarlo") {
    if (!(noise.lambda > 0.0)) throw std::invalid_argument("noise.lambda must be positive for montecarlo");
  } else if (noise.kind != "none") {
    throw std::invalid_argument("noise.kind must be none, poisson or montecarlo");
  }
  if (regions < 0) throw std::invalid_argument("regions must be at least 1 (or 0 for the phantom's count)");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be nonnegative");
  solver.validate();
}

Index RunConfig::resolved_regions() const {
  if (regions > 0) return regions;
  Index count = 0;
  preset_regions(preset, geom, &count);
  return count;
}

double RunConfig::resolved_bin_width() const {
  return bin_width > 0.0 ? bin_width : default_bin_width(geom, bins_per_head);
}

AcquisitionSchedule RunConfig::make_schedule() const {
  return schedule_preset(schedule, steps, bins_per_head, resolved_bin_width(), rays_per_bin);
}

AttenuationMap RunConfig::make_attenuation() const {
  if (attenuation.kind == "disk") return disk_attenuation(geom, attenuation.mu, attenuation.radius_fraction);
  return AttenuationMap::zeros(geom.pixels());
}

Phantom RunConfig::make_phantom() const { return dspect::make_phantom(preset, geom, steps); }

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  reject_unknown(j, {"phantom", "steps", "schedule", "attenuation", "noise", "regions", "objective", "solver",
                     "checkpoint_every", "seed"},
                 "config");
  if (j.contains("phantom")) {
    const auto& p = j["phantom"];
    reject_unknown(p, {"preset", "n1", "n2", "pixel_size"}, "phantom");
    read(p, "preset", cfg.preset, "phantom");
    read(p, "n1", cfg.geom.n1, "phantom");
    read(p, "n2", cfg.geom.n2, "phantom");
    read(p, "pixel_size", cfg.geom.pixel_size, "phantom");
  }
  read(j, "steps", cfg.steps, "config");
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    reject_unknown(s, {"kind", "bins_per_head", "bin_width", "rays_per_bin"}, "schedule");
    read(s, "kind", cfg.schedule, "schedule");
    read(s, "bins_per_head", cfg.bins_per_head, "schedule");
    read(s, "bin_width", cfg.bin_width, "schedule");
    read(s, "rays_per_bin", cfg.rays_per_bin, "schedule");
  }
  if (j.contains("attenuation")) {
    const auto& a = j["attenuation"];
    reject_unknown(a, {"kind", "mu", "radius_fraction"}, "attenuation");
    read(a, "kind", cfg.attenuation.kind, "attenuation");
    read(a, "mu", cfg.attenuation.mu, "attenuation");
    read(a, "radius_fraction", cfg.attenuation.radius_fraction, "attenuation");
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    reject_unknown(n, {"kind", "scale", "target_mean_counts", "lambda"}, "noise");
    read(n, "kind", cfg.noise.kind, "noise");
    read(n, "scale", cfg.noise.scale, "noise");
    read(n, "target_mean_counts", cfg.noise.target_mean_counts, "noise");
    read(n, "lambda", cfg.noise.lambda, "noise");
  }
  read(j, "regions", cfg.regions, "config");
  if (j.contains("objective")) {
    const auto& o = j["objective"];
    reject_unknown(o, {"alpha", "beta", "delta", "kl_floor"}, "objective");
    read(o, "alpha", cfg.solver.params.alpha, "objective");
    read(o, "beta", cfg.solver.params.beta, "objective");
    read(o, "delta", cfg.solver.params.delta, "objective");
    read(o, "kl_floor", cfg.solver.params.kl_floor, "objective");
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    reject_unknown(s, {"outer_max", "inner_max", "damping", "outer_tol", "inner_tol", "em_floor"}, "solver");
    read(s, "outer_max", cfg.solver.outer_max, "solver");
    read(s, "inner_max", cfg.solver.inner_max, "solver");
    read(s, "damping", cfg.solver.damping, "solver");
    read(s, "outer_tol", cfg.solver.outer_tol, "solver");
    read(s, "inner_tol", cfg.solver.inner_tol, "solver");
    read(s, "em_floor", cfg.solver.em_floor, "solver");
  }
  read(j, "checkpoint_every", cfg.checkpoint_every, "config");
  read(j, "seed", cfg.seed, "config");
  cfg.solver.seed = cfg.seed;
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  return json{
      {"phantom", {{"preset", cfg.preset}, {"n1", cfg.geom.n1}, {"n2", cfg.geom.n2}, {"pixel_size", cfg.geom.pixel_size}}},
      {"steps", cfg.steps},
      {"schedule", {{"kind", cfg.schedule}, {"bins_per_head", cfg.bins_per_head}, {"bin_width", cfg.bin_width},
                    {"rays_per_bin", cfg.rays_per_bin}}},
      {"attenuation",
       {{"kind", cfg.attenuation.kind}, {"mu", cfg.attenuation.mu}, {"radius_fraction", cfg.attenuation.radius_fraction}}},
      {"noise",
       {{"kind", cfg.noise.kind},
        {"scale", cfg.noise.scale},
        {"target_mean_counts", cfg.noise.target_mean_counts},
        {"lambda", cfg.noise.lambda}}},
      {"regions", cfg.regions},
      {"objective",
       {{"alpha", cfg.solver.params.alpha},
        {"beta", cfg.solver.params.beta},
        {"delta", cfg.solver.params.delta},
        {"kl_floor", cfg.solver.params.kl_floor}}},
      {"solver",
       {{"outer_max", cfg.solver.outer_max},
        {"inner_max", cfg.solver.inner_max},
        {"damping", cfg.solver.damping},
        {"outer_tol", cfg.solver.outer_tol},
        {"inner_tol", cfg.solver.inner_tol},
        {"em_floor", cfg.solver.em_floor}}},
      {"checkpoint_every", cfg.checkpoint_every},
      {"seed", cfg.seed},
  };
}

RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace dspect
