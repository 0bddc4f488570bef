#include "dspect/commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <algorithm>
#include <map>
#include <sstream>

#include "dspect/io.hpp"
#include "dspect/metrics.hpp"

namespace dspect {

using nlohmann::json;
namespace fs = std::filesystem;

void SolverOverrides::apply(RunConfig& cfg) const {
  if (alpha) cfg.solver.params.alpha = *alpha;
  if (beta) cfg.solver.params.beta = *beta;
  if (delta) cfg.solver.params.delta = *delta;
  if (damping) cfg.solver.damping = *damping;
  if (outer_tol) cfg.solver.outer_tol = *outer_tol;
  if (inner_tol) cfg.solver.inner_tol = *inner_tol;
  if (em_floor) cfg.solver.em_floor = *em_floor;
  if (outer_max) cfg.solver.outer_max = *outer_max;
  if (inner_max) cfg.solver.inner_max = *inner_max;
  if (checkpoint_every) cfg.checkpoint_every = *checkpoint_every;
  if (seed) {
    cfg.seed = *seed;
    cfg.solver.seed = *seed;
  }
}

namespace {

// Collects output files and their hashes for the manifest.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw DataError("cannot create output directory " + dir_.string());
  }

  void put(const std::string& name, const std::string& bytes) {
    try {
      write_file(dir_ / name, bytes);
    } catch (const std::runtime_error& e) {
      throw DataError(e.what());
    }
    hashes_[name] = sha256_hex(bytes);
  }

  void manifest(json body) {
    body["format_version"] = manifest_format_version;
    body["files"] = hashes_;
    put_raw("manifest.json", body.dump(2) + "\n");
  }

 private:
  void put_raw(const std::string& name, const std::string& bytes) {
    try {
      write_file(dir_ / name, bytes);
    } catch (const std::runtime_error& e) {
      throw DataError(e.what());
    }
  }

  fs::path dir_;
  std::map<std::string, std::string> hashes_;
};

RunConfig checked(RunConfig cfg) {
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

RunConfig load_checked(const fs::path& path) {
  try {
    return checked(load_config(path.string()));
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
}

std::vector<std::string> region_header(Index regions) {
  std::vector<std::string> header;
  for (Index k = 0; k < regions; ++k) header.push_back("region_" + std::to_string(k));
  return header;
}

Matrix image_of(const Vector& v, const ImageGeometry& geom) {
  Matrix img(geom.n1, geom.n2);
  for (Index r = 0; r < geom.n1; ++r) {
    for (Index c = 0; c < geom.n2; ++c) img(r, c) = v[r * geom.n2 + c];
  }
  return img;
}

std::string read_checked(const fs::path& dir, const json& manifest, const std::string& name) {
  std::string bytes;
  try {
    bytes = read_file(dir / name);
  } catch (const FormatError& e) {
    throw DataError(e.what());
  }
  const auto& files = manifest.at("files");
  if (!files.contains(name)) throw DataError(name + " is not listed in " + (dir / "manifest.json").string());
  if (files.at(name).get<std::string>() != sha256_hex(bytes)) {
    throw DataError((dir / name).string() + " does not match the hash in its manifest");
  }
  return bytes;
}

json read_manifest(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const FormatError& e) {
    throw DataError(e.what());
  } catch (const json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("files") || !manifest.contains("command") ||
      manifest.value("format_version", 0) != manifest_format_version) {
    throw DataError((dir / "manifest.json").string() + " is not a manifest this version can read");
  }
  return manifest;
}

RunConfig solver_config_for(const Dataset& data, const std::optional<fs::path>& config,
                            const SolverOverrides& overrides) {
  RunConfig cfg = data.config;
  if (config) {
    const RunConfig other = load_checked(*config);
    cfg.solver = other.solver;
    cfg.checkpoint_every = other.checkpoint_every;
    cfg.seed = other.seed;
  }
  overrides.apply(cfg);
  return checked(cfg);
}

std::string trace_csv(const ReconState& state) {
  std::string out = "iteration,kl,tv,l1,smooth,total,change,label_inner,curve_inner\n";
  for (std::size_t i = 0; i < state.objective_trace.size(); ++i) {
    const auto& o = state.objective_trace[i];
    out += std::to_string(i) + ',' + format_double(o.kl) + ',' + format_double(o.tv) + ',' + format_double(o.l1) +
           ',' + format_double(o.smooth) + ',' + format_double(o.total()) + ',';
    if (i > 0) {
      out += format_double(state.change_trace[i - 1]);
      out += ',';
      out += i - 1 < state.label_inner_iterations.size() ? std::to_string(state.label_inner_iterations[i - 1]) : "0";
      out += ',';
      out += i - 1 < state.curve_inner_iterations.size() ? std::to_string(state.curve_inner_iterations[i - 1]) : "0";
    } else {
      out += ",,";
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const std::string cell = text.substr(pos, comma - pos);
    double v = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
      throw UsageError("malformed grid '" + text + "': expected comma-separated numbers");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

Dataset load_dataset(const fs::path& dir) {
  Dataset data;
  data.manifest = read_manifest(dir);
  if (data.manifest.at("command") != "simulate") throw DataError(dir.string() + " is not a simulate output");
  try {
    data.config = checked(config_from_json(data.manifest.at("config")));
  } catch (const std::exception& e) {
    throw DataError(dir.string() + ": manifest config is unusable: " + e.what());
  }
  const RunConfig& cfg = data.config;

  const std::string sino_bytes = read_checked(dir, data.manifest, "sinogram.dspt");
  data.sinogram_sha256 = sha256_hex(sino_bytes);
  try {
    const DenseArray sino = decode_dense(sino_bytes);
    const DenseArray mu = decode_dense(read_checked(dir, data.manifest, "mu.dspt"));
    const DenseArray regions = decode_dense(read_checked(dir, data.manifest, "phantom_regions.dspt"));
    const Matrix curves = parse_matrix_csv(read_checked(dir, data.manifest, "curves.csv"));

    const AcquisitionSchedule schedule = cfg.make_schedule();
    if (sino.dtype != "f64le" || sino.shape != std::vector<Index>{schedule.bins_per_step(), cfg.steps}) {
      throw DataError("sinogram.dspt has shape incompatible with its manifest (expected " +
                      std::to_string(schedule.bins_per_step()) + "," + std::to_string(cfg.steps) + ")");
    }
    const std::vector<Index> image_shape{cfg.geom.n1, cfg.geom.n2};
    if (mu.dtype != "f64le" || mu.shape != image_shape || regions.dtype != "i32le" || regions.shape != image_shape) {
      throw DataError("phantom files do not match the manifest geometry");
    }
    data.sinogram.resize(sino.shape[0], sino.shape[1]);
    for (Index r = 0; r < data.sinogram.rows(); ++r) {
      for (Index c = 0; c < data.sinogram.cols(); ++c) {
        data.sinogram(r, c) = sino.f64[static_cast<std::size_t>(r * data.sinogram.cols() + c)];
      }
    }
    data.mu.mu = Eigen::Map<const Vector>(mu.f64.data(), static_cast<Index>(mu.f64.size()));

    data.truth.name = cfg.preset;
    data.truth.geom = cfg.geom;
    data.truth.region_map.assign(regions.i32.begin(), regions.i32.end());
    data.truth.curves.values = curves;
    if (curves.rows() != cfg.steps) throw DataError("curves.csv has the wrong number of time steps");
    for (int r : data.truth.region_map) {
      if (r < 0 || r >= curves.cols()) throw DataError("phantom_regions.dspt refers to a missing region");
    }
  } catch (const FormatError& e) {
    throw DataError(dir.string() + ": " + e.what());
  }
  return data;
}

int cmd_simulate(const SimulateOptions& opts) {
  RunConfig cfg = load_checked(opts.config);
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.solver.seed = *opts.seed;
  }

  const Phantom ph = cfg.make_phantom();
  const AcquisitionSchedule schedule = cfg.make_schedule();
  const AttenuationMap mu = cfg.make_attenuation();

  Sinogram sino;
  double scale = 0.0;
  if (cfg.noise.kind == "montecarlo") {
    sino = monte_carlo(ph, schedule, mu, cfg.noise.lambda, cfg.seed);
  } else {
    sino = simulate_clean(ph, schedule, mu);
    if (cfg.noise.kind == "poisson") {
      scale = cfg.noise.scale > 0.0 ? cfg.noise.scale : scale_for_mean_counts(sino.data, cfg.noise.target_mean_counts);
      sino = poissonize(sino, scale, cfg.seed);
    }
  }

  OutputDir out(opts.out);
  out.put("sinogram.dspt", encode_dense(sino.data));
  out.put("phantom_regions.dspt", encode_dense(ph.region_map, {cfg.geom.n1, cfg.geom.n2}));
  out.put("curves.csv", matrix_csv(ph.curves.values, region_header(ph.regions())));
  out.put("mu.dspt", encode_dense(image_of(mu.mu, cfg.geom)));

  json body{{"command", "simulate"}, {"config", config_to_json(cfg)}, {"seed", cfg.seed}};
  if (cfg.noise.kind == "poisson") body["poisson_scale"] = scale;
  out.manifest(std::move(body));
  return exit_ok;
}

int cmd_reconstruct(const ReconstructOptions& opts) {
  const Dataset data = load_dataset(opts.data);
  const RunConfig cfg = solver_config_for(data, opts.config, opts.overrides);
  const Index regions = cfg.resolved_regions();
  const ProjectorSet projectors = build_projector_set(cfg.geom, cfg.make_schedule(), data.mu);
  const GridShape grid{cfg.geom.n1, cfg.geom.n2};

  OutputDir out(opts.out);
  IterationCallback on_iteration;
  if (cfg.checkpoint_every > 0) {
    on_iteration = [&](const ReconState& s) {
      if (s.iterations % cfg.checkpoint_every != 0) return;
      write_file(opts.out / "checkpoint_U.dspt", encode_dense(s.labels));
      write_file(opts.out / "checkpoint_C.csv", matrix_csv(s.curves, region_header(regions)));
    };
  }

  ReconState state;
  try {
    state = opts.baseline_em
                ? reconstruct_baseline_em(data.sinogram, projectors, grid, regions, cfg.solver, std::nullopt, on_iteration)
                : reconstruct(data.sinogram, projectors, grid, regions, cfg.solver, std::nullopt, on_iteration);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("reconstruction refused the data: ") + e.what());
  }

  out.put("U.dspt", encode_dense(state.labels));
  out.put("U_hard.dspt", encode_dense(state.hard_labels(), {cfg.geom.n1, cfg.geom.n2}));
  out.put("C.csv", matrix_csv(state.curves, region_header(regions)));
  out.put("trace.csv", trace_csv(state));
  const Matrix frames = state.labels * state.curves.transpose();
  for (Index t : frame_steps) {
    if (t > cfg.steps) continue;
    char name[32];
    std::snprintf(name, sizeof name, "frame_t%03ld.dspt", static_cast<long>(t));
    out.put(name, encode_dense(image_of(frames.col(t - 1), cfg.geom)));
  }

  json body{{"command", "reconstruct"},
            {"config", config_to_json(cfg)},
            {"seed", cfg.seed},
            {"method", opts.baseline_em ? "baseline_em" : "regularised"},
            {"inputs", {{"sinogram.dspt", data.sinogram_sha256}}},
            {"regions", regions},
            {"iterations", state.iterations},
            {"converged", state.converged},
            {"inner_nonconverged", state.inner_nonconverged},
            {"zero_sensitivity_entries", state.zero_sensitivity_entries},
            {"final_objective", state.objective_trace.back().total()}};
  out.manifest(std::move(body));
  return state.converged ? exit_ok : exit_nonconvergence;
}

int cmd_evaluate(const EvaluateOptions& opts) {
  const Dataset data = load_dataset(opts.data);
  const json manifest = read_manifest(opts.recon);
  if (manifest.at("command") != "reconstruct") throw DataError(opts.recon.string() + " is not a reconstruct output");
  const auto inputs = manifest.value("inputs", json::object());
  if (inputs.value("sinogram.dspt", std::string()) != data.sinogram_sha256) {
    throw DataError("lineage mismatch: " + opts.recon.string() + " was not reconstructed from " + opts.data.string());
  }

  Matrix labels;
  Matrix curves;
  try {
    const DenseArray u = decode_dense(read_checked(opts.recon, manifest, "U.dspt"));
    if (u.dtype != "f64le" || u.shape.size() != 2) throw DataError("U.dspt must be a 2-d f64le array");
    labels.resize(u.shape[0], u.shape[1]);
    for (Index r = 0; r < labels.rows(); ++r) {
      for (Index c = 0; c < labels.cols(); ++c) labels(r, c) = u.f64[static_cast<std::size_t>(r * labels.cols() + c)];
    }
    curves = parse_matrix_csv(read_checked(opts.recon, manifest, "C.csv"));
  } catch (const FormatError& e) {
    throw DataError(e.what());
  }

  const ProjectorSet projectors = build_projector_set(data.config.geom, data.config.make_schedule(), data.mu);
  EvalReport report;
  try {
    report = evaluate(labels, curves, data.truth, data.sinogram, projectors);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("cannot evaluate: ") + e.what());
  }

  std::ostringstream csv;
  write_report_csv(csv, report);
  OutputDir out(opts.out);
  out.put("report.csv", csv.str());
  out.manifest(json{{"command", "evaluate"},
                    {"inputs",
                     {{"sinogram.dspt", data.sinogram_sha256},
                      {"U.dspt", manifest.at("files").at("U.dspt")},
                      {"C.csv", manifest.at("files").at("C.csv")}}}});
  return exit_ok;
}

int cmd_sweep(const SweepOptions& opts) {
  const std::vector<double> grid = parse_grid(opts.grid);
  if (opts.param != "alpha" && opts.param != "beta" && opts.param != "delta") {
    throw UsageError("--param must be alpha, beta or delta");
  }
  const Dataset data = load_dataset(opts.data);
  const RunConfig cfg = solver_config_for(data, opts.config, opts.overrides);
  for (double v : grid) {
    if (v < 0.0) throw UsageError("regularisation weights must be nonnegative");
  }
  if (cfg.resolved_regions() != data.truth.regions()) {
    throw UsageError("sweep scores against the phantom, so regions must equal its region count");
  }
  const ProjectorSet projectors = build_projector_set(cfg.geom, cfg.make_schedule(), data.mu);

  const auto rows = sweep(opts.param, grid, cfg.solver, data.sinogram, projectors, data.truth);
  std::ostringstream csv;
  write_sweep_csv(csv, opts.param, rows);
  OutputDir out(opts.out);
  out.put("sweep.csv", csv.str());
  json values = json::array();
  for (double v : grid) values.push_back(v);
  out.manifest(json{{"command", "sweep"},
                    {"config", config_to_json(cfg)},
                    {"seed", cfg.seed},
                    {"param", opts.param},
                    {"grid", values},
                    {"inputs", {{"sinogram.dspt", data.sinogram_sha256}}}});
  const bool all_converged = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.converged; });
  return all_converged ? exit_ok : exit_nonconvergence;
}

}  // namespace dspect
