// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: coarray reports, Monte-Carlo sweeps, single
// realization spectra and operation-count tables.

#include "nkai/harness.hpp"
#include "nkai/serialize.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace nkai;

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << '}';
  return os.str();
}

ExperimentConfig base_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return experiment_from_json(load_config_file(path));
}

std::vector<Estimator> parse_estimators(const std::string& list) {
  std::vector<Estimator> out;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    try {
      out.push_back(estimator_from_string(name));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("option '--estimators': ") + e.what());
    }
  }
  if (out.empty()) throw ConfigError("option '--estimators': no estimator given");
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

struct SweepOptions {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::string estimators;
  std::optional<int> trials;
  std::optional<int> workers;
  bool quiet = false;
};

int run_sweep_command(SweepKind kind, const SweepOptions& opt) {
  ExperimentConfig config = base_config(opt.config);
  config.sweep = kind;
  if (opt.seed) config.seed = *opt.seed;
  if (!opt.estimators.empty()) config.estimators = parse_estimators(opt.estimators);
  if (opt.trials) config.trials = *opt.trials;
  if (opt.workers) config.workers = *opt.workers;
  if (!opt.output.empty()) {
    config.output_dir = opt.output;
  } else if (const char* env = std::getenv("NKAI_OUTPUT_DIR"); env && *env) {
    config.output_dir = env;
  }
  config.validate();

  ProgressFn progress;
  if (!opt.quiet) {
    progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 50 == 0) std::cerr << "\r" << done << "/" << total << " trials" << std::flush;
      if (done == total) std::cerr << '\n';
    };
  }
  const SweepResult result = run_sweep(config, progress);

  std::ostringstream csv;
  write_sweep_csv(csv, result);
  std::ostringstream summary;
  write_sweep_summary_json(summary, result);

  const fs::path dir(config.output_dir);
  const std::string stem = kind == SweepKind::Snr ? "sweep_snr" : "sweep_snapshots";
  write_file(dir / (stem + ".csv"), csv.str());
  write_file(dir / (stem + ".json"), summary.str());
  std::cout << csv.str();
  if (!opt.quiet) std::cerr << "wrote " << (dir / (stem + ".csv")).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-aided nested-array MUSIC: DOA estimation experiments"};
  app.require_subcommand(1);

  // geometry
  auto* geo = app.add_subcommand("geometry", "Print sensor positions and the difference coarray");
  std::vector<int> nested_levels;
  int ula_sensors = 0;
  double d1 = 0.5;
  bool geo_json = false;
  auto* nested_opt = geo->add_option("--nested", nested_levels, "Two-level nested array: M1 M2")->expected(2);
  auto* ula_opt = geo->add_option("--ula", ula_sensors, "Uniform linear array with M sensors");
  nested_opt->excludes(ula_opt);
  geo->add_option("--d1", d1, "Unit spacing in wavelengths")->capture_default_str();
  geo->add_flag("--json", geo_json, "Emit JSON instead of text");

  // sweeps
  SweepOptions snr_opt, snap_opt;
  auto add_sweep_options = [](CLI::App* sub, SweepOptions& o) {
    sub->add_option("-c,--config", o.config, "Experiment config (.toml or .json)");
    sub->add_option("-o,--output", o.output, "Output directory (overrides NKAI_OUTPUT_DIR and config)");
    sub->add_option("--seed", o.seed, "Master seed override");
    sub->add_option("--estimators", o.estimators,
                    "Comma list of music-ula, nested-music, ms-kai-nested-music");
    sub->add_option("--trials", o.trials, "Trials per sweep point");
    sub->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
    sub->add_flag("-q,--quiet", o.quiet, "No progress output");
  };
  auto* sweep_snr = app.add_subcommand("sweep-snr", "Monte-Carlo sweep over SNR at fixed snapshots");
  add_sweep_options(sweep_snr, snr_opt);
  auto* sweep_snap = app.add_subcommand("sweep-snapshots", "Monte-Carlo sweep over snapshot count at fixed SNR");
  add_sweep_options(sweep_snap, snap_opt);

  // spectrum
  auto* spec = app.add_subcommand("spectrum", "Pseudospectrum CSV for one realization");
  std::string spec_config, spec_output, spec_trace, spec_cov;
  std::optional<double> spec_snr;
  std::optional<int> spec_snapshots;
  std::uint64_t spec_seed = 1;
  std::string spec_estimator = "nested-music";
  spec->add_option("-c,--config", spec_config, "Experiment config supplying geometry and scenario");
  spec->add_option("--snr", spec_snr, "Per-source SNR in dB");
  spec->add_option("--snapshots", spec_snapshots, "Snapshot count");
  spec->add_option("--seed", spec_seed, "Realization seed")->capture_default_str();
  spec->add_option("--estimator", spec_estimator, "nested-music or music-ula")->capture_default_str();
  spec->add_option("-o,--output", spec_output, "CSV path (default: stdout)");
  spec->add_option("--trace", spec_trace, "Also run the knowledge-aided refinement and dump its trace JSON");
  spec->add_option("--covariance", spec_cov, "Dump the covariance fed to MUSIC (.csv or .bin)");

  // complexity
  auto* cx = app.add_subcommand("complexity", "Closed-form operation counts of the refinement");
  int cx_m = 8, cx_n = 150, cx_p = 2, cx_iter = 2;
  double cx_step = 0.05, cx_mu = 0.1;
  cx->add_option("--M", cx_m, "Physical sensors")->capture_default_str();
  cx->add_option("--N", cx_n, "Snapshots")->capture_default_str();
  cx->add_option("--P", cx_p, "Sources")->capture_default_str();
  cx->add_option("--step", cx_step, "Grid step in degrees")->capture_default_str();
  cx->add_option("--mu-increment", cx_mu, "mu grid increment")->capture_default_str();
  cx->add_option("--iterations", cx_iter, "Refinement iterations")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*geo) {
      ArrayGeometry g = ArrayGeometry::nested(4, 4, d1);
      if (!nested_levels.empty()) {
        g = ArrayGeometry::nested(nested_levels[0], nested_levels[1], d1);
      } else if (*ula_opt) {
        g = ArrayGeometry::ula(ula_sensors, d1);
      }
      const Coarray co = difference_coarray(g);
      if (geo_json) {
        Json j = to_json(g);
        j["positions"] = g.positions();
        j["lags"] = co.lags;
        j["multiplicity"] = co.multiplicity;
        j["contiguous"] = co.contiguous;
        j["virtual_ula_length"] = co.virtual_aperture;
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << "kind: " << to_json(g)["kind"].get<std::string>() << '\n'
                  << "sensors: " << g.size() << '\n'
                  << "d1: " << format_number(g.d1()) << '\n'
                  << "positions: " << join_ints(g.positions()) << '\n'
                  << "coarray span: +-" << co.lags.back() << " (" << co.lags.size() << " distinct lags)\n"
                  << "contiguous: " << (co.contiguous ? "yes" : "no") << '\n'
                  << "Mbar: " << co.virtual_aperture << '\n';
      }
      return 0;
    }
    if (*sweep_snr) return run_sweep_command(SweepKind::Snr, snr_opt);
    if (*sweep_snap) return run_sweep_command(SweepKind::Snapshots, snap_opt);
    if (*spec) {
      const ExperimentConfig config = base_config(spec_config);
      const double snr = spec_snr.value_or(config.snr_db.front());
      const int snapshots = spec_snapshots.value_or(config.snapshots.front());
      const auto scenario = SourceScenario::equal_power(config.doas_deg, snr, config.noise_power);
      const Estimator est = estimator_from_string(spec_estimator);
      const double step = config.kai.grid_step_deg;
      const int p = config.sources();

      HermitianCovariance r;
      std::optional<ScanGrid> grid;
      if (est == Estimator::MusicUla) {
        const ArrayGeometry ula = config.baseline_ula();
        Rng rng = make_rng(spec_seed, 0);
        r = sample_covariance(synthesize(ula, scenario, snapshots, rng).data);
        grid.emplace(ula.positions(), ula.d1(), step);
      } else {
        Rng rng = make_rng(spec_seed, 0);
        r = smoothed_covariance(synthesize(config.geometry, scenario, snapshots, rng),
                                config.kai.duplicate_policy);
        grid.emplace(coarray_scan_grid(config.geometry, step));
      }
      std::ostringstream csv;
      write_spectrum_csv(csv, pseudospectrum(r, p, *grid));
      if (spec_output.empty()) {
        std::cout << csv.str();
      } else {
        write_file(spec_output, csv.str());
      }
      if (!spec_cov.empty()) {
        std::ostringstream dump;
        if (fs::path(spec_cov).extension() == ".bin") {
          write_matrix_binary(dump, r.matrix());
        } else {
          write_matrix_csv(dump, r.matrix());
        }
        write_file(spec_cov, dump.str());
      }
      if (!spec_trace.empty()) {
        if (est == Estimator::MusicUla) throw ConfigError("option '--trace': needs a nested estimator");
        const KaiResult kai = ms_kai_music(r, p, config.kai, *grid);
        Json j = to_json(kai.trace);
        j["estimates"] = kai.estimates.angles;
        j["kai"] = to_json(config.kai);
        write_file(spec_trace, j.dump(2) + "\n");
      }
      return 0;
    }
    if (*cx) {
      const ComplexityCounts c = complexity_estimate(cx_m, cx_n, cx_p, cx_step, cx_mu, cx_iter);
      std::cout << "Mbar: " << format_number(c.virtual_length) << '\n'
                << "tau: " << format_number(c.tau) << '\n'
                << "multiplications: " << format_number(c.multiplications) << '\n'
                << "additions: " << format_number(c.additions) << '\n'
                << "grid_search_multiplications: " << format_number(c.grid_multiplications) << '\n'
                << "grid_search_additions: " << format_number(c.grid_additions) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
