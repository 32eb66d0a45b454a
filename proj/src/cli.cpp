#include "absorb/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <random>

#include "absorb/data_model.hpp"
#include "absorb/draws_io.hpp"
#include "absorb/orb_impact.hpp"
#include "absorb/sampler.hpp"
#include "absorb/simulation.hpp"

namespace absorb {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "1.0.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

// Exclusive ownership of an output directory for the lifetime of the run.
class DirLock {
public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".absorb.lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create output directory " + dir.string());
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw UsageError("output directory " + dir.string() + " is locked by another run");
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

private:
  fs::path path_;
};

struct Manifest {
  json j;
  Manifest(const std::string& command, int argc, const char* const* argv) {
    j["command"] = command;
    j["argv"] = json::array();
    for (int i = 1; i < argc; ++i) j["argv"].push_back(argv[i]);
    j["tool_version"] = kToolVersion;
    j["started_at"] = utc_now();
    j["outputs"] = json::array();
  }
  void write(const fs::path& dir, const std::vector<std::string>& outputs) {
    for (const auto& o : outputs) j["outputs"].push_back(o);
    j["outputs"].push_back("manifest.json");
    j["finished_at"] = utc_now();
    write_file(dir / "manifest.json", j.dump(2) + "\n");
  }
};

struct FitFlags {
  std::string data;
  std::string model;
  std::optional<long> missing_studies;
  int chains = 3;
  long iters = 50000;
  long burnin = 10000;
  std::optional<std::uint64_t> seed;
  bool log_y1 = false;
  bool log_y2 = false;
  std::string out;
};

struct ImpactFlags {
  std::string abs_fit;
  std::string nbc_fit;
  std::string out;
  int grid_1d = 512;
  int grid_2d = 128;
};

struct SimulateFlags {
  int experiment = 1;
  int n = 50;
  long reps = 100;
  std::optional<std::uint64_t> seed;
  std::string models = "absorb,nbc,complete-case";
  int chains = 3;
  long iters = 50000;
  long burnin = 10000;
  std::string out;
};

struct GenerateFlags {
  int experiment = 3;
  int n = 50;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_fit(const FitFlags& f, int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const Model model = parse_model(f.model);
  if (f.missing_studies && model != Model::AbsorbIsm) {
    throw UsageError("--missing-studies requires --model ism");
  }
  if (model == Model::AbsorbIsm && !f.missing_studies) {
    throw UsageError("--model ism requires --missing-studies K");
  }
  if (f.missing_studies && *f.missing_studies < 0) throw UsageError("--missing-studies must be >= 0");

  SamplerConfig config;
  config.n_chains = f.chains;
  config.n_iter = f.iters;
  config.burn_in = f.burnin;
  config.seed = f.seed ? *f.seed : entropy_seed();
  try {
    config.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  Manifest manifest("fit", argc, argv);
  DirLock lock(f.out);
  ParseOptions opts;
  opts.log_transform_y1 = f.log_y1;
  opts.log_transform_y2 = f.log_y2;
  opts.ism_mode = model == Model::AbsorbIsm;
  BivariateDataset dataset = load_dataset(f.data, opts);
  if (model == Model::AbsorbIsm) {
    const auto k = static_cast<std::size_t>(*f.missing_studies);
    if (dataset.k_missing != 0 && dataset.k_missing != k) {
      err << "warning: data lists " << dataset.k_missing << " unreported studies; using --missing-studies "
          << k << "\n";
    }
    dataset.k_missing = k;
  } else {
    dataset.k_missing = 0;
  }

  const auto result = run_mcmc(model, dataset, PriorSpec{}, config);
  const fs::path dir(f.out);
  write_file(dir / "draws.csv", draws_csv(result.draws));
  write_file(dir / "summary.json", summary_json(result.draws));
  write_file(dir / "diagnostics.json", diagnostics_json(result.diagnostics));
  manifest.j["dataset_fingerprint"] = result.draws.dataset_fingerprint;
  manifest.j["seed"] = config.seed;
  manifest.j["model"] = to_string(model);
  manifest.write(dir, {"draws.csv", "summary.json", "diagnostics.json"});

  for (const auto& w : result.diagnostics.warnings) err << "warning: " << w << "\n";
  out << to_string(model) << " fit: " << result.draws.total_draws() << " draws, "
      << (result.diagnostics.converged ? "converged" : "NOT converged") << "\n";
  return result.diagnostics.converged ? kExitOk : kExitUnconverged;
}

int cmd_impact(const ImpactFlags& f, int argc, const char* const* argv, std::ostream& out) {
  Manifest manifest("impact", argc, argv);
  DirLock lock(f.out);
  const auto abs = load_fit(f.abs_fit);
  const auto nbc = load_fit(f.nbc_fit);
  const auto analysis = analyze_impact(abs, nbc, f.grid_1d, f.grid_2d);
  const fs::path dir(f.out);
  const std::vector<std::pair<std::string, const DensityGrid*>> grids{
      {"density_mu1_abs.csv", &analysis.grids.abs_mu1}, {"density_mu1_nbc.csv", &analysis.grids.nbc_mu1},
      {"density_mu2_abs.csv", &analysis.grids.abs_mu2}, {"density_mu2_nbc.csv", &analysis.grids.nbc_mu2},
      {"density_joint_abs.csv", &analysis.grids.abs_joint}, {"density_joint_nbc.csv", &analysis.grids.nbc_joint}};
  std::vector<std::string> outputs{"dreport.json"};
  write_file(dir / "dreport.json", dreport_json(analysis.report));
  for (const auto& [name, grid] : grids) {
    write_file(dir / name, density_csv(*grid));
    outputs.push_back(name);
  }
  manifest.j["dataset_fingerprint"] = abs.dataset_fingerprint;
  manifest.write(dir, outputs);
  const auto& r = analysis.report;
  out << "D1 = " << r.d1 << ", D2 = " << r.d2 << ", D12 = " << r.d12 << "\n";
  return kExitOk;
}

int cmd_simulate(const SimulateFlags& f, int argc, const char* const* argv, std::ostream& out,
                 std::ostream& err) {
  if (f.reps < 1) throw UsageError("--reps must be at least 1");
  if (f.n < 1) throw UsageError("--n must be at least 1");
  std::vector<SimModel> models;
  SimTruth truth;
  try {
    models = parse_sim_models(f.models);
    truth = builtin_design(f.experiment, f.n);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  SamplerConfig config;
  config.n_chains = f.chains;
  config.n_iter = f.iters;
  config.burn_in = f.burnin;
  const std::uint64_t seed = f.seed ? *f.seed : entropy_seed();
  try {
    config.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  Manifest manifest("simulate", argc, argv);
  DirLock lock(f.out);
  const auto table = run_experiment(truth, std::to_string(f.experiment), f.reps, models, config, seed);
  const fs::path dir(f.out);
  write_file(dir / "metrics.csv", table.csv());
  manifest.j["seed"] = seed;
  manifest.j["realized_missing"] = table.mean_missing;
  manifest.j["non_converged"] = table.non_converged;
  manifest.j["failed"] = table.failed;
  manifest.j["warnings"] = table.warnings;
  manifest.write(dir, {"metrics.csv"});
  for (const auto& w : table.warnings) err << "warning: " << w << "\n";
  out << table.csv();
  return kExitOk;
}

int cmd_generate(const GenerateFlags& f, std::ostream& out) {
  SimTruth truth;
  try {
    truth = builtin_design(f.experiment, f.n);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto data = generate_dataset(truth, f.seed);
  write_file(f.out, serialize_dataset(data.observed));
  out << "wrote " << data.observed.n() << " studies (" << data.observed.k_missing
      << " reporting neither outcome dropped) to " << f.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Outcome reporting bias: selection-model meta-analysis"};
  app.require_subcommand(1);

  FitFlags fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit ABSORB, NBC or ABSORB-ISM to a dataset");
  fit_cmd->add_option("--data", fit.data, "CSV with study_id,n,y1,s1,y2,s2")->required();
  fit_cmd->add_option("--model", fit.model, "absorb, nbc or ism")->required()
      ->check(CLI::IsMember({"absorb", "nbc", "ism"}));
  fit_cmd->add_option("--missing-studies", fit.missing_studies, "Number of unreported studies (ism)");
  fit_cmd->add_option("--chains", fit.chains)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--iters", fit.iters)->check(CLI::PositiveNumber);
  fit_cmd->add_option("--burnin", fit.burnin)->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--seed", fit.seed);
  fit_cmd->add_flag("--log-y1", fit.log_y1, "Analyze ln(y1)");
  fit_cmd->add_flag("--log-y2", fit.log_y2, "Analyze ln(y2)");
  fit_cmd->add_option("--out", fit.out)->required();

  ImpactFlags impact;
  auto* impact_cmd = app.add_subcommand("impact", "D measure between a bias-corrected and an uncorrected fit");
  impact_cmd->add_option("--abs-fit", impact.abs_fit)->required()->check(CLI::ExistingDirectory);
  impact_cmd->add_option("--nbc-fit", impact.nbc_fit)->required()->check(CLI::ExistingDirectory);
  impact_cmd->add_option("--grid-1d", impact.grid_1d)->check(CLI::Range(16, 65536));
  impact_cmd->add_option("--grid-2d", impact.grid_2d)->check(CLI::Range(16, 1024));
  impact_cmd->add_option("--out", impact.out)->required();

  SimulateFlags sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Bias, SE and coverage over simulated replications");
  sim_cmd->add_option("--experiment", sim.experiment)->required()->check(CLI::Range(1, 4));
  sim_cmd->add_option("--n", sim.n)->required();
  sim_cmd->add_option("--reps", sim.reps)->required();
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--models", sim.models);
  sim_cmd->add_option("--chains", sim.chains)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--iters", sim.iters)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--burnin", sim.burnin)->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--out", sim.out)->required();

  GenerateFlags gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write one simulated dataset as CSV");
  gen_cmd->add_option("--experiment", gen.experiment)->check(CLI::Range(1, 4));
  gen_cmd->add_option("--n", gen.n)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, argc, argv, out, err);
    if (impact_cmd->parsed()) return cmd_impact(impact, argc, argv, out);
    if (sim_cmd->parsed()) return cmd_simulate(sim, argc, argv, out, err);
    return cmd_generate(gen, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace absorb
