#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dapinn/metrics.hpp"
#include "dapinn/network.hpp"
#include "dapinn/problems.hpp"
#include "dapinn/training.hpp"
#include "reference_data.hpp"

namespace fs = std::filesystem;
using namespace dapinn;

namespace {

constexpr int kExitBadConfig = 2;

struct ExperimentConfig {
  std::string problem;
  std::size_t n = 0;  // 0: use the problem's default
  std::optional<std::array<std::size_t, 3>> explicit_counts;
  int restarts = 1;
  std::uint64_t seed = 0;
  double noise = -1.0;  // <0: use the problem's default
  std::string out = "out";
  std::string grid_file;
  int depth = -1;
  int width = -1;
  double lambda = -1.0;
  double lambda_reg = -1.0;
  std::string optimizer;
  int max_iters = -1;
};

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value");
    const std::string key = strip(line.substr(0, eq));
    const std::string val = strip(line.substr(eq + 1));
    if (key == "problem") cfg.problem = val;
    else if (key == "n") cfg.n = std::stoull(val);
    else if (key == "restarts") cfg.restarts = std::stoi(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "noise") cfg.noise = std::stod(val);
    else if (key == "out") cfg.out = val;
    else if (key == "grid") cfg.grid_file = val;
    else if (key == "depth") cfg.depth = std::stoi(val);
    else if (key == "width") cfg.width = std::stoi(val);
    else if (key == "lambda") cfg.lambda = std::stod(val);
    else if (key == "lambda_reg") cfg.lambda_reg = std::stod(val);
    else if (key == "optimizer") cfg.optimizer = val;
    else if (key == "max_iters") cfg.max_iters = std::stoi(val);
    else
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
  }
}

std::size_t default_n(const ProblemSpec& spec) {
  switch (spec.kind) {
    case ProblemKind::Poisson2D: return 400;
    case ProblemKind::Heat1D: return 800;
    case ProblemKind::Wave1D: return 3600;
    case ProblemKind::Stokes2D: return 400;
    case ProblemKind::HeatND: return 16384;  // fixed counts take precedence
  }
  return 400;
}

Hyperparameters default_config(const ProblemSpec& spec) {
  Hyperparameters h;
  switch (spec.kind) {
    case ProblemKind::Poisson2D:
    case ProblemKind::Wave1D:
    case ProblemKind::Stokes2D:
      h.depth = 4;
      h.width = 24;
      h.lambda = 0.001;
      break;
    case ProblemKind::Heat1D:
      h.depth = 8;
      h.width = 20;
      h.lambda = 0.001;
      break;
    case ProblemKind::HeatND:
      h.depth = 4;
      h.width = 20;
      h.lambda = spec.spatial_dim <= 5 ? 0.01 : 0.001;
      h.lambda_reg = spec.spatial_dim >= 20 ? 1e-6 : 0.0;
      break;
  }
  return h;
}

std::vector<Hyperparameters> load_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read grid file: " + path);
  nlohmann::json j;
  in >> j;
  if (j.is_string() || (j.is_object() && j.value("grid", "") == "table1"))
    return default_hyper_grid();
  std::vector<Hyperparameters> grid;
  for (const auto& e : j) {
    Hyperparameters h;
    h.depth = e.value("depth", h.depth);
    h.width = e.value("width", h.width);
    h.lambda = e.value("lambda", h.lambda);
    h.lambda_reg = e.value("lambda_reg", h.lambda_reg);
    h.q = e.value("q", h.q);
    h.optimizer = e.value("optimizer", h.optimizer);
    h.max_iterations = e.value("max_iterations", h.max_iterations);
    grid.push_back(h);
  }
  if (grid.empty()) throw std::runtime_error("grid file holds no configurations");
  return grid;
}

/// Applies CLI/file overrides on the problem's default configuration.
Hyperparameters resolve_config(const ExperimentConfig& cfg,
                               const ProblemSpec& spec) {
  Hyperparameters h = default_config(spec);
  if (cfg.depth > 0) h.depth = cfg.depth;
  if (cfg.width > 0) h.width = cfg.width;
  if (cfg.lambda >= 0) h.lambda = cfg.lambda;
  if (cfg.lambda_reg >= 0) h.lambda_reg = cfg.lambda_reg;
  if (!cfg.optimizer.empty()) h.optimizer = cfg.optimizer;
  if (cfg.max_iters > 0) h.max_iterations = cfg.max_iters;
  return h;
}

SetSizes resolve_sizes(const ExperimentConfig& cfg, const ProblemSpec& spec) {
  SetSizes sizes;
  sizes.n_total = cfg.n > 0 ? cfg.n : default_n(spec);
  sizes.explicit_counts = cfg.explicit_counts;
  return sizes;
}

void write_config_comments(std::ostream& os, const ExperimentConfig& cfg,
                           const Hyperparameters& h, const ProblemSpec& spec,
                           const SetSizes& sizes) {
  os << "# problem=" << spec.id << "\n";
  os << "# n=" << sizes.n_total << "\n";
  os << "# restarts=" << cfg.restarts << "\n";
  os << "# seed=" << cfg.seed << "\n";
  os << "# noise=" << fmt_double(spec.noise_level) << "\n";
  os << "# depth=" << h.depth << " width=" << h.width
     << " lambda=" << fmt_double(h.lambda)
     << " lambda_reg=" << fmt_double(h.lambda_reg) << " q=" << h.q
     << " optimizer=" << h.optimizer << " max_iterations=" << h.max_iterations
     << "\n";
}

CsvRowInputs row_inputs(const ProblemSpec& spec, const Hyperparameters& h,
                        const TrainRecord& rec, int restarts) {
  CsvRowInputs in;
  in.problem = spec.id;
  in.n_total = rec.n_int + rec.n_sb + rec.n_d;
  in.n_int = rec.n_int;
  in.n_sb = rec.n_sb;
  in.n_d = rec.n_d;
  in.depth = h.depth;
  in.width = h.width;
  in.lambda = h.lambda;
  in.lambda_reg = h.lambda_reg;
  in.seed = rec.seed;
  in.restarts = restarts;
  in.wall_seconds = rec.wall_seconds;
  return in;
}

// --- reference table ---------------------------------------------------------

struct RefRow {
  std::string label;
  std::size_t n = 0;
  int depth = 0, width = 0;
  double lambda_reg = 0, lambda = 0;
  std::string e_t, l2, h1, supl2, p;
};

std::map<std::string, std::vector<RefRow>> load_reference() {
  std::map<std::string, std::vector<RefRow>> out;
  std::istringstream is(cli::reference_values_csv());
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    f.resize(12);
    RefRow r;
    r.label = f[1];
    r.n = std::stoull(f[2]);
    r.depth = std::stoi(f[3]);
    r.width = std::stoi(f[4]);
    r.lambda_reg = std::stod(f[5]);
    r.lambda = std::stod(f[6]);
    r.e_t = f[7];
    r.l2 = f[8];
    r.h1 = f[9];
    r.supl2 = f[10];
    r.p = f[11];
    out[f[0]].push_back(r);
  }
  return out;
}

std::string ref_comment(const RefRow& r) {
  std::ostringstream os;
  os << "#ref," << r.label << ",N=" << r.n << ",depth=" << r.depth
     << ",width=" << r.width << ",lambda_reg=" << r.lambda_reg
     << ",lambda=" << r.lambda << ",E_T=" << r.e_t;
  if (!r.l2.empty()) os << ",L2_pct=" << r.l2;
  if (!r.h1.empty()) os << ",H1_pct=" << r.h1;
  if (!r.supl2.empty()) os << ",supL2_pct=" << r.supl2;
  if (!r.p.empty()) os << ",p_L2_pct=" << r.p;
  return os.str();
}

// --- commands ----------------------------------------------------------------

int cmd_run(const ExperimentConfig& cfg) {
  ProblemSpec spec = problem_by_id(cfg.problem);
  if (cfg.noise >= 0.0) spec.noise_level = cfg.noise;
  const SetSizes sizes = resolve_sizes(cfg, spec);

  std::vector<Hyperparameters> grid;
  if (!cfg.grid_file.empty())
    grid = load_grid_file(cfg.grid_file);
  else
    grid.push_back(resolve_config(cfg, spec));
  if (cfg.max_iters > 0)
    for (auto& h : grid) h.max_iterations = cfg.max_iters;

  const EnsembleResult result =
      ensemble(spec, grid, cfg.restarts, sizes, cfg.seed, true);

  fs::create_directories(cfg.out);

  // one CSV row per configuration (ranked), metrics from the best restart
  std::ofstream csv(fs::path(cfg.out) / "results.csv");
  write_config_comments(csv, cfg, grid[0], spec, sizes);
  csv << metrics_csv_header() << "\n";
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t rank = 0; rank < result.ranked.size(); ++rank) {
    const ConfigStats& cs = result.ranked[rank];
    // locate the record block for this config in grid order
    std::size_t ci = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto& g = grid[k];
      if (g.depth == cs.config.depth && g.width == cs.config.width &&
          g.lambda == cs.config.lambda && g.lambda_reg == cs.config.lambda_reg) {
        ci = k;
        break;
      }
    }
    const TrainRecord& best = result.records[ci][cs.best_restart];
    csv << metrics_csv_row(row_inputs(spec, cs.config, best, cfg.restarts),
                           cs.best_metrics)
        << "\n";
    for (const TrainRecord& rec : result.records[ci])
      records.push_back(nlohmann::json::parse(train_record_json(rec, false)));

    MLPArchitecture arch{spec.input_dim, spec.output_dim, cs.config.depth,
                         cs.config.width, cs.config.activation};
    const std::string ckpt_name = "checkpoint_cfg" + std::to_string(rank) + ".json";
    save_checkpoint((fs::path(cfg.out) / ckpt_name).string(), arch,
                    best.theta.theta);
    if (rank == 0)
      save_checkpoint((fs::path(cfg.out) / "checkpoint_best.json").string(),
                      arch, best.theta.theta);
  }
  std::ofstream(fs::path(cfg.out) / "run_records.json") << records.dump(1) << "\n";

  const ConfigStats& best = result.ranked[0];
  std::cout << "best config: depth=" << best.config.depth
            << " width=" << best.config.width
            << " lambda=" << fmt_double(best.config.lambda)
            << " lambda_reg=" << fmt_double(best.config.lambda_reg)
            << " mean E_T=" << fmt_double(best.mean_e_t) << "\n";
  std::cout << "results written to " << cfg.out << "\n";
  return 0;
}

struct ReproduceRow {
  std::string label;
  std::size_t n;
  Hyperparameters config;
};

int cmd_reproduce(const std::string& table, ExperimentConfig cfg,
                  const std::vector<int>& dims) {
  const auto reference = load_reference();
  if (!reference.count(table)) {
    std::cerr << "unknown table id '" << table
              << "'; available: p1 p2 h1 h2 hn w1 w2 st\n";
    return kExitBadConfig;
  }

  std::string problem_id;
  bool random_points = false;
  if (table == "p1") problem_id = "poisson";
  else if (table == "p2") problem_id = "poisson-noisy";
  else if (table == "h1") problem_id = "heat1d";
  else if (table == "h2") problem_id = "heat1d", random_points = true;
  else if (table == "hn") problem_id = "heatnd";
  else if (table == "w1") problem_id = "wave-gcc";
  else if (table == "w2") problem_id = "wave-nogcc";
  else if (table == "st") problem_id = "stokes";

  fs::create_directories(cfg.out);
  std::ofstream csv(fs::path(cfg.out) / (table + ".csv"));
  csv << "# table=" << table << " restarts=" << cfg.restarts
      << " seed=" << cfg.seed << " max_iters=" << cfg.max_iters << "\n";
  csv << metrics_csv_header() << "\n";

  for (const RefRow& ref : reference.at(table)) {
    if (table == "hn") {
      const int n_dim = std::stoi(ref.label);
      if (!dims.empty() &&
          std::find(dims.begin(), dims.end(), n_dim) == dims.end())
        continue;
    }
    ProblemSpec spec = table == "hn"
                           ? problem_by_id("heatnd:" + ref.label)
                           : problem_by_id(problem_id);
    if (random_points) {
      spec.interior_rule = Rule::UniformRandom;
      spec.data_rule = Rule::UniformRandom;
      spec.boundary_rule = Rule::BoundaryRandom;
    }
    Hyperparameters h;
    h.depth = ref.depth;
    h.width = ref.width;
    h.lambda = ref.lambda;
    h.lambda_reg = ref.lambda_reg;
    if (cfg.max_iters > 0) h.max_iterations = cfg.max_iters;
    SetSizes sizes;
    sizes.n_total = ref.n;

    csv << ref_comment(ref) << "\n";
    try {
      const std::vector<Hyperparameters> grid{h};
      const EnsembleResult res =
          ensemble(spec, grid, cfg.restarts, sizes, cfg.seed, true);
      const ConfigStats& cs = res.ranked[0];
      const TrainRecord& best = res.records[0][cs.best_restart];
      csv << metrics_csv_row(row_inputs(spec, h, best, cfg.restarts),
                             cs.best_metrics)
          << "\n";
      std::cout << table << " " << ref.label << ": E_T="
                << fmt_double(best.e_t) << " (best of " << cfg.restarts
                << " restarts)\n";
    } catch (const std::exception& e) {
      csv << "# row " << ref.label << " failed: " << e.what() << "\n";
      std::cerr << "row " << ref.label << " failed: " << e.what() << "\n";
    }
  }
  std::cout << "table written to "
            << (fs::path(cfg.out) / (table + ".csv")).string() << "\n";
  return 0;
}

int cmd_dump_points(const ExperimentConfig& cfg) {
  ProblemSpec spec = problem_by_id(cfg.problem);
  const SetSizes sizes = resolve_sizes(cfg, spec);
  const TrainingSets sets = make_training_sets(spec, sizes, cfg.seed);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!cfg.out.empty() && cfg.out != "-") {
    fs::create_directories(fs::path(cfg.out).parent_path().empty()
                               ? "."
                               : fs::path(cfg.out).parent_path().string());
    file.open(cfg.out);
    os = &file;
  }
  *os << "set,";
  for (int i = 0; i < spec.input_dim; ++i) *os << "x" << (i + 1) << ",";
  *os << "w\n";
  const auto dump = [&](const QuadratureSet& q, const char* label) {
    for (std::size_t p = 0; p < q.size(); ++p) {
      *os << label << ",";
      for (int i = 0; i < q.dim; ++i)
        *os << fmt_double(q.points[p * q.dim + i]) << ",";
      *os << fmt_double(q.weights[p]) << "\n";
    }
  };
  dump(sets.interior, "interior");
  dump(sets.boundary, "boundary");
  dump(sets.data, "data");
  return 0;
}

int cmd_eval(const std::string& checkpoint, const ExperimentConfig& cfg) {
  ProblemSpec spec = problem_by_id(cfg.problem);
  if (cfg.noise >= 0.0) spec.noise_level = cfg.noise;
  const Checkpoint c = load_checkpoint(checkpoint);
  if (c.arch.input_dim != spec.input_dim ||
      c.arch.output_dim != spec.output_dim) {
    std::cerr << "checkpoint architecture does not match problem '" << spec.id
              << "'\n";
    return kExitBadConfig;
  }
  const ErrorReport rep = evaluate_metrics(spec, c.arch, c.params.theta);
  CsvRowInputs in;
  in.problem = spec.id;
  in.depth = c.arch.hidden_layers;
  in.width = c.arch.hidden_width;
  in.seed = cfg.seed;
  std::cout << metrics_csv_header() << "\n"
            << metrics_csv_row(in, rep) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dapinn: physics-informed networks for data-assimilation inverse "
      "problems (set DAPINN_THREADS to bound ensemble parallelism)"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string config_file, table, checkpoint, dims_arg;

  // The config file holds flat key=value pairs mirroring the experiment
  // fields; values are loaded before argument parsing so explicit flags
  // override them.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        apply_config_file(cfg, argv[i + 1]);
      } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitBadConfig;
      }
    }
  }

  const auto add_common = [&](CLI::App* sub, bool with_hyper) {
    sub->add_option("--n", cfg.n, "total number of training points");
    sub->add_option("--restarts", cfg.restarts, "independent restarts");
    sub->add_option("--seed", cfg.seed, "base seed");
    sub->add_option("--out", cfg.out, "output directory or file");
    sub->add_option("--max-iters", cfg.max_iters, "optimizer iteration cap");
    sub->add_option("--config", config_file,
                    "flat key=value config file (flags override its values)")
        ->check(CLI::ExistingFile);
    if (with_hyper) {
      sub->add_option("--noise", cfg.noise, "relative noise level on the data");
      sub->add_option("--grid", cfg.grid_file,
                      "JSON hyperparameter grid for ensemble training");
      sub->add_option("--depth", cfg.depth, "hidden layers");
      sub->add_option("--width", cfg.width, "hidden width");
      sub->add_option("--lambda", cfg.lambda, "PDE residual weight");
      sub->add_option("--lambda-reg", cfg.lambda_reg, "regularization weight");
      sub->add_option("--optimizer", cfg.optimizer, "lbfgs | adam");
    }
  };

  CLI::App* run = app.add_subcommand("run", "train one problem and report metrics");
  run->add_option("--problem", cfg.problem, "problem id")->required();
  add_common(run, true);

  CLI::App* rep = app.add_subcommand(
      "reproduce", "run a full result-table sweep (p1 p2 h1 h2 hn w1 w2 st)");
  rep->add_option("table", table, "table id")->required();
  rep->add_option("--dims", dims_arg, "comma-separated dimension subset (hn)");
  add_common(rep, false);

  CLI::App* dump = app.add_subcommand("dump-points", "emit generated training sets as CSV");
  dump->add_option("--problem", cfg.problem, "problem id")->required();
  add_common(dump, false);

  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint against a problem");
  ev->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  ev->add_option("--problem", cfg.problem, "problem id")->required();
  ev->add_option("--seed", cfg.seed, "seed column for the report");
  ev->add_option("--noise", cfg.noise, "noise level for the report");

  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<int> dims;
    if (!dims_arg.empty()) {
      std::stringstream ss(dims_arg);
      std::string tok;
      while (std::getline(ss, tok, ',')) dims.push_back(std::stoi(tok));
    }

    if (run->parsed()) return cmd_run(cfg);
    if (rep->parsed()) return cmd_reproduce(table, cfg, dims);
    if (dump->parsed()) return cmd_dump_points(cfg);
    if (ev->parsed()) return cmd_eval(checkpoint, cfg);
  } catch (const UnknownProblem& e) {
    std::cerr << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
