// hjreach: train, solve, verify and slice neural backward-reachable-tube
// value functions for the registered vehicle systems.

#include <CLI11.hpp>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>

#include "hjreach/checkpoint.hpp"
#include "hjreach/config.hpp"
#include "hjreach/grid_oracle.hpp"
#include "hjreach/slicer.hpp"
#include "hjreach/trainer.hpp"
#include "hjreach/value_model.hpp"
#include "hjreach/verifier.hpp"

namespace fs = std::filesystem;
using namespace hjreach;

namespace {

fs::path output_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("HJREACH_OUT_ROOT")) return env;
  return "runs";
}

std::map<std::string, std::string> checkpoint_metadata(const TrainConfig& cfg,
                                                       long iteration) {
  std::map<std::string, std::string> meta;
  for (const auto& [k, v] : render_train_config(cfg)) meta[k] = v;
  meta["iteration"] = std::to_string(iteration);
  return meta;
}

struct LoadedModel {
  std::unique_ptr<ValueModel> model;
  SystemSpec spec;
};

// Sniffs the file magic: checkpoints become net models (system rebuilt from
// the stored metadata), grid files become grid models.
LoadedModel load_model(const fs::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open model '" + path.string() + "'");
  char magic[8] = {};
  probe.read(magic, 8);
  probe.close();

  LoadedModel out;
  if (std::memcmp(magic, "HJRCK", 5) == 0) {
    const Checkpoint ckpt = load_checkpoint_file(path);
    KeyValues kv(ckpt.metadata.begin(), ckpt.metadata.end());
    kv.erase("iteration");
    const TrainConfig cfg = make_train_config(kv);
    out.spec = cfg.make_spec();
    const std::string label = render_structure(ckpt.net.schedule);
    out.model = std::make_unique<NetModel>(ckpt.net, label);
  } else if (std::memcmp(magic, "HJRGD", 5) == 0) {
    ValueGrid grid = load_grid_file(path);
    out.spec = grid.system;
    out.model = std::make_unique<GridModel>(std::move(grid));
  } else {
    throw std::runtime_error("'" + path.string() +
                             "' is neither a checkpoint nor a grid file");
  }
  return out;
}

int dim_index(const SystemSpec& spec, const std::string& name) {
  for (int d = 0; d < spec.state_dim; ++d)
    if (spec.dim_names[d] == name) return d;
  // aliases: x3 for air3d's angle, th1/th2/th3 for the joint systems' angles
  if (spec.kind == SystemKind::kAir3d && name == "x3") return 2;
  if (spec.kind != SystemKind::kAir3d) {
    if (name == "th1") return 2;
    if (name == "th2") return 5;
    if (name == "th3" && spec.state_dim > 8) return 8;
  }
  std::string known;
  for (const auto& n : spec.dim_names) known += n + " ";
  throw std::runtime_error("unknown dimension '" + name + "' (known: " + known +
                           ")");
}

void append_csv_row(const fs::path& path, const std::string& header,
                    const std::string& row) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "'");
  if (fresh) os << header << "\n";
  os << row << "\n";
}

// ---- train ----

struct RunArtifacts {
  fs::path run_dir;
  fs::path final_checkpoint;
};

RunArtifacts run_training(const TrainConfig& cfg, const fs::path& root,
                          bool quiet) {
  RunArtifacts art;
  art.run_dir = root / (cfg.system + "_" + cfg.schedule + "_" +
                        std::to_string(cfg.seed));
  fs::create_directories(art.run_dir);
  save_config_file(art.run_dir / "config.cfg", render_train_config(cfg));

  std::ofstream loss_csv(art.run_dir / "loss.csv", std::ios::trunc);
  if (!loss_csv) throw std::runtime_error("cannot write loss.csv");
  loss_csv << "iter,gamma,total,residual,terminal\n";

  TrainHooks hooks;
  hooks.on_log = [&](const LossBreakdown& lb) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%ld,%.6f,%.10g,%.10g,%.10g",
                  lb.iteration, lb.gamma, lb.total, lb.residual_term,
                  lb.terminal_term);
    loss_csv << buf << "\n";
    loss_csv.flush();
    if (!quiet)
      std::cerr << "[train " << cfg.schedule << "/" << cfg.seed << "] iter "
                << lb.iteration << " gamma " << lb.gamma << " total "
                << lb.total << "\n";
  };
  hooks.on_checkpoint = [&](const ValueNet& net, const AdamState& adam,
                            long iter, const std::string& reason) {
    Checkpoint ckpt;
    ckpt.net = net;
    ckpt.adam = adam;
    ckpt.metadata = checkpoint_metadata(cfg, iter);
    fs::path path;
    if (reason == "final") {
      path = art.run_dir / "checkpoint.ckpt";
    } else {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_%06ld%s.ckpt", iter,
                    reason == "abort" ? "_abort" : "");
      path = art.run_dir / name;
    }
    save_checkpoint_file(path, ckpt);
  };

  train(cfg, hooks);
  art.final_checkpoint = art.run_dir / "checkpoint.ckpt";
  return art;
}

TrainConfig config_from_cli(const std::string& config_path,
                            const std::vector<std::string>& sets,
                            const std::vector<std::string>& extra_keys = {},
                            KeyValues* raw_out = nullptr) {
  KeyValues kv;
  if (!config_path.empty()) kv = load_config_file(config_path);
  for (const std::string& s : sets) apply_override(kv, s);
  if (raw_out) *raw_out = kv;
  return make_train_config(kv, extra_keys);
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& sets, const std::string& out) {
  const TrainConfig cfg = config_from_cli(config_path, sets);
  const RunArtifacts art = run_training(cfg, output_root(out), false);
  std::cout << "run directory: " << art.run_dir.string() << "\n"
            << "checkpoint:    " << art.final_checkpoint.string() << "\n";
  return 0;
}

// ---- oracle ----

int cmd_oracle(const std::string& system, const std::vector<int>& nodes,
               int slices, double dtau, double pos_min, double pos_max,
               double horizon, const std::vector<std::string>& sets,
               const std::string& out) {
  KeyValues kv{{"system", system}};
  for (const std::string& s : sets) apply_override(kv, s);
  kv["horizon"] = std::to_string(horizon);
  TrainConfig sys_cfg = make_train_config(kv);
  sys_cfg.horizon = horizon;
  const SystemSpec spec = sys_cfg.make_spec();

  GridSpec gs;
  if (nodes.size() != 3) throw std::runtime_error("--nodes needs 3 values");
  gs.nodes = {nodes[0], nodes[1], nodes[2]};
  gs.stored_slices = slices;
  gs.dtau = dtau;
  if (pos_min != 0.0 || pos_max != 0.0) {
    gs.lo = VectorXd(3);
    gs.hi = VectorXd(3);
    gs.lo << pos_min, pos_min, spec.lo(2);
    gs.hi << pos_max, pos_max, spec.hi(2);
  }
  const ValueGrid grid = solve_air3d(spec, gs);
  save_grid_file(out, grid);
  std::cout << "grid: " << out << " (" << gs.nodes[0] << "x" << gs.nodes[1]
            << "x" << gs.nodes[2] << ", " << grid.taus.size() << " slices)\n";
  return 0;
}

// ---- verify ----

int cmd_verify(const std::string& model_path, long n, std::uint64_t seed,
               double dt, const std::string& csv) {
  const LoadedModel lm = load_model(model_path);
  const VerificationReport rep = violation_rate(*lm.model, lm.spec, n, seed, dt);
  std::cout << report_summary(rep);
  if (!csv.empty()) append_csv_row(csv, report_csv_header(), report_csv_row(rep));
  return 0;
}

// ---- slice ----

int cmd_slice(const std::vector<std::string>& model_paths, double tau,
              const std::string& free_dims,
              const std::vector<std::string>& fixes,
              const std::vector<int>& res,
              const std::vector<std::string>& outs) {
  if (model_paths.empty()) throw std::runtime_error("need at least one --model");
  if (outs.size() != model_paths.size())
    throw std::runtime_error("need one --out per --model");

  for (std::size_t m = 0; m < model_paths.size(); ++m) {
    const LoadedModel lm = load_model(model_paths[m]);
    const SystemSpec& spec = lm.spec;

    SliceSpec slice;
    slice.tau = tau;
    const auto comma = free_dims.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("--free needs two comma-separated dimensions");
    slice.free0 = dim_index(spec, free_dims.substr(0, comma));
    slice.free1 = dim_index(spec, free_dims.substr(comma + 1));
    if (res.size() != 2) throw std::runtime_error("--res needs two values");
    slice.res0 = res[0];
    slice.res1 = res[1];
    slice.fixed = 0.5 * (spec.lo + spec.hi);  // default: box midpoint
    for (const std::string& fix : fixes) {
      const auto eq = fix.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("--fix expects name=value");
      slice.fixed(dim_index(spec, fix.substr(0, eq))) =
          std::stod(fix.substr(eq + 1));
    }
    const MatrixXd vals = slice_values(*lm.model, spec, slice);
    save_slice_csv_file(outs[m], spec, slice, vals, lm.model->label());
    std::cout << "slice: " << outs[m] << "\n";
  }
  return 0;
}

// ---- compare ----

int cmd_compare(const std::string& a_path, const std::string& b_path,
                const std::string& csv) {
  const LoadedSlice a = load_slice_csv_file(a_path);
  const LoadedSlice b = load_slice_csv_file(b_path);
  if (slice_geometry_header(a) != slice_geometry_header(b))
    throw std::runtime_error("slice specs differ; refusing to compare");
  const SliceComparison cmp = compare_slices(a.values, b.values);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "mse             %.10g\n"
                "sub_zero_iou    %.6f\n"
                "a_only_fraction %.6f\n"
                "b_only_fraction %.6f\n",
                cmp.mse, cmp.sub_zero_iou, cmp.a_only_fraction,
                cmp.b_only_fraction);
  std::cout << buf;
  if (!csv.empty()) {
    char row[512];
    std::snprintf(row, sizeof row, "%s,%s,%.10g,%.6f,%.6f,%.6f",
                  a_path.c_str(), b_path.c_str(), cmp.mse, cmp.sub_zero_iou,
                  cmp.a_only_fraction, cmp.b_only_fraction);
    append_csv_row(csv, "a,b,mse,sub_zero_iou,a_only_fraction,b_only_fraction",
                   row);
  }
  return 0;
}

// ---- sweep ----

int cmd_sweep(const std::string& recipe_path,
              const std::vector<std::string>& sets, const std::string& out,
              int parallel) {
  static const std::vector<std::string> kRecipeKeys = {
      "schedules", "seeds", "verify_n", "verify_seed", "verify_dt"};
  KeyValues kv;
  const TrainConfig base =
      config_from_cli(recipe_path, sets, kRecipeKeys, &kv);

  std::vector<std::string> schedules;
  {
    std::stringstream ss(kv.count("schedules") ? kv.at("schedules")
                                               : base.schedule);
    std::string item;
    while (std::getline(ss, item, ',')) schedules.push_back(detail::trim(item));
  }
  std::vector<std::uint64_t> seeds;
  {
    std::stringstream ss(kv.count("seeds") ? kv.at("seeds")
                                           : std::to_string(base.seed));
    std::string item;
    while (std::getline(ss, item, ','))
      seeds.push_back(std::stoull(detail::trim(item)));
  }
  const long verify_n =
      kv.count("verify_n") ? std::stol(kv.at("verify_n")) : 10000;
  const std::uint64_t verify_seed =
      kv.count("verify_seed") ? std::stoull(kv.at("verify_seed")) : 1;
  const double verify_dt =
      kv.count("verify_dt") ? std::stod(kv.at("verify_dt")) : 0.01;

  struct Job {
    TrainConfig cfg;
    std::string row;  // empty until done
    bool failed = false;
  };
  std::vector<Job> jobs;
  for (const std::string& sched : schedules)
    for (std::uint64_t seed : seeds) {
      // malformed schedules abort only the affected run
      Job job;
      job.cfg = base;
      job.cfg.schedule = sched;
      job.cfg.seed = seed;
      jobs.push_back(std::move(job));
    }

  const fs::path root = output_root(out);
  fs::create_directories(root);

  const int workers = std::max(1, parallel);
  if (workers > 1) Eigen::setNbThreads(1);
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      Job& job = jobs[i];
      try {
        parse_structure(job.cfg.schedule);
        const RunArtifacts art = run_training(job.cfg, root, true);
        const LoadedModel lm = load_model(art.final_checkpoint);
        VerificationReport rep =
            violation_rate(*lm.model, lm.spec, verify_n, verify_seed, verify_dt);
        rep.seed = job.cfg.seed;  // rows are keyed by the training seed
        job.row = report_csv_row(rep);
        std::lock_guard<std::mutex> lock(io_mutex);
        std::cerr << "[sweep] done " << job.cfg.schedule << " seed "
                  << job.cfg.seed << ": violation " << rep.violation_rate
                  << "\n";
      } catch (const std::exception& e) {
        job.failed = true;
        std::lock_guard<std::mutex> lock(io_mutex);
        std::cerr << "[sweep] run " << job.cfg.schedule << "/" << job.cfg.seed
                  << " failed: " << e.what() << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  const fs::path results = root / "results.csv";
  std::ofstream os(results, std::ios::trunc);
  os << report_csv_header() << "\n";
  long ok = 0;
  for (const Job& job : jobs)
    if (!job.row.empty()) {
      os << job.row << "\n";
      ++ok;
    }
  std::cout << "results: " << results.string() << " (" << ok << "/"
            << jobs.size() << " runs)\n";
  return ok == static_cast<long>(jobs.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Neural Hamilton-Jacobi reachability: activation-schedule value "
      "networks, a grid oracle, rollout verification and slicing"};
  app.require_subcommand(1);

  // train
  std::string train_config, train_out;
  std::vector<std::string> train_sets;
  auto* train_cmd = app.add_subcommand("train", "train a value network");
  train_cmd->add_option("--config", train_config, "flat key=value config file");
  train_cmd->add_option("--set", train_sets, "override key=value")->take_all();
  train_cmd->add_option("--out", train_out, "output root (default $HJREACH_OUT_ROOT or ./runs)");

  // oracle
  std::string oracle_system = "air3d", oracle_out = "air3d.grid";
  std::vector<int> oracle_nodes = {61, 61, 61};
  int oracle_slices = 21;
  double oracle_dtau = 0.0, oracle_pos_min = 0.0, oracle_pos_max = 0.0;
  double oracle_horizon = 1.0;
  std::vector<std::string> oracle_sets;
  auto* oracle_cmd =
      app.add_subcommand("oracle", "solve the air3d grid ground truth");
  oracle_cmd->add_option("--system", oracle_system, "air3d only");
  oracle_cmd->add_option("--nodes", oracle_nodes, "nodes per dimension")
      ->expected(3);
  oracle_cmd->add_option("--slices", oracle_slices, "stored tau slices");
  oracle_cmd->add_option("--dtau", oracle_dtau, "time step (0: CFL bound)");
  oracle_cmd->add_option("--pos-min", oracle_pos_min, "position box override");
  oracle_cmd->add_option("--pos-max", oracle_pos_max, "position box override");
  oracle_cmd->add_option("--horizon", oracle_horizon, "T_f");
  oracle_cmd->add_option("--set", oracle_sets, "system override key=value")
      ->take_all();
  oracle_cmd->add_option("--out", oracle_out, "output grid file");

  // verify
  std::string verify_model, verify_csv;
  long verify_n = 10000;
  std::uint64_t verify_seed = 1;
  double verify_dt = 0.01;
  auto* verify_cmd =
      app.add_subcommand("verify", "scenario rollouts and violation rate");
  verify_cmd->add_option("--model", verify_model, "checkpoint or grid file")
      ->required();
  verify_cmd->add_option("--n", verify_n, "sample count");
  verify_cmd->add_option("--seed", verify_seed, "sampling seed");
  verify_cmd->add_option("--dt", verify_dt, "rollout step");
  verify_cmd->add_option("--csv", verify_csv, "append the report row here");

  // slice
  std::vector<std::string> slice_models, slice_fixes, slice_outs;
  std::string slice_free = "x1,x2";
  double slice_tau = 0.0;
  std::vector<int> slice_res = {201, 201};
  auto* slice_cmd = app.add_subcommand("slice", "2-D value slice to CSV");
  slice_cmd->add_option("--model", slice_models, "model file(s)")->required();
  slice_cmd->add_option("--tau", slice_tau, "time-to-go")->required();
  slice_cmd->add_option("--free", slice_free, "two free dims, e.g. x1,x2");
  slice_cmd->add_option("--fix", slice_fixes, "fixed dim name=value")
      ->take_all();
  slice_cmd->add_option("--res", slice_res, "resolution")->expected(2);
  slice_cmd->add_option("--out", slice_outs, "output CSV per model")
      ->required();

  // compare
  std::string cmp_a, cmp_b, cmp_csv;
  auto* cmp_cmd = app.add_subcommand("compare", "compare two slice CSVs");
  cmp_cmd->add_option("--a", cmp_a)->required();
  cmp_cmd->add_option("--b", cmp_b)->required();
  cmp_cmd->add_option("--csv", cmp_csv, "append metrics row here");

  // sweep
  std::string sweep_recipe, sweep_out;
  std::vector<std::string> sweep_sets;
  int sweep_parallel = 1;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "schedule x seed training sweep");
  sweep_cmd->add_option("--recipe", sweep_recipe, "recipe config file")
      ->required();
  sweep_cmd->add_option("--set", sweep_sets, "override key=value")->take_all();
  sweep_cmd->add_option("--out", sweep_out, "output root");
  sweep_cmd->add_option("--parallel", sweep_parallel, "concurrent runs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_config, train_sets, train_out);
    if (oracle_cmd->parsed())
      return cmd_oracle(oracle_system, oracle_nodes, oracle_slices, oracle_dtau,
                        oracle_pos_min, oracle_pos_max, oracle_horizon,
                        oracle_sets, oracle_out);
    if (verify_cmd->parsed())
      return cmd_verify(verify_model, verify_n, verify_seed, verify_dt,
                        verify_csv);
    if (slice_cmd->parsed())
      return cmd_slice(slice_models, slice_tau, slice_free, slice_fixes,
                       slice_res, slice_outs);
    if (cmp_cmd->parsed()) return cmd_compare(cmp_a, cmp_b, cmp_csv);
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_recipe, sweep_sets, sweep_out, sweep_parallel);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
