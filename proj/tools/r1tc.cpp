#include "report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace r1tc;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Reinterpret a cubic tensor as symmetric; listed entries are kept as given.
PartialTensor as_symmetric(const PartialTensor& t) {
  if (t.symmetric()) return t;
  PartialTensor s(t.dims(), true);
  for (const auto& [idx, v] : t.entries()) s.set(idx, v);
  return s;
}

struct CompleteArgs {
  std::string file;
  std::string method = "auto";
  bool symmetric = false;
  double tol = 1e-6;
  double rank_tol = 1e-6;
  int max_level = 4;
  std::uint64_t seed = 0;
  std::string out = "text";
  std::string ordering = "col";
  std::string fill = "complete";
};

int run_complete(const CompleteArgs& args) {
  const auto text = read_file(args.file);
  PipelineOptions po;
  po.method = parse_method_choice(args.method);
  po.tol = args.tol;
  po.rank_tol = args.rank_tol;
  po.max_level = args.max_level;
  po.seed = args.seed;
  const bool json = args.out == "json";

  if (file_order(text) == 4) {
    Order4Options o;
    o.ordering = args.ordering == "row" ? Ordering::row_major : Ordering::col_major;
    o.policy = args.fill == "zero" ? FillPolicy::zero_fill : FillPolicy::complete;
    o.cubic = po;
    auto r = complete_order4(parse_higher_tensor(text), o);
    if (json) {
      auto j = report::order4_json(r);
      j["file"] = args.file;
      j["order"] = 4;
      std::cout << j.dump(2) << '\n';
    } else {
      std::cout << "order-4 tensor, reshaped to " << r.reshaped.dim(0) << " x " << r.reshaped.dim(1) << " x "
                << r.reshaped.dim(2) << " (" << args.ordering << " ordering)\n";
      std::cout << "cubic ";
      report::print_completion(std::cout, r.cubic.result, r.cubic.trail);
      std::cout << "order-4 status: " << to_string(r.status) << '\n';
      if (!r.message.empty()) std::cout << "message: " << r.message << '\n';
      if (r.factors) {
        std::cout << "residual: " << r.residual << '\n';
        const char* names[] = {"a", "b", "c", "d"};
        for (int m = 0; m < 4; ++m) report::print_vector(std::cout, names[m], (*r.factors)[m]);
      }
    }
    return report::exit_code(r.status);
  }

  auto t = parse_tensor(text);
  if (args.symmetric) t = as_symmetric(t);
  auto r = complete(t, po);
  if (json) {
    auto j = report::pipeline_json(r);
    j["file"] = args.file;
    j["order"] = 3;
    std::cout << j.dump(2) << '\n';
  } else {
    report::print_completion(std::cout, r.result, r.trail);
  }
  return report::exit_code(r.result.status);
}

int run_check(const std::string& file, bool symmetric, const std::string& ordering, const std::string& out) {
  const auto text = read_file(file);
  PartialTensor t;
  if (file_order(text) == 4) {
    t = reshape_to_cubic(parse_higher_tensor(text), ordering == "row" ? Ordering::row_major : Ordering::col_major);
  } else {
    t = parse_tensor(text);
    if (symmetric) t = as_symmetric(t);
  }
  auto s = report::check(t);
  if (out == "json") {
    auto j = report::check_json(s);
    j["file"] = file;
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::cout << "dims: " << s.dims[0] << " x " << s.dims[1] << " x " << s.dims[2] << (s.symmetric ? " (symmetric)" : "")
            << '\n';
  std::cout << "|Omega|: " << s.omega_size << '\n';
  std::cout << "Omega~ (" << s.omega_tilde.size() << " pairs):";
  for (const auto& p : s.omega_tilde) std::cout << " (" << p[0] + 1 << "," << p[1] + 1 << ")";
  std::cout << '\n';
  std::cout << "minor system: " << s.minor_rows << " rows x " << s.minor_cols << " columns\n";
  std::cout << "nullspace dimension: " << s.nullspace_dim << '\n';
  std::cout << "bipartite graph: " << (s.connected ? "connected" : "disconnected") << '\n';
  std::cout << "anchor: (" << s.anchor.index[0] + 1 << "," << s.anchor.index[1] + 1 << "," << s.anchor.index[2] + 1
            << ") = " << s.anchor.value << '\n';
  std::cout << "verdict: " << report::to_string(s.strong) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-1 completion of partially observed tensors"};
  app.require_subcommand(1);

  CompleteArgs ca;
  auto* complete_cmd = app.add_subcommand("complete", "Find a rank-1 completion of a tensor file");
  complete_cmd->add_option("file", ca.file, "Tensor file")->required()->check(CLI::ExistingFile);
  complete_cmd->add_option("--method", ca.method, "Method")
      ->check(CLI::IsMember({"auto", "iterative", "nuclear", "moment"}));
  complete_cmd->add_flag("--symmetric", ca.symmetric, "Treat the cubic tensor as symmetric");
  complete_cmd->add_option("--tol", ca.tol, "Residual tolerance")->check(CLI::PositiveNumber);
  complete_cmd->add_option("--rank-tol", ca.rank_tol, "Relative eigenvalue/singular value rank cut")
      ->check(CLI::PositiveNumber);
  complete_cmd->add_option("--max-level", ca.max_level, "Highest moment relaxation order")->check(CLI::Range(1, 10));
  complete_cmd->add_option("--seed", ca.seed, "Seed of the moment objective");
  complete_cmd->add_option("--out", ca.out, "Output format")->check(CLI::IsMember({"text", "json"}));
  complete_cmd->add_option("--ordering", ca.ordering, "Order-4 flattening of (k, l)")
      ->check(CLI::IsMember({"row", "col"}));
  complete_cmd->add_option("--fill", ca.fill, "Order-4 policy for free third-factor entries")
      ->check(CLI::IsMember({"zero", "complete"}));

  std::string check_file, check_ordering = "col", check_out = "text";
  bool check_symmetric = false;
  auto* check_cmd = app.add_subcommand("check", "Report the strong-completability structure of a tensor file");
  check_cmd->add_option("file", check_file, "Tensor file")->required()->check(CLI::ExistingFile);
  check_cmd->add_flag("--symmetric", check_symmetric, "Treat the cubic tensor as symmetric");
  check_cmd->add_option("--ordering", check_ordering, "Order-4 flattening of (k, l)")
      ->check(CLI::IsMember({"row", "col"}));
  check_cmd->add_option("--out", check_out, "Output format")->check(CLI::IsMember({"text", "json"}));

  ExperimentConfig cfg;
  std::string mode;
  bool strong = false;
  std::string exp_out = "json";
  auto* exp_cmd = app.add_subcommand("experiment", "Run seeded random trials");
  exp_cmd->add_option("--mode", mode, "Experiment mode")
      ->check(CLI::IsMember({"nuclear", "nuclear_symmetric", "iterative_strong", "moment"}));
  exp_cmd->add_option("--n", cfg.n, "Dimension")->required()->check(CLI::PositiveNumber);
  auto* density_opt = exp_cmd->add_option("--density", cfg.density, "Fraction of observed entries")
                          ->check(CLI::Range(0.0, 1.0));
  auto* strong_opt = exp_cmd->add_flag("--strong", strong, "Strongly completable instances");
  density_opt->excludes(strong_opt);
  exp_cmd->add_option("--trials", cfg.trials, "Number of trials")->required()->check(CLI::PositiveNumber);
  exp_cmd->add_option("--seed", cfg.seed, "Seed of the first trial")->required();
  exp_cmd->add_option("--tol", cfg.tol, "Residual tolerance")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--rank-tol", cfg.rank_tol, "Relative rank cut")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--max-level", cfg.max_level, "Highest moment relaxation order")->check(CLI::Range(1, 10));
  exp_cmd->add_option("--out", exp_out, "Output format")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : report::exit_error;
  }

  try {
    if (*complete_cmd) return run_complete(ca);
    if (*check_cmd) return run_check(check_file, check_symmetric, check_ordering, check_out);

    if (strong) {
      if (!mode.empty() && mode != "iterative_strong") throw std::invalid_argument("--strong requires --mode iterative_strong");
      mode = "iterative_strong";
    }
    if (mode.empty()) throw std::invalid_argument("--mode is required");
    cfg.mode = parse_experiment_mode(mode);
    if (cfg.mode != ExperimentMode::iterative_strong && density_opt->count() == 0)
      throw std::invalid_argument("--density is required for mode " + mode);
    auto rep = run_experiment(cfg);
    if (exp_out == "json") {
      std::cout << report::experiment_json(rep).dump(2) << '\n';
    } else {
      std::cout << "mode " << mode << ", n = " << cfg.n << ", trials = " << cfg.trials << '\n';
      std::cout << "den = " << rep.den << ", rho = " << rep.rho << '\n';
      std::cout << "success rate = " << rep.success_rate << ", mean time = " << rep.mean_seconds << " s\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return report::exit_error;
  }
}
