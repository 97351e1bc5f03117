#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "coopt/csv.hpp"
#include "coopt/errors.hpp"
#include "coopt/experiment.hpp"
#include "coopt/pipeline.hpp"

namespace {

using namespace coopt;

struct Overrides {
  std::string config;
  std::optional<int> algorithm;
  std::optional<std::string> scheme;
  std::optional<double> a;
  std::optional<double> lambda_bar;
  std::optional<int> t0;
  std::optional<int> tf;
  std::optional<double> eps2;
  std::optional<unsigned> seed;
  bool parallel = false;
  std::string out;
};

void add_common(CLI::App* sub, Overrides& o, bool learning) {
  sub->add_option("--config", o.config,
                  "JSON config (defaults to the bundled four-agent setup)");
  sub->add_option("--t0", o.t0, "First sample of the data window");
  sub->add_option("--out", o.out, "Output directory");
  sub->add_option("--seed", o.seed,
                  "Reserved; every bundled source is deterministic");
  sub->add_flag("--parallel", o.parallel, "Learn agents with OpenMP");
  if (!learning) return;
  sub->add_option("--algorithm", o.algorithm, "1 off-policy PI, 2 Q-learning")
      ->check(CLI::IsMember({1, 2}));
  sub->add_option("--scheme", o.scheme, "Step-size scheme: 1, 2, A, B or C");
  sub->add_option("--a", o.a, "Fraction of the step-size bound, in (0, 1)");
  sub->add_option("--lambda-bar", o.lambda_bar, "Terminal discount, >= 1");
  sub->add_option("--tf", o.tf, "Last sample of the data window (default auto)");
  sub->add_option("--eps2", o.eps2, "Stopping tolerance of the regulator iteration");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? bundled_config()
                                        : load_config(o.config);
  auto& lo = c.learning;
  if (o.algorithm) {
    lo.algorithm = *o.algorithm == 2 ? Algorithm::kQLearning
                                     : Algorithm::kOffPolicy;
    if (!o.scheme && !scheme_matches(lo.algorithm, lo.scheme)) {
      lo.scheme = lo.algorithm == Algorithm::kOffPolicy ? Scheme::k2
                                                        : Scheme::kA;
    }
  }
  if (o.scheme) {
    lo.scheme = parse_scheme(*o.scheme);
    if (!o.algorithm) {
      lo.algorithm = (lo.scheme == Scheme::k1 || lo.scheme == Scheme::k2)
                         ? Algorithm::kOffPolicy
                         : Algorithm::kQLearning;
    }
  }
  if (!scheme_matches(lo.algorithm, lo.scheme)) {
    throw ConfigError(std::string("scheme ") + to_string(lo.scheme) +
                      " does not belong to algorithm " +
                      std::to_string(static_cast<int>(lo.algorithm)));
  }
  if (o.a) {
    if (!(*o.a > 0.0 && *o.a < 1.0)) throw ConfigError("--a must lie in (0, 1)");
    lo.a = *o.a;
  }
  if (o.lambda_bar) {
    if (!(*o.lambda_bar >= 1.0)) throw ConfigError("--lambda-bar must be >= 1");
    lo.lambda_bar = *o.lambda_bar;
  }
  if (o.t0) {
    if (*o.t0 < 0 || *o.t0 >= lo.tf_max) throw ConfigError("--t0 out of range");
    lo.t0 = *o.t0;
    if (lo.tf >= 0 && lo.tf <= lo.t0) lo.tf = -1;
  }
  if (o.tf) {
    if (*o.tf <= lo.t0) throw ConfigError("--tf must exceed t0");
    lo.tf = *o.tf;
    lo.tf_max = std::max(lo.tf_max, lo.tf);
  }
  if (o.eps2) {
    if (!(*o.eps2 > 0.0)) throw ConfigError("--eps2 must be positive");
    lo.eps2 = *o.eps2;
  }
  if (o.parallel) c.exec = Execution::kOpenMP;
  return c;
}

void print_mat(const char* name, int agent, const Mat& M) {
  for (int i = 0; i < M.rows(); ++i) {
    std::cout << agent << ',' << name << ',' << i + 1;
    for (int j = 0; j < M.cols(); ++j) std::cout << ',' << format_double(M(i, j));
    std::cout << '\n';
  }
}

int cmd_simulate(const Overrides& o) {
  const auto c = resolve(o);
  const int last = c.learning.tf >= 0 ? c.learning.tf : c.learning.tf_max;
  const auto log = behavior_log(c, last);
  const std::string path =
      (std::filesystem::path(o.out.empty() ? "." : o.out) / "behavior.csv")
          .string();
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  write_log_csv(log, path);
  std::cout << "wrote " << log.steps() << " samples to " << path << '\n';
  return 0;
}

void print_report(const ExperimentReport& r) {
  std::printf("algorithm %d, scheme %s, window [%d, %d)\n",
              static_cast<int>(r.learned.algorithm),
              to_string(r.learned.scheme), r.learned.t0, r.learned.tf);
  for (std::size_t k = 0; k < r.learned.agents.size(); ++k) {
    const auto& a = r.learned.agents[k];
    std::printf("agent %zu: stabilizing k=%d rho=%.4f K_stab=[", k + 1,
                a.stab_final_index, r.rho_stab[k]);
    for (int j = 0; j < a.K_stab.size(); ++j) {
      std::printf("%s%.4f", j ? ", " : "", a.K_stab(j));
    }
    std::printf("]  optimal j=%d rho=%.4f |P-P*|=%.3e", static_cast<int>(a.opt.size()) - 1,
                r.rho_final[k], r.P_err[k]);
    if (a.H.size()) std::printf(" |H-H*|=%.3e", r.H_err[k]);
    std::printf("  regulator residual %.3e\n", r.regulator_residual[k]);
  }
  const int last = r.closed_loop.steps() - 1;
  std::printf("closed loop: max |e| at step %d = %.3e\n", last,
              max_abs_error(r.closed_loop, last));
}

int cmd_learn(const Overrides& o, const std::string& default_out) {
  const auto c = resolve(o);
  const auto report = run_experiment(c, o.out.empty() ? default_out : o.out);
  print_report(report);
  return 0;
}

int cmd_oracle(const Overrides& o) {
  const auto c = resolve(o);
  const auto oracle = compute_oracle(c);
  std::cout << "agent,matrix,row,values...\n";
  for (std::size_t k = 0; k < oracle.size(); ++k) {
    const int a = static_cast<int>(k) + 1;
    print_mat("P", a, oracle[k].are.P);
    print_mat("K", a, oracle[k].are.K);
    print_mat("X", a, oracle[k].X);
    print_mat("U", a, oracle[k].U);
    print_mat("T", a, oracle[k].T);
  }
  return 0;
}

int cmd_compare(const Overrides& o) {
  const auto c = resolve(o);
  const auto learned = run_learning(c);
  const auto rows = compare_with_oracle(c, learned);
  if (o.out.empty()) {
    write_error_table(rows, "/dev/stdout");
  } else {
    std::filesystem::create_directories(o.out);
    const auto path = (std::filesystem::path(o.out) / "errors.csv").string();
    write_error_table(rows, path);
    std::cout << "wrote " << rows.size() << " rows to " << path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-free cooperative optimal output tracking"};
  app.require_subcommand(1);
  Overrides sim, learn, repro, orc, cmp;
  auto* s_sim = app.add_subcommand("simulate", "Record the behavior-policy log");
  add_common(s_sim, sim, false);
  auto* s_learn = app.add_subcommand("learn", "Learn gains and write histories");
  add_common(s_learn, learn, true);
  auto* s_repro = app.add_subcommand(
      "reproduce-paper", "Run the bundled four-agent experiment");
  add_common(s_repro, repro, true);
  auto* s_orc = app.add_subcommand("oracle", "Print model-based P*, K*, X, U, T*");
  add_common(s_orc, orc, false);
  auto* s_cmp = app.add_subcommand("compare", "Learned-versus-oracle error table");
  add_common(s_cmp, cmp, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*s_sim) return cmd_simulate(sim);
    if (*s_learn) return cmd_learn(learn, "out");
    if (*s_repro) {
      if (!repro.config.empty()) {
        throw ConfigError("reproduce-paper always uses the bundled config");
      }
      return cmd_learn(repro, "out");
    }
    if (*s_orc) return cmd_oracle(orc);
    if (*s_cmp) return cmd_compare(cmp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
