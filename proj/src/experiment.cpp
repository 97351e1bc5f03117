#include "coopt/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coopt/builtin_config.hpp"
#include "coopt/csv.hpp"
#include "coopt/errors.hpp"
#include "coopt/offpolicy.hpp"
#include "coopt/pipeline.hpp"
#include "coopt/qlearn.hpp"

namespace coopt {

using nlohmann::json;

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::k1: return "1";
    case Scheme::k2: return "2";
    case Scheme::kA: return "A";
    case Scheme::kB: return "B";
    case Scheme::kC: return "C";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (u == "1") return Scheme::k1;
  if (u == "2") return Scheme::k2;
  if (u == "A") return Scheme::kA;
  if (u == "B") return Scheme::kB;
  if (u == "C") return Scheme::kC;
  throw ConfigError("unknown scheme '" + s + "' (expected 1, 2, A, B or C)");
}

bool scheme_matches(Algorithm alg, Scheme s) {
  const bool offpolicy = s == Scheme::k1 || s == Scheme::k2;
  return (alg == Algorithm::kOffPolicy) == offpolicy;
}

namespace {

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(where + ": missing field '" + key + "'");
  }
  return j.at(key);
}

Mat to_mat(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    throw ConfigError(where + ": expected a non-empty array of rows");
  }
  const auto rows = j.size();
  const auto cols = j[0].size();
  Mat M(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(where + ": ragged matrix");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(where + ": non-numeric entry");
      M(r, c) = j[r][c].get<double>();
    }
  }
  return M;
}

Vec to_vec(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(where + ": expected a non-empty array");
  }
  Vec v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(where + ": non-numeric entry");
    v(k) = j[k].get<double>();
  }
  return v;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

std::vector<double> beta_sequence(const json& j) {
  std::vector<double> seq;
  if (j.is_array()) {
    for (const auto& b : j) seq.push_back(b.get<double>());
  } else if (j.is_object()) {
    const double start = need(j, "start", "beta_sequence").get<double>();
    const double step = need(j, "step", "beta_sequence").get<double>();
    const double stop = need(j, "stop", "beta_sequence").get<double>();
    if (!(step > 0.0) || stop > start) {
      throw ConfigError("beta_sequence: need step > 0 and stop <= start");
    }
    // Index-based to avoid accumulating rounding in the sequence values.
    const int count = static_cast<int>(std::floor((start - stop) / step + 1e-9));
    for (int z = 0; z <= count; ++z) seq.push_back(start - z * step);
  } else {
    throw ConfigError("beta_sequence: expected array or {start, step, stop}");
  }
  for (std::size_t z = 0; z < seq.size(); ++z) {
    if (!(seq[z] > 0.0) || (z > 0 && !(seq[z] < seq[z - 1]))) {
      throw ConfigError("beta_sequence must be positive and strictly decreasing");
    }
  }
  if (seq.empty()) throw ConfigError("beta_sequence is empty");
  return seq;
}

int rank_c(const Eigen::MatrixXcd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > kRankTol * std::max(1.0, s(0))) ++r;
  }
  return r;
}

}  // namespace

void check_assumptions(const MasModel& mas) {
  using C = std::complex<double>;
  const double rho_E = spectral_radius(mas.leader.E);
  if (rho_E > 1.0 + 1e-9) {
    std::ostringstream os;
    os << "exosystem assumption violated: rho(E) = " << rho_E << " > 1";
    throw AssumptionViolation(os.str());
  }
  if (!mas.graph.has_spanning_tree()) {
    throw AssumptionViolation(
        "graph assumption violated: no directed spanning tree rooted at the "
        "leader");
  }
  Eigen::EigenSolver<Mat> esE(mas.leader.E, false);
  for (int k = 0; k < mas.N(); ++k) {
    const auto& f = mas.followers[k];
    const int n = f.n(), m = f.m(), ny = f.ny();
    Eigen::EigenSolver<Mat> es(f.A, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const C lam = es.eigenvalues()(i);
      if (std::abs(lam) < 1.0) continue;
      Eigen::MatrixXcd M(n, n + m);
      M << f.A.cast<C>() - lam * Eigen::MatrixXcd::Identity(n, n),
          f.B.cast<C>();
      if (rank_c(M) < n) {
        std::ostringstream os;
        os << "stabilizability violated for agent " << k + 1
           << " at eigenvalue " << lam;
        throw AssumptionViolation(os.str());
      }
    }
    for (Eigen::Index i = 0; i < esE.eigenvalues().size(); ++i) {
      const C lam = esE.eigenvalues()(i);
      Eigen::MatrixXcd M(n + ny, n + m);
      M << f.A.cast<C>() - lam * Eigen::MatrixXcd::Identity(n, n),
          f.B.cast<C>(), f.C.cast<C>(), f.S.cast<C>();
      if (rank_c(M) < n + ny) {
        std::ostringstream os;
        os << "regulator rank condition violated for agent " << k + 1
           << " at eigenvalue " << lam << " of E";
        throw AssumptionViolation(os.str());
      }
    }
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    const json& leader = need(doc, "leader", "config");
    c.mas.leader.E = to_mat(need(leader, "E", "leader"), "leader.E");
    c.mas.leader.F = to_mat(need(leader, "F", "leader"), "leader.F");
    c.mas.leader.validate();
    const int nv = c.mas.leader.nv();
    const int ny = c.mas.leader.ny();
    c.ic.v0 = to_vec(need(leader, "v0", "leader"), "leader.v0");
    if (c.ic.v0.size() != nv) throw ConfigError("leader.v0 has wrong length");

    const json& fs = need(doc, "followers", "config");
    if (!fs.is_array() || fs.empty()) {
      throw ConfigError("followers: expected a non-empty array");
    }
    const json obs = doc.value("observer_init", json::object());
    for (std::size_t k = 0; k < fs.size(); ++k) {
      const std::string w = "followers[" + std::to_string(k) + "]";
      const json& f = fs[k];
      FollowerModel fm;
      fm.A = to_mat(need(f, "A", w), w + ".A");
      fm.B = to_mat(need(f, "B", w), w + ".B");
      fm.C = to_mat(need(f, "C", w), w + ".C");
      fm.S = to_mat(need(f, "S", w), w + ".S");
      fm.validate();
      if (fm.ny() != ny) throw ConfigError(w + ": output size != rows of F");
      const Mat Q = to_mat(need(f, "Q", w), w + ".Q");
      const Mat R = to_mat(need(f, "R", w), w + ".R");
      if (Q.rows() != fm.n() || Q.cols() != fm.n() ||
          !is_positive_definite(Q) || (Q - Q.transpose()).norm() > 1e-12) {
        throw ConfigError(w + ".Q must be symmetric positive definite n x n");
      }
      if (R.rows() != fm.m() || R.cols() != fm.m() ||
          !is_positive_definite(R) || (R - R.transpose()).norm() > 1e-12) {
        throw ConfigError(w + ".R must be symmetric positive definite m x m");
      }
      const Vec x0 = to_vec(need(f, "x0", w), w + ".x0");
      if (x0.size() != fm.n()) throw ConfigError(w + ".x0 has wrong length");
      Mat K0 = Mat::Zero(fm.m(), fm.n());
      if (f.contains("K0")) {
        K0 = to_mat(f.at("K0"), w + ".K0");
        if (K0.rows() != fm.m() || K0.cols() != fm.n()) {
          throw ConfigError(w + ".K0 must be m x n");
        }
      }
      c.mas.followers.push_back(fm);
      c.Q.push_back(Q);
      c.R.push_back(R);
      c.K0.push_back(K0);
      c.ic.x0.push_back(x0);
      c.ic.zeta0.push_back(obs.contains("zeta0")
                               ? to_vec(obs.at("zeta0"), "observer_init.zeta0")
                               : Vec::Zero(nv));
      c.ic.E0.push_back(obs.contains("E0")
                            ? to_mat(obs.at("E0"), "observer_init.E0")
                            : Mat::Zero(nv, nv));
      c.ic.F0.push_back(obs.contains("F0")
                            ? to_mat(obs.at("F0"), "observer_init.F0")
                            : Mat::Zero(ny, nv));
      if (c.ic.zeta0.back().size() != nv || c.ic.E0.back().rows() != nv ||
          c.ic.E0.back().cols() != nv || c.ic.F0.back().rows() != ny ||
          c.ic.F0.back().cols() != nv) {
        throw ConfigError("observer_init: wrong shapes");
      }
    }

    std::vector<Edge> edges;
    for (const auto& e : need(need(doc, "graph", "config"), "edges", "graph")) {
      edges.push_back({need(e, "to", "edge").get<int>(),
                       need(e, "from", "edge").get<int>(),
                       e.value("weight", 1.0)});
    }
    c.mas.graph = Topology(c.mas.N(), edges);

    for (const auto& t : doc.value("noise", json::array())) {
      Sinusoid s;
      s.amplitude = need(t, "amplitude", "noise").get<double>();
      s.frequency = need(t, "frequency", "noise").get<double>();
      const std::string kind = t.value("kind", std::string("sin"));
      if (kind != "sin" && kind != "cos") {
        throw ConfigError("noise.kind must be 'sin' or 'cos'");
      }
      s.cosine = kind == "cos";
      c.noise.terms.push_back(s);
    }

    const json lj = doc.value("learning", json::object());
    auto& lo = c.learning;
    lo.algorithm = get_or(lj, "algorithm", 1) == 2 ? Algorithm::kQLearning
                                                   : Algorithm::kOffPolicy;
    if (get_or(lj, "algorithm", 1) != 1 && get_or(lj, "algorithm", 1) != 2) {
      throw ConfigError("learning.algorithm must be 1 or 2");
    }
    lo.scheme = parse_scheme(get_or<std::string>(
        lj, "scheme", lo.algorithm == Algorithm::kOffPolicy ? "2" : "A"));
    lo.t0 = get_or(lj, "t0", lo.t0);
    if (lj.contains("tf") && lj.at("tf").is_number_integer()) {
      lo.tf = lj.at("tf").get<int>();
    } else if (lj.contains("tf") && lj.at("tf") != "auto") {
      throw ConfigError("learning.tf must be an integer or \"auto\"");
    }
    lo.tf_max = get_or(lj, "tf_max", lo.tf_max);
    lo.alpha0 = get_or(lj, "alpha0", lo.alpha0);
    lo.beta_sequence = beta_sequence(lj.value(
        "beta_sequence", json{{"start", 0.5}, {"step", 0.01}, {"stop", 0.01}}));
    lo.a = get_or(lj, "a", lo.a);
    lo.lambda_bar = get_or(lj, "lambda_bar", lo.lambda_bar);
    lo.eps1 = get_or(lj, "eps1", lo.eps1);
    lo.eps2 = get_or(lj, "eps2", lo.eps2);
    lo.kappa_c = get_or(lj, "kappa_c", lo.kappa_c);
    lo.alpha_max = get_or(lj, "alpha_max", lo.alpha_max);
    lo.rank_tol = get_or(lj, "rank_tol", lo.rank_tol);
    lo.stab_max_iters = get_or(lj, "stab_max_iters", lo.stab_max_iters);
    lo.opt_max_iters = get_or(lj, "opt_max_iters", lo.opt_max_iters);
    lo.chi_max_iters = get_or(lj, "chi_max_iters", lo.chi_max_iters);

    const json sj = doc.value("simulation", json::object());
    c.closed_loop_horizon =
        get_or(sj, "closed_loop_horizon", c.closed_loop_horizon);
    c.divergence_bound = get_or(sj, "divergence_bound", c.divergence_bound);
    const std::string exec = get_or<std::string>(doc, "execution", "serial");
    if (exec != "serial" && exec != "openmp") {
      throw ConfigError("execution must be 'serial' or 'openmp'");
    }
    c.exec = exec == "openmp" ? Execution::kOpenMP : Execution::kSerial;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config schema: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }

  const auto& lo = c.learning;
  if (!scheme_matches(lo.algorithm, lo.scheme)) {
    throw ConfigError(std::string("scheme ") + to_string(lo.scheme) +
                      " does not belong to the selected algorithm");
  }
  if (!(lo.a > 0.0 && lo.a < 1.0)) throw ConfigError("a must lie in (0, 1)");
  if (!(lo.lambda_bar >= 1.0)) throw ConfigError("lambda_bar must be >= 1");
  if (!(lo.eps1 > 0.0 && lo.eps2 > 0.0 && lo.alpha0 > 0.0 &&
        lo.rank_tol > 0.0 && lo.alpha_max > 0.0)) {
    throw ConfigError("tolerances, alpha0 and alpha_max must be positive");
  }
  if (!(lo.kappa_c > 0.0 && lo.kappa_c < 2.0)) {
    throw ConfigError("kappa_c must lie in (0, 2)");
  }
  if (lo.t0 < 0 || (lo.tf >= 0 && lo.tf <= lo.t0) || lo.tf_max <= lo.t0) {
    throw ConfigError("need 0 <= t0 < tf <= tf_max");
  }
  check_assumptions(c.mas);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ExperimentConfig bundled_config() { return parse_config(kBundledJson); }

LearnedGains run_learning(const ExperimentConfig& config) {
  if (!scheme_matches(config.learning.algorithm, config.learning.scheme)) {
    throw ConfigError("scheme does not belong to the selected algorithm");
  }
  return config.learning.algorithm == Algorithm::kOffPolicy
             ? run_algorithm1(config)
             : run_algorithm2(config);
}

std::vector<OracleAgent> compute_oracle(const ExperimentConfig& config) {
  std::vector<OracleAgent> out(config.mas.N());
  parallel_for(config.mas.N(), config.exec, [&](int k) {
    const auto& f = config.mas.followers[k];
    auto& o = out[k];
    o.are = dare(f.A, f.B, config.Q[k], config.R[k]);
    o.H = h_from_p(o.are.P, f.A, f.B, config.Q[k], config.R[k], 1.0);
    std::tie(o.X, o.U) = regulator_direct_solve(f.A, f.B, f.C, f.S,
                                                config.mas.leader.E,
                                                config.mas.leader.F);
    o.T = feedforward_gain(o.U, o.are.K, o.X);
  });
  return out;
}

std::vector<ErrorRow> compare_with_oracle(const ExperimentConfig& config,
                                          const LearnedGains& learned,
                                          bool include_regulator) {
  const auto oracle = compute_oracle(config);
  std::vector<ErrorRow> rows;
  for (int k = 0; k < static_cast<int>(learned.agents.size()); ++k) {
    const auto& f = config.mas.followers[k];
    const auto& a = learned.agents[k];
    const Mat& Q = config.Q[k];
    const Mat& R = config.R[k];
    for (const auto& s : a.stab) {
      ErrorRow r{k + 1, "stabilizing", s.k};
      const Mat P = stein_solve(s.gamma * (f.A - f.B * s.K),
                                Q + s.K.transpose() * R * s.K);
      r.P_err = norm2(s.P - P);
      if (s.H.size()) {
        r.H_err = norm2(s.H - h_from_p(P, f.A, f.B, Q, R, s.gamma));
      }
      rows.push_back(r);
    }
    for (const auto& o : a.opt) {
      ErrorRow r{k + 1, "optimal", o.j};
      r.P_err = norm2(o.P - oracle[k].are.P);
      r.K_err = norm2(o.K - oracle[k].are.K);
      if (o.H.size()) r.H_err = norm2(o.H - oracle[k].H);
      rows.push_back(r);
    }
    ErrorRow fin{k + 1, "optimal", static_cast<int>(a.opt.size())};
    fin.K_err = norm2(a.K - oracle[k].are.K);
    rows.push_back(fin);
    if (include_regulator && a.problem.Omega.size()) {
      Mat Wstar(f.n() + f.m(), config.mas.leader.nv());
      Wstar << oracle[k].X, oracle[k].U;
      const Vec wstar = vec(Wstar);
      const auto again = iterate_chi(a.problem, config.learning.eps2,
                                     config.learning.chi_max_iters, Vec(),
                                     true);
      const int tail = static_cast<int>(wstar.size());
      for (std::size_t n = 0; n < again.iterates.size(); ++n) {
        ErrorRow r{k + 1, "regulator", static_cast<int>(n)};
        r.chi_err = (again.iterates[n].tail(tail) - wstar).norm();
        rows.push_back(r);
      }
    }
  }
  return rows;
}

void write_error_table(const std::vector<ErrorRow>& rows,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "agent,phase,iteration,P_err,K_err,H_err,chi_err\n";
  for (const auto& r : rows) {
    out << r.agent << ',' << r.phase << ',' << r.iteration << ','
        << format_double(r.P_err) << ',' << format_double(r.K_err) << ','
        << format_double(r.H_err) << ',' << format_double(r.chi_err) << '\n';
  }
}

namespace {

std::vector<std::string> entry_names(const char* prefix, const Mat& M) {
  std::vector<std::string> out;
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      out.push_back(std::string(prefix) + std::to_string(i + 1) +
                    std::to_string(j + 1));
    }
  }
  return out;
}

void push_entries(std::vector<double>& row, const Mat& M) {
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
  }
}

json mat_json(const Mat& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
    rows.push_back(r);
  }
  return rows;
}

void write_agent_files(const ExperimentConfig& config,
                       const ExperimentReport& rep, int k,
                       const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto& f = config.mas.followers[k];
  const auto& a = rep.learned.agents[k];
  const auto& o = rep.oracle[k];
  fs::create_directories(dir);
  {
    std::vector<std::string> h{"k",           "gamma",       "alpha",
                               "alpha_bar_1", "alpha_bar_2", "alpha_bar_A",
                               "alpha_bar_B", "alpha_bar_C", "rho_oracle"};
    const auto kn = entry_names("K", a.stab.front().K);
    h.insert(h.end(), kn.begin(), kn.end());
    CsvWriter csv((dir / "stab_history.csv").string(), h);
    for (const auto& s : a.stab) {
      std::vector<double> row{static_cast<double>(s.k), s.gamma, s.alpha,
                              s.bound_1, s.bound_2, s.bound_A, s.bound_B,
                              s.bound_C, spectral_radius(f.A - f.B * s.K)};
      push_entries(row, s.K);
      csv.row(row);
    }
    // Final gain K^{k+1} closes the table.
    std::vector<double> row{static_cast<double>(a.stab_final_index),
                            a.ledger.gamma(), kNaN, kNaN, kNaN, kNaN, kNaN,
                            kNaN, spectral_radius(f.A - f.B * a.K_stab)};
    push_entries(row, a.K_stab);
    csv.row(row);
  }
  {
    const bool q = rep.learned.algorithm == Algorithm::kQLearning;
    std::vector<std::string> h{"j", "P_err", "K_err"};
    if (q) h.push_back("H_err");
    CsvWriter csv((dir / "opt_history.csv").string(), h);
    for (const auto& r : a.opt) {
      std::vector<double> row{static_cast<double>(r.j), norm2(r.P - o.are.P),
                              norm2(r.K - o.are.K)};
      if (q) row.push_back(norm2(r.H - o.H));
      csv.row(row);
    }
    std::vector<double> row{static_cast<double>(a.opt.size()), kNaN,
                            norm2(a.K - o.are.K)};
    if (q) row.push_back(kNaN);
    csv.row(row);
  }
  {
    CsvWriter csv((dir / "chi_history.csv").string(),
                  {"n", "residual", "chi_delta"});
    for (const auto& r : a.chi.history) {
      csv.row({static_cast<double>(r.n), r.residual, r.chi_delta});
    }
  }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir) {
  ExperimentReport rep;
  rep.learned = run_learning(config);
  rep.oracle = compute_oracle(config);
  const int N = config.mas.N();
  rep.all_schur = true;
  for (int k = 0; k < N; ++k) {
    const auto& f = config.mas.followers[k];
    const auto& a = rep.learned.agents[k];
    rep.rho_stab.push_back(spectral_radius(f.A - f.B * a.K_stab));
    rep.rho_final.push_back(spectral_radius(f.A - f.B * a.K));
    rep.all_schur = rep.all_schur && rep.rho_stab.back() < 1.0 &&
                    rep.rho_final.back() < 1.0;
    rep.P_err.push_back(norm2(a.P - rep.oracle[k].are.P));
    rep.H_err.push_back(a.H.size() ? norm2(a.H - rep.oracle[k].H) : kNaN);
    rep.regulator_residual.push_back(regulator_residual(
        f.A, f.B, f.C, f.S, config.mas.leader.E, config.mas.leader.F, a.X,
        a.U));
  }
  if (!rep.all_schur) {
    throw IterationError("a learned gain is not Schur for the config model");
  }
  rep.closed_loop =
      simulate_closed_loop(config.mas, final_state(rep.learned.behavior),
                           rep.learned.controller(), config.closed_loop_horizon,
                           config.divergence_bound);

  if (out_dir.empty()) return rep;
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_log_csv(rep.learned.behavior, (dir / "behavior.csv").string());
  write_log_csv(rep.closed_loop, (dir / "closed_loop.csv").string(),
                rep.learned.tf);
  for (int k = 0; k < N; ++k) {
    write_agent_files(config, rep, k, dir / ("agent" + std::to_string(k + 1)));
  }

  json summary;
  summary["algorithm"] = static_cast<int>(rep.learned.algorithm);
  summary["scheme"] = to_string(rep.learned.scheme);
  summary["t0"] = rep.learned.t0;
  summary["tf"] = rep.learned.tf;
  summary["all_schur"] = rep.all_schur;
  json agents = json::array();
  for (int k = 0; k < N; ++k) {
    const auto& a = rep.learned.agents[k];
    json j;
    j["agent"] = k + 1;
    j["beta"] = a.ledger.beta;
    j["alpha"] = a.ledger.alpha;
    j["stab_final_index"] = a.stab_final_index;
    j["K_stab"] = mat_json(a.K_stab);
    j["rho_stab"] = rep.rho_stab[k];
    j["opt_final_j"] = static_cast<int>(a.opt.size()) - 1;
    j["K"] = mat_json(a.K);
    j["rho_final"] = rep.rho_final[k];
    j["P"] = mat_json(a.P);
    j["P_err"] = rep.P_err[k];
    if (a.H.size()) {
      j["H"] = mat_json(a.H);
      j["H_err"] = rep.H_err[k];
    }
    j["X"] = mat_json(a.X);
    j["U"] = mat_json(a.U);
    j["T"] = mat_json(a.T);
    j["chi_iterations"] = a.chi.iterations;
    j["regulator_residual"] = rep.regulator_residual[k];
    agents.push_back(j);
  }
  summary["agents"] = agents;
  summary["final_max_abs_error"] =
      max_abs_error(rep.closed_loop, rep.closed_loop.steps() - 1);
  std::ofstream((dir / "summary.json").string()) << summary.dump(2) << '\n';
  return rep;
}

int exit_code_for(const std::exception& e) {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) {
    switch (s->kind()) {
      case StageError::Kind::kConfig: return 2;
      case StageError::Kind::kRank: return 3;
      case StageError::Kind::kIteration: return 4;
    }
  }
  if (dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const AssumptionViolation*>(&e) ||
      dynamic_cast<const DimensionError*>(&e)) {
    return 2;
  }
  if (dynamic_cast<const RankConditionError*>(&e)) return 3;
  return 4;
}

}  // namespace coopt
