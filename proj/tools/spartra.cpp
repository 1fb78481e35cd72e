#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spartra/bench.hpp"
#include "spartra/io.hpp"

using namespace spartra;

namespace {

// Errors in user input map to exit code 2; everything else is reported inside the JSON result.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const json& j, const std::string& out) {
  if (out.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_json_file(out, j);
}

Problem load_problem(const std::string& path, const std::string& tag) {
  json j = read_json_file(path);
  if (!tag.empty()) j["problem"] = tag;
  return problem_from_json(j);
}

SolveOptions solver_opts(double eps, int max_iter) {
  SolveOptions o;
  o.eps = eps;
  o.max_iter = max_iter;
  return o;
}

SparseQcqp as_qcqp(const Problem& p) {
  if (const auto* q = std::get_if<SparseQcqp>(&p)) return *q;
  if (const auto* q = std::get_if<SpcaProblem>(&p)) return spca_as_qcqp(q->Sigma, q->k);
  if (const auto* q = std::get_if<SlrProblem>(&p)) return slr_as_qcqp(q->A, q->y, q->k);
  if (const auto* q = std::get_if<RipProblem>(&p))
    return spca_as_qcqp(SymMatrix::from_dense(q->A.transpose() * q->A), q->k);
  throw InputError(std::string("certify: problem '") + problem_name(p) + "' has no single-constraint QCQP form");
}

json cone_check(const std::string& cone, int k, const std::string& input, double tol) {
  const MatrixFile mf = read_matrix_file(input);
  const SymMatrix& X = mf.M;
  ConeVerdict v;
  if (cone == "S0")
    v = in_spartrahedron(X, k, tol);
  else if (cone == "S1")
    v = in_Sone(X, k, tol);
  else if (cone == "Sz")
    v = in_Sz(X, k, tol);
  else if (cone == "Sbs")
    v = in_Sbs(X, k, tol);
  else if (cone == "convQ2")
    v = in_convQ2(X, tol);
  else if (cone == "dualS0")
    v = in_dual_spartrahedron(X, k, tol);
  else if (cone == "dualConvQ")
    v = in_dual_convQ(X, k, tol);
  else
    throw InputError("unknown cone '" + cone + "'");
  json j = to_json(v);
  j["cone"] = cone;
  j["k"] = k;
  if (!mf.warning.empty()) j["warning"] = mf.warning;
  return j;
}

json relax(const Problem& p, const std::string& method, const SolveOptions& opts) {
  const BuiltRelaxation b = build_problem(p, method_from_name(method));
  const RelaxedSolution sol = solve_relaxation(b, opts);
  json j = to_json(sol);
  j["method"] = method;
  j["problem"] = problem_name(p);
  if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::MaxIter) {
    try {
      j["rounded"] = to_json(round_truncate(sol, p));
    } catch (const std::exception& e) {
      j["rounding_error"] = e.what();
    }
    if (!b.layout.bordered && !std::holds_alternative<SccaProblem>(p)) {
      int k = 0;
      std::visit([&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (!std::is_same_v<T, SccaProblem>) k = q.k;
      }, p);
      j["rank_one"] = to_json(rank_one_exactness(sol.X, k));
    }
  }
  return j;
}

json oracle(const Problem& p) {
  return std::visit(
      [](const auto& q) -> json {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, SpcaProblem>) return to_json(spca_exact(q.Sigma, q.k));
        if constexpr (std::is_same_v<T, RidgeProblem>) return to_json(ridge_exact(q.A, q.y, q.alpha, q.k));
        if constexpr (std::is_same_v<T, SlrProblem>) return to_json(ridge_exact(q.A, q.y, 0.0, q.k));
        if constexpr (std::is_same_v<T, RipProblem>) return to_json(rip_exact(q.A, q.k));
        if constexpr (std::is_same_v<T, SccaProblem>) return to_json(cca_exact(q.Sxx, q.Syy, q.Sxy, q.k1, q.k2));
        if constexpr (std::is_same_v<T, SparseQcqp>) return to_json(qcqp_exact_restricted(q));
      },
      p);
}

json heuristic(const Problem& p, const std::string& method, const HeuristicConfig& cfg) {
  HeuristicResult r;
  if (const auto* q = std::get_if<SpcaProblem>(&p)) {
    if (method == "tpca")
      r = tpca(q->Sigma, q->k);
    else if (method == "tpower")
      r = tpower(q->Sigma, q->k, cfg);
    else
      throw InputError("heuristic '" + method + "' does not apply to spca");
  } else if (const auto* q = std::get_if<RidgeProblem>(&p)) {
    if (method == "iht")
      r = iht(q->A, q->y, q->alpha, q->k, cfg);
    else if (method == "htp")
      r = htp(q->A, q->y, q->alpha, q->k, cfg);
    else if (method == "greedy")
      r = greedy_regression(q->A, q->y, q->alpha, q->k);
    else
      throw InputError("heuristic '" + method + "' does not apply to ridge");
  } else {
    throw InputError("heuristics take spca or ridge problems");
  }
  json j = to_json(r);
  j["method"] = method;
  return j;
}

json certify(const Problem& p, const std::string& xpath, double tol) {
  const SparseQcqp q = as_qcqp(p);
  json xj = read_json_file(xpath);
  if (xj.is_object()) xj = xj.contains("x") ? xj["x"] : xj.at("rounded").at("x");
  const Vec x = vec_from_json(xj);
  if (x.size() != q.n()) throw InputError("certify: candidate length differs from the problem order");
  const MultiplierResult mr = lagrange_multiplier(q, x);
  json j = to_json(stability_certificate(q, x, mr.lambda, tol));
  j["multiplier_residual"] = mr.residual;
  j["multiplier_rank_deficient"] = mr.rank_deficient;
  return j;
}

json generate(const std::string& kind, std::uint64_t seed, const std::map<std::string, double>& prm,
              const std::string& dist, const std::string& model) {
  auto get = [&](const std::string& key) {
    auto it = prm.find(key);
    if (it == prm.end()) throw InputError("gen --kind " + kind + " needs --" + key);
    return it->second;
  };
  auto geti = [&](const std::string& key) { return static_cast<int>(get(key)); };
  auto opt = [&](const std::string& key, double d) {
    auto it = prm.find(key);
    return it == prm.end() ? d : it->second;
  };
  json j;
  if (kind == "spiked_wigner" || kind == "spiked_wishart") {
    const int n = geti("n"), k = geti("k");
    const Instance in = kind == "spiked_wigner"
                            ? spiked_wigner(n, static_cast<int>(opt("spike_k", k)), get("beta"), seed)
                            : spiked_wishart(n, geti("N"), get("beta"), static_cast<int>(opt("spike_k", k)), seed);
    j = to_json(in);
    j["problem"] = "spca";
    j["k"] = k;
  } else if (kind == "regression") {
    const int k = geti("k");
    j = to_json(regression_instance(geti("m"), geti("n"), k, opt("sigma", 0.0), seed));
    j["problem"] = "ridge";
    j["alpha"] = opt("alpha", 0.0);
    j["k"] = k;
  } else if (kind == "rip") {
    j = {{"kind", "rip"}, {"seed", seed}, {"dist", dist}};
    j["A"] = to_json(rip_matrix(geti("m"), geti("n"), rip_dist_from_name(dist), seed));
    j["problem"] = "rip";
    j["k"] = geti("k");
  } else if (kind == "cca") {
    j = to_json(cca_instance(cca_model_from_name(model), geti("n1"), geti("n2"), geti("k1"), geti("k2"), opt("r1", 0.7),
                             opt("r2", 0.7), static_cast<int>(opt("samples", 3000)), seed));
    j["problem"] = "scca";
    j["k1"] = geti("k1");
    j["k2"] = geti("k2");
  } else if (kind == "paley") {
    const SymMatrix C = paley_conference(geti("q"));
    j = {{"kind", "paley"}, {"q", geti("q")}, {"matrix", lower_json(C)}};
  } else {
    throw InputError("unknown instance kind '" + kind + "'");
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spartra: sparsity-constrained QCQP relaxations, oracles and benchmarks"};
  app.require_subcommand(1);

  std::string cone, input, out, method, problem, xpath, kind, spec, dist = "gaussian", model = "spiked";
  int k = 2, max_iter = SolveOptions{}.max_iter;
  double tol = 1e-8, cert_tol = 1e-6, eps = SolveOptions{}.eps;
  std::uint64_t seed = 0;
  HeuristicConfig hcfg;
  std::map<std::string, double> gen_params;

  auto* c_cone = app.add_subcommand("cone-check", "test cone membership of a symmetric matrix");
  c_cone->add_option("--cone", cone)->required()->check(
      CLI::IsMember({"S0", "S1", "Sz", "Sbs", "convQ2", "dualS0", "dualConvQ"}));
  c_cone->add_option("--k", k)->required();
  c_cone->add_option("--input", input)->required();
  c_cone->add_option("--tol", tol);

  auto* c_solve = app.add_subcommand("solve", "solve a serialized conic program");
  c_solve->add_option("--program", input)->required();
  c_solve->add_option("--out", out);

  auto* c_relax = app.add_subcommand("relax", "solve a convex relaxation and round it");
  c_relax->add_option("--method", method)->required()->check(CLI::IsMember({"Q", "Qplus", "S1", "Sbs"}));
  c_relax->add_option("--problem", problem)->check(CLI::IsMember({"qcqp", "spca", "ridge", "slr", "scca", "rip"}));
  c_relax->add_option("--input", input)->required();
  c_relax->add_option("--out", out);

  auto* c_oracle = app.add_subcommand("oracle", "exact value by support enumeration");
  c_oracle->add_option("--problem", problem)->check(CLI::IsMember({"qcqp", "spca", "ridge", "slr", "scca", "rip"}));
  c_oracle->add_option("--input", input)->required();
  c_oracle->add_option("--out", out);

  auto* c_heur = app.add_subcommand("heuristic", "run a primal heuristic");
  c_heur->add_option("--method", method)->required()->check(CLI::IsMember({"tpower", "tpca", "iht", "htp", "greedy"}));
  c_heur->add_option("--problem", problem)->check(CLI::IsMember({"spca", "ridge"}));
  c_heur->add_option("--input", input)->required();
  c_heur->add_option("--restarts", hcfg.restarts);
  c_heur->add_option("--max-iter", hcfg.max_iter);
  c_heur->add_option("--seed", hcfg.seed);
  c_heur->add_option("--out", out);

  auto* c_cert = app.add_subcommand("certify", "build a stability certificate for a candidate point");
  c_cert->add_option("--input", input)->required();
  c_cert->add_option("--problem", problem)->check(CLI::IsMember({"qcqp", "spca", "slr", "rip"}));
  c_cert->add_option("--x", xpath)->required();
  c_cert->add_option("--tol", cert_tol);
  c_cert->add_option("--out", out);

  auto* c_gen = app.add_subcommand("gen", "generate a seeded instance");
  c_gen->add_option("--kind", kind)->required()->check(
      CLI::IsMember({"spiked_wigner", "spiked_wishart", "regression", "rip", "cca", "paley"}));
  c_gen->add_option("--seed", seed);
  c_gen->add_option("--out", out);
  c_gen->add_option("--dist", dist);
  c_gen->add_option("--model", model);
  for (const char* p : {"n", "k", "beta", "N", "spike_k", "m", "sigma", "alpha", "n1", "n2", "k1", "k2", "r1", "r2",
                        "samples", "q"}) {
    c_gen->add_option_function<double>(std::string("--") + p, [&gen_params, key = std::string(p)](double v) {
      gen_params[key] = v;
    });
  }

  auto* c_bench = app.add_subcommand("bench", "run a seeded benchmark grid");
  c_bench->add_option("--spec", spec)->required();
  c_bench->add_option("--out", out)->required();

  for (auto* c : {c_solve, c_relax, c_heur}) {
    c->add_option("--eps", eps);
    c->add_option("--solver-max-iter", max_iter);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const SolveOptions opts = solver_opts(eps, max_iter);
    if (*c_cone) {
      emit(cone_check(cone, k, input, tol), "");
    } else if (*c_solve) {
      const ConicProgram prog = program_from_json(read_json_file(input));
      emit(to_json(solve(prog, opts)), out);
    } else if (*c_relax) {
      emit(relax(load_problem(input, problem), method, opts), out);
    } else if (*c_oracle) {
      emit(oracle(load_problem(input, problem)), out);
    } else if (*c_heur) {
      emit(heuristic(load_problem(input, problem), method, hcfg), out);
    } else if (*c_cert) {
      emit(certify(load_problem(input, problem), xpath, cert_tol), out);
    } else if (*c_gen) {
      emit(generate(kind, seed, gen_params, dist, model), out);
    } else if (*c_bench) {
      const BenchSpec s = bench_spec_from_json(read_json_file(spec));
      write_bench_outputs(run_bench(s), out);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
