#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "heuristics.hpp"
#include "instances.hpp"
#include "io.hpp"
#include "oracles.hpp"
#include "relaxations.hpp"

namespace spartra {

struct BenchSpec {
  std::string family;  // spca, ridge, rip, scca
  std::vector<std::string> methods;
  std::string generator;  // spiked_wigner, spiked_wishart, regression, rip_matrix, cca
  std::map<std::string, json> params;  // fixed generator and problem parameters
  std::vector<std::pair<std::string, std::vector<double>>> grid;
  std::uint64_t seed_begin = 0;
  int seed_count = 1;
  SolveOptions solver;
  HeuristicConfig heuristic;
  int threads = 1;
};

inline const std::set<std::string>& sdp_methods() {
  static const std::set<std::string> s{"Q", "Qplus", "S1", "Sbs"};
  return s;
}

inline bool method_valid_for(const std::string& family, const std::string& m) {
  if (sdp_methods().count(m)) return true;
  if (family == "spca" || family == "rip") return m == "tpower" || m == "tpca";
  if (family == "ridge") return m == "iht" || m == "htp" || m == "greedy";
  return false;
}

inline BenchSpec bench_spec_from_json(const json& j) {
  BenchSpec s;
  try {
    s.family = j.at("family").get<std::string>();
    s.methods = j.at("methods").get<std::vector<std::string>>();
    const json& g = j.at("generator");
    s.generator = g.at("kind").get<std::string>();
    for (auto it = g.begin(); it != g.end(); ++it)
      if (it.key() != "kind") s.params[it.key()] = it.value();
    if (j.contains("grid"))
      for (auto it = j["grid"].begin(); it != j["grid"].end(); ++it)
        s.grid.emplace_back(it.key(), it.value().get<std::vector<double>>());
    const json& sd = j.at("seeds");
    s.seed_begin = sd.value("begin", std::uint64_t{0});
    s.seed_count = sd.at("count").get<int>();
    if (j.contains("solver")) {
      s.solver.eps = j["solver"].value("eps", s.solver.eps);
      s.solver.max_iter = j["solver"].value("max_iter", s.solver.max_iter);
    }
    if (j.contains("heuristic")) {
      s.heuristic.restarts = j["heuristic"].value("restarts", s.heuristic.restarts);
      s.heuristic.max_iter = j["heuristic"].value("max_iter", s.heuristic.max_iter);
      s.heuristic.seed = j["heuristic"].value("seed", s.heuristic.seed);
    }
    s.threads = j.value("threads", 1);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bench spec: ") + e.what());
  }
  static const std::set<std::string> fam{"spca", "ridge", "rip", "scca"};
  if (!fam.count(s.family)) throw ValidationError("bench spec: unknown family '" + s.family + "'");
  if (s.methods.empty()) throw ValidationError("bench spec: empty method list");
  for (const auto& m : s.methods)
    if (!method_valid_for(s.family, m))
      throw ValidationError("bench spec: method '" + m + "' is not valid for family '" + s.family + "'");
  if (s.seed_count < 1) throw ValidationError("bench spec: seed range is empty");
  if (s.threads < 1) throw ValidationError("bench spec: threads must be >= 1");
  return s;
}

struct BenchRecord {
  std::string instance_id;
  std::vector<std::pair<std::string, double>> grid_point;
  std::uint64_t seed = 0;
  std::string method;
  std::string sense;
  std::optional<double> relax_bound;
  std::optional<double> feasible_value;
  std::optional<double> reference;
  std::string reference_kind;
  std::optional<double> ratio;
  std::string status;
  int iterations = 0;
  double wall_seconds = 0.0;
};

namespace detail {

inline double param(const BenchSpec& s, const std::map<std::string, double>& point, const std::string& key,
                    std::optional<double> dflt = std::nullopt) {
  if (auto it = point.find(key); it != point.end()) return it->second;
  if (auto it = s.params.find(key); it != s.params.end()) return it->second.get<double>();
  if (dflt) return *dflt;
  throw ValidationError("bench spec: missing parameter '" + key + "'");
}

inline int iparam(const BenchSpec& s, const std::map<std::string, double>& point, const std::string& key,
                  std::optional<double> dflt = std::nullopt) {
  return static_cast<int>(std::lround(param(s, point, key, dflt)));
}

inline std::string sparam(const BenchSpec& s, const std::string& key, const std::string& dflt) {
  if (auto it = s.params.find(key); it != s.params.end()) return it->second.get<std::string>();
  return dflt;
}

inline Problem bench_problem(const BenchSpec& s, const std::map<std::string, double>& pt, std::uint64_t seed) {
  const std::string& g = s.generator;
  if (s.family == "spca") {
    const int n = iparam(s, pt, "n"), k = iparam(s, pt, "k");
    if (g == "spiked_wigner") {
      const int sk = iparam(s, pt, "spike_k", static_cast<double>(k));
      return SpcaProblem{spiked_wigner(n, sk, param(s, pt, "beta"), seed).Sigma, k};
    }
    if (g == "spiked_wishart") {
      const int sk = iparam(s, pt, "spike_k", static_cast<double>(k));
      return SpcaProblem{spiked_wishart(n, iparam(s, pt, "N"), param(s, pt, "beta"), sk, seed).Sigma, k};
    }
  }
  if (s.family == "ridge" && g == "regression") {
    const Instance in = regression_instance(iparam(s, pt, "m"), iparam(s, pt, "n"), iparam(s, pt, "spike_k", param(s, pt, "k")),
                                            param(s, pt, "sigma", 0.0), seed);
    return RidgeProblem{in.A, in.y, param(s, pt, "alpha"), iparam(s, pt, "k")};
  }
  if (s.family == "rip" && g == "rip_matrix")
    return RipProblem{rip_matrix(iparam(s, pt, "m"), iparam(s, pt, "n"), rip_dist_from_name(sparam(s, "dist", "gaussian")), seed),
                      iparam(s, pt, "k")};
  if (s.family == "scca" && g == "cca") {
    const Instance in = cca_instance(cca_model_from_name(sparam(s, "model", "spiked")), iparam(s, pt, "n1"), iparam(s, pt, "n2"),
                                     iparam(s, pt, "k1"), iparam(s, pt, "k2"), param(s, pt, "r1", 0.7), param(s, pt, "r2", 0.7),
                                     iparam(s, pt, "m_samples", 3000.0), seed);
    return SccaProblem{in.Sxx, in.Syy, in.Sxy, iparam(s, pt, "k1"), iparam(s, pt, "k2")};
  }
  throw ValidationError("bench spec: generator '" + g + "' does not fit family '" + s.family + "'");
}

struct Reference {
  std::optional<double> value;
  std::string kind = "none";
};

inline Reference oracle_reference(const Problem& p, long long guard) {
  Reference r;
  std::visit(
      [&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, SpcaProblem>) {
          if (binomial(q.Sigma.size(), q.k) <= guard) r.value = spca_exact(q.Sigma, q.k, guard).value;
        } else if constexpr (std::is_same_v<T, RipProblem>) {
          if (binomial(static_cast<int>(q.A.cols()), q.k) <= guard) r.value = rip_exact(q.A, q.k, guard).upper;
        } else if constexpr (std::is_same_v<T, RidgeProblem>) {
          if (binomial(static_cast<int>(q.A.cols()), q.k) <= guard) r.value = ridge_exact(q.A, q.y, q.alpha, q.k, guard).value;
        } else if constexpr (std::is_same_v<T, SccaProblem>) {
          const long long c1 = binomial(q.Sxx.size(), q.k1), c2 = binomial(q.Syy.size(), q.k2);
          if (c1 <= guard && c2 <= guard / std::max(1LL, c1)) r.value = cca_exact(q.Sxx, q.Syy, q.Sxy, q.k1, q.k2, guard).value;
        }
      },
      p);
  if (r.value) r.kind = "oracle";
  return r;
}

inline HeuristicResult run_heuristic(const Problem& p, const std::string& m, const HeuristicConfig& cfg) {
  if (const auto* q = std::get_if<SpcaProblem>(&p)) return m == "tpca" ? tpca(q->Sigma, q->k) : tpower(q->Sigma, q->k, cfg);
  if (const auto* q = std::get_if<RipProblem>(&p)) {
    const SymMatrix G = SymMatrix::from_dense(q->A.transpose() * q->A);
    return m == "tpca" ? tpca(G, q->k) : tpower(G, q->k, cfg);
  }
  if (const auto* q = std::get_if<RidgeProblem>(&p)) {
    if (m == "iht") return iht(q->A, q->y, q->alpha, q->k, cfg);
    if (m == "htp") return htp(q->A, q->y, q->alpha, q->k, cfg);
    return greedy_regression(q->A, q->y, q->alpha, q->k);
  }
  throw ValidationError("heuristic '" + m + "' has no implementation for this family");
}

inline std::vector<BenchRecord> bench_instance(const BenchSpec& s, const std::map<std::string, double>& pt,
                                               const std::vector<std::pair<std::string, double>>& gp,
                                               std::size_t gi, std::uint64_t seed) {
  std::ostringstream id;
  id << "g" << gi << "_s" << seed;
  std::vector<BenchRecord> out;
  const Sense sense = s.family == "ridge" ? Sense::Min : Sense::Max;
  auto base = [&](const std::string& m) {
    BenchRecord r;
    r.instance_id = id.str();
    r.grid_point = gp;
    r.seed = seed;
    r.method = m;
    r.sense = sense_name(sense);
    return r;
  };
  Problem prob;
  try {
    prob = bench_problem(s, pt, seed);
  } catch (const std::exception& e) {
    for (const auto& m : s.methods) {
      BenchRecord r = base(m);
      r.status = std::string("generator_error");
      out.push_back(r);
    }
    return out;
  }
  Reference ref;
  try {
    ref = oracle_reference(prob, default_context().enumeration_guard);
  } catch (const std::exception&) {
  }
  std::map<std::string, BenchRecord> recs;
  auto run_sdp = [&](const std::string& m) {
    BenchRecord r = base(m);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const RelaxedSolution sol = solve_relaxation(build_problem(prob, method_from_name(m)), s.solver);
      r.status = status_name(sol.status);
      r.iterations = sol.iterations;
      if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::MaxIter) {
        r.relax_bound = sol.value;
        try {
          r.feasible_value = round_truncate(sol, prob).value;
        } catch (const std::exception&) {
          r.status += "+rounding_failed";
        }
      }
    } catch (const std::exception& e) {
      r.status = "error";
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    recs[m] = r;
  };
  for (const auto& m : s.methods) {
    if (sdp_methods().count(m)) {
      run_sdp(m);
      continue;
    }
    BenchRecord r = base(m);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const HeuristicResult h = run_heuristic(prob, m, s.heuristic);
      r.feasible_value = h.value;
      r.status = heuristic_status_name(h.status);
      r.iterations = h.iterations;
    } catch (const std::exception&) {
      r.status = "error";
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    recs[m] = r;
  }
  if (!ref.value) {
    // Without a tractable oracle the reference is the Q bound, which is on the far side of the optimum.
    if (!recs.count("Q")) {
      run_sdp("Q");
      BenchRecord q = recs["Q"];
      recs.erase("Q");
      if (q.status == "optimal" && q.relax_bound) ref.value = q.relax_bound;
    } else if (recs["Q"].status.rfind("optimal", 0) == 0 && recs["Q"].relax_bound) {
      ref.value = recs["Q"].relax_bound;
    }
    if (ref.value) ref.kind = sense == Sense::Max ? "Q_upper" : "Q_lower";
  }
  for (const auto& m : s.methods) {
    BenchRecord r = recs[m];
    r.reference = ref.value;
    r.reference_kind = ref.kind;
    if (ref.value && r.feasible_value && *r.feasible_value != 0.0) {
      r.ratio = sense == Sense::Max ? *ref.value / *r.feasible_value : *r.feasible_value / *ref.value;
    }
    out.push_back(r);
  }
  return out;
}

inline std::string fmt(std::optional<double> v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", *v);
  return buf;
}

}  // namespace detail

// Records sorted by instance order, then method name.
inline std::vector<BenchRecord> run_bench(const BenchSpec& s) {
  std::vector<std::map<std::string, double>> points{{}};
  std::vector<std::vector<std::pair<std::string, double>>> gps{{}};
  for (const auto& [key, vals] : s.grid) {
    std::vector<std::map<std::string, double>> np;
    std::vector<std::vector<std::pair<std::string, double>>> ng;
    for (std::size_t i = 0; i < points.size(); ++i)
      for (double v : vals) {
        auto p = points[i];
        p[key] = v;
        auto g = gps[i];
        g.emplace_back(key, v);
        np.push_back(std::move(p));
        ng.push_back(std::move(g));
      }
    points = std::move(np);
    gps = std::move(ng);
  }
  struct Task {
    std::size_t gi;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t gi = 0; gi < points.size(); ++gi)
    for (int t = 0; t < s.seed_count; ++t) tasks.push_back({gi, s.seed_begin + static_cast<std::uint64_t>(t)});
  std::vector<std::vector<BenchRecord>> results(tasks.size());
  auto work = [&](std::size_t start) {
    for (std::size_t i = start; i < tasks.size(); i += static_cast<std::size_t>(s.threads))
      results[i] = detail::bench_instance(s, points[tasks[i].gi], gps[tasks[i].gi], tasks[i].gi, tasks[i].seed);
  };
  if (s.threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < s.threads; ++t) pool.emplace_back(work, static_cast<std::size_t>(t));
    for (auto& th : pool) th.join();
  }
  std::vector<BenchRecord> all;
  for (auto& r : results) {
    std::sort(r.begin(), r.end(), [](const BenchRecord& a, const BenchRecord& b) { return a.method < b.method; });
    all.insert(all.end(), r.begin(), r.end());
  }
  return all;
}

inline std::string records_csv(const std::vector<BenchRecord>& recs) {
  std::ostringstream o;
  o << "instance_id,seed";
  if (!recs.empty())
    for (const auto& [k, v] : recs.front().grid_point) o << "," << k;
  o << ",method,sense,relax_bound,feasible_value,reference,reference_kind,ratio,status,iterations\n";
  for (const auto& r : recs) {
    o << r.instance_id << "," << r.seed;
    for (const auto& [k, v] : r.grid_point) o << "," << detail::fmt(v);
    o << "," << r.method << "," << r.sense << "," << detail::fmt(r.relax_bound) << "," << detail::fmt(r.feasible_value)
      << "," << detail::fmt(r.reference) << "," << r.reference_kind << "," << detail::fmt(r.ratio) << "," << r.status
      << "," << r.iterations << "\n";
  }
  return o.str();
}

inline std::string timings_csv(const std::vector<BenchRecord>& recs) {
  std::ostringstream o;
  o << "instance_id,method,wall_seconds\n";
  for (const auto& r : recs) o << r.instance_id << "," << r.method << "," << detail::fmt(r.wall_seconds) << "\n";
  return o.str();
}

struct CdfPoint {
  std::string method;
  double value;
  double cdf;
};

inline std::optional<double> record_column(const BenchRecord& r, const std::string& col) {
  if (col == "ratio") return r.ratio;
  if (col == "relax_bound") return r.relax_bound;
  if (col == "feasible_value") return r.feasible_value;
  if (col == "reference") return r.reference;
  throw ValidationError("unknown record column '" + col + "'");
}

// Per method: one point per distinct value with cdf = #(values <= v) / N.
// Values are compared after rounding to the CSV precision so printed ties are real ties.
inline std::vector<CdfPoint> empirical_cdf(const std::vector<BenchRecord>& recs, const std::string& col) {
  std::map<std::string, std::vector<double>> by;
  for (const auto& r : recs)
    if (auto v = record_column(r, col)) by[r.method].push_back(std::stod(detail::fmt(*v)));
  if (by.empty()) throw ValidationError("emit_cdf: no values in column '" + col + "'");
  std::vector<CdfPoint> out;
  for (auto& [m, vals] : by) {
    std::sort(vals.begin(), vals.end());
    const double N = static_cast<double>(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (i + 1 == vals.size() || vals[i + 1] != vals[i]) out.push_back({m, vals[i], static_cast<double>(i + 1) / N});
  }
  return out;
}

// Fraction of values <= x for one method.
inline double cdf_at(const std::vector<CdfPoint>& c, const std::string& method, double x) {
  double f = 0.0;
  for (const auto& p : c)
    if (p.method == method && p.value <= x) f = std::max(f, p.cdf);
  return f;
}

inline std::string cdf_csv(const std::vector<CdfPoint>& c) {
  std::ostringstream o;
  o << "method,value,cdf\n";
  for (const auto& p : c) o << p.method << "," << detail::fmt(p.value) << "," << detail::fmt(p.cdf) << "\n";
  return o.str();
}

inline std::string plot_script(const std::string& col) {
  std::ostringstream o;
  o << "import csv\n"
    << "import matplotlib\n"
    << "matplotlib.use(\"Agg\")\n"
    << "import matplotlib.pyplot as plt\n\n"
    << "series = {}\n"
    << "with open(\"cdf_" << col << ".csv\") as f:\n"
    << "    for row in csv.DictReader(f):\n"
    << "        series.setdefault(row[\"method\"], []).append((float(row[\"value\"]), float(row[\"cdf\"])))\n"
    << "for method, pts in sorted(series.items()):\n"
    << "    xs = [p[0] for p in pts]\n"
    << "    ys = [p[1] for p in pts]\n"
    << "    plt.step(xs, ys, where=\"post\", label=method)\n"
    << "plt.xlabel(\"" << col << "\")\n"
    << "plt.ylabel(\"empirical CDF\")\n"
    << "plt.legend()\n"
    << "plt.savefig(\"cdf_" << col << ".png\", dpi=150)\n";
  return o.str();
}

inline void emit_cdf(const std::vector<BenchRecord>& recs, const std::string& col, const std::string& dir) {
  const auto c = empirical_cdf(recs, col);
  std::filesystem::create_directories(dir);
  write_text(dir + "/cdf_" + col + ".csv", cdf_csv(c));
  write_text(dir + "/plot_" + col + ".py", plot_script(col));
}

inline void write_bench_outputs(const std::vector<BenchRecord>& recs, const std::string& dir,
                                const std::vector<std::string>& cols = {"ratio", "relax_bound", "feasible_value"}) {
  std::filesystem::create_directories(dir);
  write_text(dir + "/records.csv", records_csv(recs));
  write_text(dir + "/timings.csv", timings_csv(recs));
  for (const auto& col : cols) {
    bool any = false;
    for (const auto& r : recs) any = any || record_column(r, col).has_value();
    if (any) emit_cdf(recs, col, dir);
  }
}

}  // namespace spartra
