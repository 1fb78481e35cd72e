#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "certify.hpp"
#include "cones.hpp"
#include "conic_program.hpp"
#include "conic_solver.hpp"
#include "heuristics.hpp"
#include "instances.hpp"
#include "oracles.hpp"
#include "relaxations.hpp"
#include "symmat.hpp"

#include "json.hpp"

namespace spartra {

using json = nlohmann::json;

inline json to_json(const Vec& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

inline json to_json(const Mat& m) {
  json j = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) r.push_back(m(i, c));
    j.push_back(r);
  }
  return j;
}

inline json to_json(const SymMatrix& m) { return to_json(m.dense()); }

inline json to_json(const std::vector<int>& s) { return json(s); }

inline Vec vec_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("expected a numeric array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline Mat mat_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("expected a nonempty array of rows");
  const std::size_t r = j.size(), c = j[0].size();
  Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < r; ++i) {
    if (!j[i].is_array() || j[i].size() != c) throw DimensionError("matrix rows have unequal lengths");
    for (std::size_t k = 0; k < c; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

// Accepts {"n": n, "lower": [...]} (row-major lower triangle) or a dense array of rows.
inline SymMatrix sym_from_json(const json& j, double asym_tol = 1e-9) {
  if (j.is_object()) {
    try {
      return SymMatrix::from_lower(j.at("n").get<int>(), j.at("lower").get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw ValidationError(std::string("matrix object: ") + e.what());
    }
  }
  const Mat m = mat_from_json(j);
  if (m.rows() != m.cols()) throw DimensionError("symmetric matrix must be square");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > asym_tol * (1.0 + m.cwiseAbs().maxCoeff())) throw ValidationError("matrix is not symmetric");
  return SymMatrix::from_dense(m);
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline json lower_json(const SymMatrix& m) { return {{"n", m.size()}, {"lower", m.lower()}}; }

struct MatrixFile {
  SymMatrix M{0};
  std::string warning;
};

// JSON files go through sym_from_json; anything else is read as a CSV square matrix and symmetrized.
inline MatrixFile read_matrix_file(const std::string& path) {
  MatrixFile out;
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    json j = read_json_file(path);
    if (j.is_object() && !j.contains("lower"))
      for (const char* key : {"matrix", "Sigma", "X"})
        if (j.contains(key)) {
          j = j[key];
          break;
        }
    out.M = sym_from_json(j, std::numeric_limits<double>::infinity());
    return out;
  }
  const auto rows = detail::read_numeric_rows(path);
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw DimensionError("'" + path + "' holds no matrix");
  Mat d(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n) throw DimensionError("'" + path + "' is not a square matrix");
    for (int k = 0; k < n; ++k) d(i, k) = rows[i][k];
  }
  const double asym = (d - d.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) out.warning = "asymmetry " + std::to_string(asym) + " removed by symmetrization";
  out.M = SymMatrix::from_dense(0.5 * (d + d.transpose()));
  return out;
}

inline void write_text(const std::string& path, const std::string& s) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << s;
}

inline void write_json_file(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Conic programs: blocks, objective c, triplets [row, block, index, value], right-hand side b.
inline json to_json(const ConicProgram& p) {
  json j;
  j["blocks"] = json::array();
  for (const auto& b : p.blocks) j["blocks"].push_back({{"type", cone_name(b.kind)}, {"dim", b.dim}});
  j["c"] = p.objective;
  j["A"] = json::array();
  for (const auto& t : p.triplets) j["A"].push_back({t.row, t.block, t.index, t.value});
  j["b"] = p.b;
  return j;
}

inline ConicProgram program_from_json(const json& j) {
  ConicProgram p;
  try {
    for (const auto& b : j.at("blocks")) p.blocks.push_back({cone_from_name(b.at("type").get<std::string>()), b.at("dim").get<int>()});
    p.objective = j.at("c").get<std::vector<double>>();
    for (const auto& t : j.at("A")) {
      if (!t.is_array() || t.size() != 4) throw ValidationError("conic program: each A entry must be [row, block, index, value]");
      p.triplets.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>(), t[3].get<double>()});
    }
    p.b = j.at("b").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("conic program JSON: ") + e.what());
  }
  p.validate();
  return p;
}

inline json to_json(const Residuals& r) { return {{"primal", r.primal}, {"dual", r.dual}, {"gap", r.gap}}; }

inline json to_json(const SolveResult& r) {
  json j = {{"status", status_name(r.status)},
            {"iterations", r.iterations},
            {"residuals", to_json(r.residuals)}};
  if (r.status == SolveStatus::Optimal || r.status == SolveStatus::MaxIter) {
    j["primal_objective"] = r.primal_objective;
    j["dual_objective"] = r.dual_objective;
    j["x"] = to_json(r.x);
    j["y"] = to_json(r.y);
    j["z"] = to_json(r.z);
  } else if (r.status == SolveStatus::PrimalInfeasibleCert) {
    j["ray_y"] = to_json(r.ray_y);
    j["ray_z"] = to_json(r.ray_z);
    j["certificate_residual"] = r.certificate_residual;
  } else {
    j["ray_x"] = to_json(r.ray_x);
    j["certificate_residual"] = r.certificate_residual;
  }
  return j;
}

inline json to_json(const ConeVerdict& v) {
  json j = {{"status", membership_name(v.status)}, {"margin", v.margin}};
  if (v.witness_vector) j["witness_vector"] = to_json(*v.witness_vector);
  if (v.witness_matrix) j["witness_matrix"] = to_json(*v.witness_matrix);
  if (!v.witness_support.empty()) j["witness_support"] = v.witness_support;
  if (!v.detail.empty()) j["detail"] = v.detail;
  return j;
}

inline json to_json(const SparseQcqp& p) {
  json j = {{"problem", "qcqp"}, {"C", to_json(p.C)}, {"k", p.k}, {"sense", sense_name(p.sense)}};
  j["constraints"] = json::array();
  for (const auto& c : p.constraints) j["constraints"].push_back({{"A", to_json(c.A)}, {"b", c.b}});
  return j;
}

inline json to_json(const Problem& p) {
  return std::visit(
      [](const auto& q) -> json {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, SparseQcqp>) return to_json(q);
        if constexpr (std::is_same_v<T, SpcaProblem>) return {{"problem", "spca"}, {"Sigma", to_json(q.Sigma)}, {"k", q.k}};
        if constexpr (std::is_same_v<T, RidgeProblem>)
          return {{"problem", "ridge"}, {"A", to_json(q.A)}, {"y", to_json(q.y)}, {"alpha", q.alpha}, {"k", q.k}};
        if constexpr (std::is_same_v<T, SlrProblem>)
          return {{"problem", "slr"}, {"A", to_json(q.A)}, {"y", to_json(q.y)}, {"k", q.k}};
        if constexpr (std::is_same_v<T, SccaProblem>)
          return {{"problem", "scca"}, {"Sxx", to_json(q.Sxx)}, {"Syy", to_json(q.Syy)}, {"Sxy", to_json(q.Sxy)},
                  {"k1", q.k1}, {"k2", q.k2}};
        if constexpr (std::is_same_v<T, RipProblem>) return {{"problem", "rip"}, {"A", to_json(q.A)}, {"k", q.k}};
      },
      p);
}

// The problem tag comes from the document's "problem" field, or from fallback when absent.
inline Problem problem_from_json(const json& j, const std::string& fallback = "") {
  const std::string tag = j.contains("problem") ? j["problem"].get<std::string>() : fallback;
  try {
    if (tag == "qcqp") {
      SparseQcqp p;
      p.C = sym_from_json(j.at("C"));
      p.k = j.at("k").get<int>();
      p.sense = sense_from_name(j.value("sense", std::string("min")));
      if (j.contains("constraints"))
        for (const auto& c : j["constraints"]) p.constraints.push_back({sym_from_json(c.at("A")), c.at("b").get<double>()});
      p.validate();
      return p;
    }
    if (tag == "spca") return SpcaProblem{sym_from_json(j.at("Sigma")), j.at("k").get<int>()};
    if (tag == "ridge")
      return RidgeProblem{mat_from_json(j.at("A")), vec_from_json(j.at("y")), j.value("alpha", 0.0), j.at("k").get<int>()};
    if (tag == "slr") return SlrProblem{mat_from_json(j.at("A")), vec_from_json(j.at("y")), j.at("k").get<int>()};
    if (tag == "scca")
      return SccaProblem{sym_from_json(j.at("Sxx")), sym_from_json(j.at("Syy")), mat_from_json(j.at("Sxy")),
                         j.at("k1").get<int>(), j.at("k2").get<int>()};
    if (tag == "rip") return RipProblem{mat_from_json(j.at("A")), j.at("k").get<int>()};
  } catch (const json::exception& e) {
    throw ValidationError("problem JSON (" + tag + "): " + e.what());
  }
  throw ValidationError("unknown or missing problem tag '" + tag + "'");
}

inline json to_json(const Instance& in) {
  json j = {{"kind", in.kind}, {"seed", in.seed}, {"params", in.params}};
  if (in.Sigma.size() > 0) j["Sigma"] = to_json(in.Sigma);
  if (in.Sigma_bar.size() > 0) j["Sigma_bar"] = to_json(in.Sigma_bar);
  if (in.A.size() > 0) j["A"] = to_json(in.A);
  if (in.y.size() > 0) j["y"] = to_json(in.y);
  if (in.xbar.size() > 0) j["xbar"] = to_json(in.xbar);
  if (in.noise.size() > 0) j["noise"] = to_json(in.noise);
  if (in.Sxx.size() > 0) {
    j["Sxx"] = to_json(in.Sxx);
    j["Syy"] = to_json(in.Syy);
    j["Sxy"] = to_json(in.Sxy);
    j["u"] = to_json(in.u);
    j["v"] = to_json(in.v);
    j["rho"] = in.rho;
  }
  if (in.beta != 0.0) j["beta"] = in.beta;
  return j;
}

inline json to_json(const RelaxedSolution& s) {
  json j = {{"source", s.source},
            {"status", status_name(s.status)},
            {"sense", sense_name(s.sense)},
            {"iterations", s.iterations},
            {"residuals", to_json(s.residuals)},
            {"value", s.value},
            {"dual_value", s.dual_value},
            {"X", to_json(s.X)},
            {"lambda", to_json(s.lambda)}};
  if (s.border.size() > 0) j["border"] = to_json(s.border);
  j["Z"] = json::array();
  for (const auto& z : s.Z) j["Z"].push_back(to_json(z));
  return j;
}

inline json to_json(const RoundedPoint& p) {
  json j = {{"x", to_json(p.x)}, {"support", p.support}, {"value", p.value}};
  if (p.v.size() > 0) {
    j["v"] = to_json(p.v);
    j["support2"] = p.support2;
  }
  return j;
}

inline json to_json(const RankOneCheck& c) {
  json j = {{"exact", c.exact}, {"ratio", c.ratio}};
  if (c.x) j["x"] = to_json(*c.x);
  if (!c.diagnostic.empty()) j["diagnostic"] = c.diagnostic;
  return j;
}

inline json to_json(const OracleResult& r) {
  json j = {{"value", r.value}, {"support", r.support}, {"x", to_json(r.x)}, {"enumerated", r.enumerated}};
  if (r.v.size() > 0) {
    j["v"] = to_json(r.v);
    j["support2"] = r.support2;
    j["rank_deficient"] = r.rank_deficient;
  }
  return j;
}

inline json to_json(const RipExact& r) {
  return {{"delta_plus_star", r.delta_plus_star}, {"delta_minus_star", r.delta_minus_star},
          {"upper", r.upper},                     {"lower", r.lower},
          {"support_plus", r.support_plus},       {"support_minus", r.support_minus},
          {"enumerated", r.enumerated}};
}

inline json to_json(const HeuristicResult& r) {
  return {{"x", to_json(r.x)}, {"value", r.value}, {"status", heuristic_status_name(r.status)}, {"iterations", r.iterations}};
}

inline json to_json(const Certificate& c) {
  json j = {{"lambda", to_json(c.lambda)},
            {"Z", to_json(c.Z)},
            {"Q", to_json(c.Q)},
            {"complementarity", c.complementarity},
            {"min_eig_Q", c.min_eig_Q},
            {"corank", c.corank},
            {"gap", c.gap},
            {"degenerate", c.degenerate},
            {"valid", c.valid}};
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

}  // namespace spartra
