#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "context.hpp"
#include "symmat.hpp"

namespace spartra {

enum class ConeKind { Zero, Free, NonNeg, SOC, RSOC, PSD };

inline const char* cone_name(ConeKind k) {
  switch (k) {
    case ConeKind::Zero: return "zero";
    case ConeKind::Free: return "free";
    case ConeKind::NonNeg: return "nonneg";
    case ConeKind::SOC: return "soc";
    case ConeKind::RSOC: return "rsoc";
    case ConeKind::PSD: return "psd";
  }
  return "?";
}

inline ConeKind cone_from_name(const std::string& s) {
  if (s == "zero") return ConeKind::Zero;
  if (s == "free") return ConeKind::Free;
  if (s == "nonneg") return ConeKind::NonNeg;
  if (s == "soc") return ConeKind::SOC;
  if (s == "rsoc") return ConeKind::RSOC;
  if (s == "psd") return ConeKind::PSD;
  throw ValidationError("unknown cone type '" + s + "'");
}

// RSOC convention: {(u, v, w) : 2uv >= |w|^2, u, v >= 0}.
// PSD blocks hold svec of an order-dim matrix.
struct ConeBlock {
  ConeKind kind;
  int dim;
  int size() const { return kind == ConeKind::PSD ? tri_size(dim) : dim; }
};

struct Triplet {
  int row;
  int block;
  int index;
  double value;
};

struct ConicProgram {
  std::vector<ConeBlock> blocks;
  std::vector<double> objective;
  std::vector<Triplet> triplets;
  std::vector<double> b;

  int num_vars() const {
    int s = 0;
    for (const auto& bl : blocks) s += bl.size();
    return s;
  }
  int num_rows() const { return static_cast<int>(b.size()); }

  std::vector<int> offsets() const {
    std::vector<int> off;
    int s = 0;
    for (const auto& bl : blocks) {
      off.push_back(s);
      s += bl.size();
    }
    return off;
  }

  void validate() const {
    if (blocks.empty()) throw ValidationError("conic program: no variable blocks");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& bl = blocks[i];
      if (bl.dim < 1) throw ValidationError("conic program: block " + std::to_string(i) + " has nonpositive dimension");
      if ((bl.kind == ConeKind::SOC && bl.dim < 1) || (bl.kind == ConeKind::RSOC && bl.dim < 2))
        throw ValidationError("conic program: block " + std::to_string(i) + " too small for its cone");
    }
    if (static_cast<int>(objective.size()) != num_vars())
      throw ValidationError("conic program: objective length does not match variable count");
    for (double v : objective)
      if (!std::isfinite(v)) throw ValidationError("conic program: non-finite objective");
    for (double v : b)
      if (!std::isfinite(v)) throw ValidationError("conic program: non-finite right-hand side");
    for (const auto& t : triplets) {
      if (t.row < 0 || t.row >= num_rows()) throw ValidationError("conic program: triplet row out of range");
      if (t.block < 0 || t.block >= static_cast<int>(blocks.size()))
        throw ValidationError("conic program: triplet block out of range");
      if (t.index < 0 || t.index >= blocks[t.block].size())
        throw ValidationError("conic program: triplet index outside its block");
      if (!std::isfinite(t.value)) throw ValidationError("conic program: non-finite coefficient");
    }
  }
};

class ProgramBuilder {
 public:
  int add_block(ConeKind kind, int dim) {
    p_.blocks.push_back({kind, dim});
    p_.objective.resize(p_.objective.size() + static_cast<std::size_t>(p_.blocks.back().size()), 0.0);
    offsets_.push_back(next_);
    next_ += p_.blocks.back().size();
    return static_cast<int>(p_.blocks.size()) - 1;
  }

  int add_row(double rhs) {
    p_.b.push_back(rhs);
    return static_cast<int>(p_.b.size()) - 1;
  }

  void coef(int row, int block, int index, double v) {
    if (v != 0.0) p_.triplets.push_back({row, block, index, v});
  }

  // v times the matrix entry X_ij of a PSD block (one entry, not the symmetric pair).
  void entry(int row, int block, int i, int j, double v) {
    coef(row, block, tri_index(i, j), i == j ? v : v / kSqrt2);
  }

  // scale * (M . X) over a principal sub-block of a PSD block starting at offset.
  void inner(int row, int block, const SymMatrix& m, double scale = 1.0, int offset = 0) {
    for (int i = 0; i < m.size(); ++i)
      for (int j = 0; j <= i; ++j)
        if (m(i, j) != 0.0)
          coef(row, block, tri_index(i + offset, j + offset), scale * (i == j ? 1.0 : kSqrt2) * m(i, j));
  }

  void obj(int block, int index, double v) { p_.objective[static_cast<std::size_t>(offsets_[block] + index)] += v; }

  void obj_entry(int block, int i, int j, double v) { obj(block, tri_index(i, j), i == j ? v : v / kSqrt2); }

  void obj_inner(int block, const SymMatrix& m, double scale = 1.0, int offset = 0) {
    for (int i = 0; i < m.size(); ++i)
      for (int j = 0; j <= i; ++j)
        obj(block, tri_index(i + offset, j + offset), scale * (i == j ? 1.0 : kSqrt2) * m(i, j));
  }

  int rows() const { return static_cast<int>(p_.b.size()); }
  const ConicProgram& program() const { return p_; }
  ConicProgram build() const {
    p_.validate();
    return p_;
  }

 private:
  ConicProgram p_;
  std::vector<int> offsets_;
  int next_ = 0;
};

// Matrix held in svec layout inside a flat variable vector.
inline SymMatrix block_matrix(const Vec& flat, int offset, int order) {
  return smat(flat.segment(offset, tri_size(order)));
}

}  // namespace spartra
