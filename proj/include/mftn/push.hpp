#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mftn/basis.hpp"
#include "mftn/tensor.hpp"

namespace mftn {

// How a bond matrix B meets a virtual leg: Left means sum_x B[y,x] A[x] (B A),
// Right means sum_x A[x] B[x,y] (A B).
enum class Mult { Left, Right };
using MultOf = std::function<Mult(const std::string&)>;

// Bond matrix P_g^* on leg `src` equals u (on the physical leg) times P_h^* on each out leg.
struct DefectRule {
  std::string src;
  int g = 0;
  Mat u;
  std::vector<std::pair<std::string, int>> outs;
};

struct PushEntry {
  Mat u;
  std::vector<std::pair<std::string, int>> outs;  // aligned with PushTable::out_legs()
};

DenseTensor apply_defect(const DenseTensor& t, const std::string& leg, const Mat& w, Mult m);

// Relative residual |lhs - rhs| / |A| of one rule.
double rule_residual(const DenseTensor& A, const std::string& phys, const DefectRule& r, const MFBasis& b,
                     const MultOf& mult);

// P_a^* P_b^* = c P_g^*; returns (g, c).
std::pair<int, cplx> conj_product(const GroupTable& t, int a, int b);

// Closure of all rules with one source leg and one out-leg set over the basis group.
class PushTable {
 public:
  PushTable() = default;
  PushTable(const MFBasis& b, const std::string& src, const std::vector<DefectRule>& rules, const MultOf& mult,
            int phys_dim);

  const std::string& source() const { return src_; }
  const std::vector<std::string>& out_legs() const { return out_legs_; }
  const std::optional<PushEntry>& entry(int g) const { return entries_[g]; }
  bool covers(int g) const { return entries_[g].has_value(); }
  bool complete() const;
  std::vector<int> covered() const;

 private:
  PushEntry compose(const PushEntry& a, int ga, const PushEntry& b, int gb, int* g) const;

  GroupTable table_;
  std::string src_;
  Mult src_mult_ = Mult::Left;
  std::vector<std::string> out_legs_;
  std::vector<Mult> out_mults_;
  std::vector<std::optional<PushEntry>> entries_;
};

// Groups rules by (source, out-leg set) and builds one table per group.
std::vector<PushTable> build_push_tables(const MFBasis& b, const std::vector<DefectRule>& rules, const MultOf& mult,
                                         int phys_dim);

// Minimal generating set of the basis group, in index order.
std::vector<int> group_generators(const MFBasis& b);

}  // namespace mftn
