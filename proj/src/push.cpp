#include "mftn/push.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace mftn {

DenseTensor apply_defect(const DenseTensor& t, const std::string& leg, const Mat& w, Mult m) {
  return apply_on_leg(t, leg, m == Mult::Left ? Mat(w) : Mat(w.transpose()));
}

double rule_residual(const DenseTensor& A, const std::string& phys, const DefectRule& r, const MFBasis& b,
                     const MultOf& mult) {
  const DenseTensor lhs = apply_defect(A, r.src, b.elements.at(r.g).conjugate(), mult(r.src));
  DenseTensor rhs = apply_on_leg(A, phys, r.u);
  for (const auto& [leg, h] : r.outs) rhs = apply_defect(rhs, leg, b.elements.at(h).conjugate(), mult(leg));
  const double n = A.norm();
  return n == 0 ? 0.0 : (lhs - rhs).norm() / n;
}

std::pair<int, cplx> conj_product(const GroupTable& t, int a, int b) {
  return {t.prod(a, b), std::conj(t.prod_phase(a, b))};
}

std::vector<int> group_generators(const MFBasis& b) {
  const auto& t = b.group();
  const int id = b.identity_index();
  std::set<int> reached{id};
  std::vector<int> gens;
  for (int g = 0; g < b.size(); ++g) {
    if (reached.count(g)) continue;
    gens.push_back(g);
    bool grew = true;
    while (grew) {
      grew = false;
      std::vector<int> cur(reached.begin(), reached.end());
      for (int x : cur)
        for (int y : gens) {
          if (reached.insert(t.prod(x, y)).second) grew = true;
        }
    }
  }
  return gens;
}

PushTable::PushTable(const MFBasis& b, const std::string& src, const std::vector<DefectRule>& rules,
                     const MultOf& mult, int phys_dim)
    : table_(b.group()), src_(src), src_mult_(mult(src)) {
  const int id = b.identity_index();
  entries_.assign(b.size(), std::nullopt);
  for (const auto& r : rules) {
    if (r.src != src) continue;
    for (const auto& o : r.outs)
      if (std::find(out_legs_.begin(), out_legs_.end(), o.first) == out_legs_.end()) out_legs_.push_back(o.first);
  }
  for (const auto& l : out_legs_) out_mults_.push_back(mult(l));

  auto aligned = [&](const std::vector<std::pair<std::string, int>>& outs) {
    std::vector<std::pair<std::string, int>> a;
    for (const auto& l : out_legs_) {
      int h = id;
      for (const auto& o : outs)
        if (o.first == l) h = o.second;
      a.emplace_back(l, h);
    }
    return a;
  };

  entries_[id] = PushEntry{Mat::Identity(phys_dim, phys_dim), aligned({})};
  std::vector<int> gens;
  for (const auto& r : rules) {
    if (r.src != src) continue;
    if (r.u.rows() != phys_dim || r.u.cols() != phys_dim)
      throw Error(ErrorKind::DimensionMismatch, "rule unitary does not match the physical dimension");
    if (entries_[r.g]) continue;
    entries_[r.g] = PushEntry{r.u, aligned(r.outs)};
    gens.push_back(r.g);
  }
  bool grew = true;
  while (grew) {
    grew = false;
    for (int a = 0; a < b.size(); ++a) {
      if (!entries_[a]) continue;
      for (int g : gens) {
        int p = 0;
        if (!entries_[table_.prod(a, g)]) {
          auto e = compose(*entries_[a], a, *entries_[g], g, &p);
          entries_[p] = std::move(e);
          grew = true;
        }
        if (!entries_[table_.prod(g, a)]) {
          auto e = compose(*entries_[g], g, *entries_[a], a, &p);
          entries_[p] = std::move(e);
          grew = true;
        }
      }
    }
  }
}

PushEntry PushTable::compose(const PushEntry& ea, int ga, const PushEntry& eb, int gb, int* g) const {
  PushEntry out;
  out.u = src_mult_ == Mult::Left ? Mat(eb.u * ea.u) : Mat(ea.u * eb.u);
  for (std::size_t k = 0; k < out_legs_.size(); ++k) {
    const int oa = ea.outs[k].second, ob = eb.outs[k].second;
    // Right-multiplied source: the first factor is pushed first.
    const bool a_first = (src_mult_ == Mult::Left) == (out_mults_[k] == Mult::Right);
    auto [h, c] = a_first ? conj_product(table_, oa, ob) : conj_product(table_, ob, oa);
    out.u *= c;
    out.outs.emplace_back(out_legs_[k], h);
  }
  *g = table_.prod(ga, gb);
  out.u *= table_.prod_phase(ga, gb);
  return out;
}

bool PushTable::complete() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.has_value(); });
}

std::vector<int> PushTable::covered() const {
  std::vector<int> c;
  for (std::size_t g = 0; g < entries_.size(); ++g)
    if (entries_[g]) c.push_back(static_cast<int>(g));
  return c;
}

std::vector<PushTable> build_push_tables(const MFBasis& b, const std::vector<DefectRule>& rules, const MultOf& mult,
                                         int phys_dim) {
  std::map<std::pair<std::string, std::set<std::string>>, std::vector<DefectRule>> groups;
  std::vector<std::pair<std::string, std::set<std::string>>> order;
  for (const auto& r : rules) {
    std::set<std::string> outs;
    for (const auto& o : r.outs) outs.insert(o.first);
    auto key = std::make_pair(r.src, outs);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(r);
  }
  std::vector<PushTable> tables;
  for (const auto& key : order) tables.emplace_back(b, key.first, groups[key], mult, phys_dim);
  return tables;
}

}  // namespace mftn
