#include "mftn/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include "mftn/linalg.hpp"

namespace mftn {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int sample_index(const std::vector<double>& weights, std::mt19937_64& rng) {
  double total = 0;
  for (double w : weights) total += std::max(w, 0.0);
  if (!(total > 0)) throw Error(ErrorKind::InvalidArgument, "all outcome weights vanish");
  const double u = uniform01(rng) * total;
  double acc = 0;
  int last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    acc += weights[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

namespace {

std::string idx(const std::string& p, int k) { return p + std::to_string(k); }

DenseTensor bond_tensor(const Mat& B, const std::string& row, const std::string& col) {
  return DenseTensor::from_matrix(B, {row}, {static_cast<int>(B.rows())}, {col}, {static_cast<int>(B.cols())});
}

DenseTensor chain_site(const MPSTensor& A, int k) {
  return A.tensor.relabeled({{kLeft, idx("v", k)}, {kRight, idx("w", k)}, {kPhys, idx("p", k)}});
}

void check_chain(const std::vector<MPSTensor>& sites) {
  if (sites.empty()) throw Error(ErrorKind::InvalidArgument, "empty chain");
  for (const auto& s : sites) {
    s.validate();
    if (!s.basis->table) throw Error(ErrorKind::NotGroup, "protocol needs a group basis");
    if (s.D() != sites.front().D()) throw Error(ErrorKind::DimensionMismatch, "adjacent tensors differ in D");
  }
}

Mat measured_bond(const MFBasis& b, int i) { return b.elements.at(i).conjugate() / std::sqrt(static_cast<double>(b.dim)); }

DenseTensor finish_chain(DenseTensor t, int n, Boundary bc) {
  std::vector<std::string> order;
  if (bc == Boundary::Open) {
    t = t.relabeled({{"v0", kLeft}, {idx("w", n - 1), kRight}});
    order.push_back(kLeft);
  }
  for (int k = 0; k < n; ++k) order.push_back(idx("p", k));
  if (bc == Boundary::Open) order.push_back(kRight);
  return t.permuted(order);
}

DenseTensor apply_mps_feedback(DenseTensor state, const MpsOutcomeResult& f) {
  for (std::size_t k = 0; k < f.corrections.size(); ++k)
    state = apply_on_leg(state, idx("p", static_cast<int>(k)), f.corrections[k]);
  if (f.boundary) state = apply_on_leg(state, kRight, *f.boundary);
  return state;
}

}  // namespace

int mps_bond_count(int n, Boundary bc) { return bc == Boundary::Open ? n - 1 : n; }

DenseTensor mps_chain_state(const std::vector<MPSTensor>& sites, Boundary bc, const std::vector<Mat>& bonds) {
  check_chain(sites);
  const int n = static_cast<int>(sites.size());
  if (static_cast<int>(bonds.size()) != mps_bond_count(n, bc))
    throw Error(ErrorKind::DimensionMismatch, "wrong number of bond matrices");
  std::vector<DenseTensor> net;
  for (int k = 0; k < n; ++k) net.push_back(chain_site(sites[k], k));
  for (int k = 0; k < static_cast<int>(bonds.size()); ++k)
    net.push_back(bond_tensor(bonds[k], idx("w", k), idx("v", (k + 1) % n)));
  return finish_chain(contract_network(net), n, bc);
}

MpsOutcomeResult mps_feedback(const std::vector<MPSTensor>& sites, Boundary bc, const std::vector<int>& outcomes) {
  check_chain(sites);
  const int n = static_cast<int>(sites.size());
  if (static_cast<int>(outcomes.size()) != mps_bond_count(n, bc))
    throw Error(ErrorKind::DimensionMismatch, "wrong number of outcomes");
  const int D = sites.front().D();
  MpsOutcomeResult r;
  for (const auto& s : sites) r.corrections.push_back(Mat::Identity(s.d(), s.d()));
  Mat O = Mat::Identity(D, D);
  for (int k = 0; k + 1 < n; ++k) {
    const MFBasis& b = *sites[k + 1].basis;
    const Mat B = O * b.elements.at(outcomes[k]).conjugate();
    const auto f = b.find(Mat(B.conjugate()));
    if (!f) throw Error(ErrorKind::SymmetryFailure, "bond product left the basis at bond " + std::to_string(k));
    if (f->first == b.identity_index()) {
      O = Mat::Identity(D, D);
      continue;
    }
    const PushTable t = mps_push_table(sites[k + 1]);
    const auto& e = t.entry(f->first);
    if (!e) {
      r.message = "defect " + b.labels[f->first] + " stuck at site " + std::to_string(k + 1);
      return r;
    }
    r.corrections[k + 1] = e->u.adjoint();
    O = b.elements.at(e->outs.front().second).conjugate();
  }
  if (bc == Boundary::Open) {
    r.boundary = linalg::inverse(Mat(O.transpose()));
    r.corrected = true;
  } else {
    const MFBasis& b = *sites.back().basis;
    const Mat B = O * b.elements.at(outcomes.back()).conjugate();
    r.corrected = linalg::proportional_residual(B, Mat::Identity(D, D)) < 1e-9;
    if (!r.corrected) r.message = "merged defect on the closing bond is not proportional to I";
  }
  return r;
}

ProtocolRun run_mps_protocol(const std::vector<MPSTensor>& sites, Boundary bc, std::uint64_t seed, double tol) {
  check_chain(sites);
  const int n = static_cast<int>(sites.size());
  const int nb = mps_bond_count(n, bc);
  std::mt19937_64 rng(seed);
  ProtocolRun run;
  run.seed = seed;
  DenseTensor X = chain_site(sites[0], 0);
  for (int k = 0; k < nb; ++k) {
    const MFBasis& b = *sites[(k + 1) % n].basis;
    std::vector<DenseTensor> cand;
    std::vector<double> w;
    for (int i = 0; i < b.size(); ++i) {
      std::vector<DenseTensor> net{X, bond_tensor(measured_bond(b, i), idx("w", k), idx("v", (k + 1) % n))};
      if (k + 1 < n) net.push_back(chain_site(sites[k + 1], k + 1));
      cand.push_back(contract_network(net));
      const double nn = cand.back().norm();
      w.push_back(nn * nn);
    }
    const int pick = sample_index(w, rng);
    double total = 0;
    for (double x : w) total += x;
    run.outcomes.push_back(pick);
    run.outcome_probabilities.push_back(w[pick] / total);
    X = cand[pick];
  }
  const auto fb = mps_feedback(sites, bc, run.outcomes);
  run.corrections = fb.corrections;
  run.corrected = fb.corrected;
  run.message = fb.message;
  DenseTensor state = apply_mps_feedback(finish_chain(X, n, bc), fb);
  std::vector<Mat> ident(nb, Mat::Identity(sites[0].D(), sites[0].D()));
  const DenseTensor target = mps_chain_state(sites, bc, ident);
  run.fidelity = fidelity(target, state);
  run.final_state = std::move(state);
  run.success = run.corrected && run.fidelity > 1 - tol;
  return run;
}

EnumerationReport enumerate_outcomes(const std::vector<MPSTensor>& sites, Boundary bc, double tol) {
  check_chain(sites);
  const int n = static_cast<int>(sites.size());
  const int nb = mps_bond_count(n, bc);
  const MFBasis& b = *sites[0].basis;
  const int m = b.size();
  const double total = std::pow(static_cast<double>(m), nb);
  if (total > 65536) throw Error(ErrorKind::SizeGuard, "more than 65536 outcome tuples");
  double resource = 1;
  for (const auto& s : sites) resource *= s.tensor.norm() * s.tensor.norm();
  std::vector<Mat> ident(nb, Mat::Identity(b.dim, b.dim));
  const DenseTensor target = mps_chain_state(sites, bc, ident);

  EnumerationReport rep;
  rep.tuples = static_cast<std::size_t>(total);
  std::vector<int> out(nb, 0);
  for (std::size_t t = 0; t < rep.tuples; ++t) {
    std::size_t rem = t;
    for (int k = nb - 1; k >= 0; --k) {
      out[k] = static_cast<int>(rem % m);
      rem /= m;
    }
    std::vector<Mat> bonds;
    for (int k = 0; k < nb; ++k) bonds.push_back(measured_bond(*sites[(k + 1) % n].basis, out[k]));
    const DenseTensor state = mps_chain_state(sites, bc, bonds);
    const double p = state.norm() * state.norm() / resource;
    rep.probabilities.push_back(p);
    rep.max_probability_deviation = std::max(rep.max_probability_deviation, std::abs(p - 1.0 / total));
    const auto fb = mps_feedback(sites, bc, out);
    double f = 0;
    if (fb.corrected) {
      f = fidelity(target, apply_mps_feedback(state, fb));
      if (f > 1 - tol) {
        ++rep.corrected;
        rep.success_probability += p;
      }
      rep.min_fidelity = std::min(rep.min_fidelity, f);
    }
    rep.fidelities.push_back(f);
  }
  rep.corrected_fraction = static_cast<double>(rep.corrected) / static_cast<double>(rep.tuples);
  return rep;
}

// ---------------------------------------------------------------- PEPS

Orientation parse_orientation(const std::string& s) {
  if (s == "UR") return Orientation::UR;
  if (s == "UL") return Orientation::UL;
  if (s == "DR") return Orientation::DR;
  if (s == "DL") return Orientation::DL;
  throw Error(ErrorKind::InvalidArgument, "orientation must be UR, UL, DR or DL");
}

std::string orientation_name(Orientation o) {
  switch (o) {
    case Orientation::UR: return "UR";
    case Orientation::UL: return "UL";
    case Orientation::DR: return "DR";
    case Orientation::DL: return "DL";
  }
  return "?";
}

std::vector<std::string> orientation_in_legs(Orientation o) {
  switch (o) {
    case Orientation::UR: return {kLeft, kDown};
    case Orientation::UL: return {kRight, kDown};
    case Orientation::DR: return {kLeft, kUp};
    case Orientation::DL: return {kRight, kUp};
  }
  return {};
}

std::vector<std::string> orientation_out_legs(Orientation o) {
  switch (o) {
    case Orientation::UR: return {kUp, kRight};
    case Orientation::UL: return {kUp, kLeft};
    case Orientation::DR: return {kDown, kRight};
    case Orientation::DL: return {kDown, kLeft};
  }
  return {};
}

PepsGrid uniform_grid(const PEPSTensor& A, int w, int h, Orientation o) {
  if (w < 1 || h < 1 || w > 3 || h > 3) throw Error(ErrorKind::SizeGuard, "grid must be between 1x1 and 3x3");
  PepsGrid g;
  g.w = w;
  g.h = h;
  g.sites.assign(w * h, A);
  g.orientation.assign(w * h, o);
  return g;
}

PepsGrid four_corner_grid(const PEPSTensor& A, int w, int h) {
  PepsGrid g = uniform_grid(A, w, h, Orientation::UR);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool right = x >= w / 2, up = y >= h / 2;
      g.orientation[y * w + x] = up ? (right ? Orientation::UR : Orientation::UL)
                                    : (right ? Orientation::DR : Orientation::DL);
    }
  return g;
}

std::vector<PepsBond> peps_bonds(const PepsGrid& g) {
  std::vector<PepsBond> out;
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x + 1 < g.w; ++x) out.push_back({y * g.w + x, y * g.w + x + 1, kRight, kLeft});
  for (int y = 0; y + 1 < g.h; ++y)
    for (int x = 0; x < g.w; ++x) out.push_back({y * g.w + x, (y + 1) * g.w + x, kUp, kDown});
  return out;
}

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

struct Receive {
  int bond;
  std::string leg;
};

// Routing shared by the numeric and index-level feedback.
struct PepsPlan {
  std::vector<PepsBond> bonds;
  std::vector<int> receiver;  // per bond; -1 when both sides push outwards
  std::vector<int> order;
  std::vector<std::vector<Receive>> receives;
  std::vector<std::map<std::string, int>> bond_of;  // per site, leg -> bond
  std::vector<std::vector<PushTable>> tables;
  // choice[site][leg][g] = index into tables[site], -1 if stuck
  std::vector<std::map<std::string, std::vector<int>>> choice;
  const MFBasis* basis = nullptr;
  int id = 0;
};

PepsPlan make_plan(const PepsGrid& g) {
  const int n = g.w * g.h;
  if (static_cast<int>(g.sites.size()) != n || static_cast<int>(g.orientation.size()) != n)
    throw Error(ErrorKind::DimensionMismatch, "grid size does not match its site list");
  PepsPlan p;
  p.basis = g.sites.front().basis.get();
  if (!p.basis->table) throw Error(ErrorKind::NotGroup, "protocol needs a group basis");
  p.id = p.basis->identity_index();
  for (const auto& s : g.sites) {
    s.validate();
    if (s.D() != p.basis->dim) throw Error(ErrorKind::DimensionMismatch, "sites differ in D");
  }
  p.bonds = peps_bonds(g);
  p.bond_of.resize(n);
  p.receives.resize(n);
  std::vector<std::vector<int>> next(n);
  std::vector<int> indeg(n, 0);
  for (int e = 0; e < static_cast<int>(p.bonds.size()); ++e) {
    const auto& bd = p.bonds[e];
    p.bond_of[bd.a][bd.leg_a] = e;
    p.bond_of[bd.b][bd.leg_b] = e;
    const bool in_a = contains(orientation_in_legs(g.orientation[bd.a]), bd.leg_a);
    const bool in_b = contains(orientation_in_legs(g.orientation[bd.b]), bd.leg_b);
    int r = -1;
    if (in_b) r = bd.b;
    else if (in_a) r = bd.a;
    p.receiver.push_back(r);
    if (r < 0) continue;
    const int giver = r == bd.b ? bd.a : bd.b;
    const std::string& gleg = r == bd.b ? bd.leg_a : bd.leg_b;
    if (contains(orientation_out_legs(g.orientation[giver]), gleg)) {
      next[giver].push_back(r);
      ++indeg[r];
    }
  }
  for (int s = 0; s < n; ++s)
    for (const auto& leg : peps_virtual_legs()) {
      auto it = p.bond_of[s].find(leg);
      if (it != p.bond_of[s].end() && p.receiver[it->second] == s) p.receives[s].push_back({it->second, leg});
    }
  std::queue<int> q;
  for (int s = 0; s < n; ++s)
    if (indeg[s] == 0) q.push(s);
  while (!q.empty()) {
    const int s = q.front();
    q.pop();
    p.order.push_back(s);
    for (int t : next[s])
      if (--indeg[t] == 0) q.push(t);
  }
  if (static_cast<int>(p.order.size()) != n) throw Error(ErrorKind::InvalidArgument, "orientations do not drain to the boundary");

  p.tables.resize(n);
  p.choice.resize(n);
  for (int s = 0; s < n; ++s) {
    const auto& site = g.sites[s];
    p.tables[s] = build_push_tables(*site.basis, site.rules, peps_mult, site.d());
    const auto outs = orientation_out_legs(g.orientation[s]);
    for (const auto& leg : orientation_in_legs(g.orientation[s])) {
      std::vector<int> ch(p.basis->size(), -1);
      for (int gi = 0; gi < p.basis->size(); ++gi)
        for (std::size_t t = 0; t < p.tables[s].size(); ++t) {
          const auto& tb = p.tables[s][t];
          if (tb.source() != leg || !tb.covers(gi)) continue;
          bool ok = true;
          for (const auto& l : tb.out_legs()) ok = ok && contains(outs, l);
          if (ok) {
            ch[gi] = static_cast<int>(t);
            break;
          }
        }
      p.choice[s][leg] = ch;
    }
  }
  return p;
}

struct PepsFeedback {
  std::vector<Mat> corrections;
  std::vector<std::map<std::string, Mat>> boundary;  // per site, leg -> operator applied on that leg
  bool corrected = false;
  std::string message;
};

PepsFeedback peps_feedback(const PepsGrid& g, const PepsPlan& p, const std::vector<int>& outcomes) {
  const int n = g.w * g.h;
  const MFBasis& b = *p.basis;
  const int D = b.dim;
  PepsFeedback f;
  f.boundary.resize(n);
  for (const auto& s : g.sites) f.corrections.push_back(Mat::Identity(s.d(), s.d()));
  std::vector<std::map<std::string, Mat>> acc(n);
  auto acc_of = [&](int s, const std::string& leg) -> Mat {
    auto it = acc[s].find(leg);
    return it == acc[s].end() ? Mat::Identity(D, D) : it->second;
  };
  auto bond_matrix = [&](int e) -> Mat {
    const auto& bd = p.bonds[e];
    return acc_of(bd.a, bd.leg_a) * b.elements.at(outcomes[e]).conjugate() * acc_of(bd.b, bd.leg_b);
  };
  for (int s : p.order) {
    Mat U = Mat::Identity(g.sites[s].d(), g.sites[s].d());
    for (const auto& rc : p.receives[s]) {
      const Mat B = bond_matrix(rc.bond);
      const auto fd = b.find(Mat(B.conjugate()));
      if (!fd) throw Error(ErrorKind::SymmetryFailure, "bond product left the basis");
      if (fd->first == p.id) continue;
      const int t = p.choice[s].at(rc.leg)[fd->first];
      if (t < 0) {
        f.message = "defect " + b.labels[fd->first] + " stuck at site " + std::to_string(s) + " leg " + rc.leg;
        return f;
      }
      const auto& e = *p.tables[s][t].entry(fd->first);
      U = U * e.u;
      for (const auto& [leg, h] : e.outs) {
        if (h == p.id) continue;
        const Mat O2 = b.elements.at(h).conjugate();
        const Mat X = acc_of(s, leg);
        acc[s][leg] = peps_mult(leg) == Mult::Right ? Mat(O2 * X) : Mat(X * O2);
      }
    }
    f.corrections[s] = U.adjoint();
  }
  for (int e = 0; e < static_cast<int>(p.bonds.size()); ++e) {
    if (p.receiver[e] >= 0) continue;
    if (linalg::proportional_residual(bond_matrix(e), Mat::Identity(D, D)) > 1e-9) {
      f.message = "outward defects meet on bond " + std::to_string(e) + " and do not cancel";
      return f;
    }
  }
  for (int s = 0; s < n; ++s)
    for (const auto& [leg, X] : acc[s])
      if (!p.bond_of[s].count(leg))
        f.boundary[s][leg] = linalg::inverse(peps_mult(leg) == Mult::Right ? Mat(X.transpose()) : X);
  f.corrected = true;
  return f;
}

std::string site_leg(int s, const std::string& leg) { return "s" + std::to_string(s) + leg; }

std::vector<DenseTensor> layer_sites(const PepsGrid& g, const PepsPlan& p, const std::vector<DenseTensor>& ket,
                                     const std::vector<DenseTensor>& bra) {
  std::vector<DenseTensor> out;
  for (int s = 0; s < g.w * g.h; ++s) {
    std::vector<std::pair<std::string, std::string>> kmap{{kPhys, idx("p", s)}}, bmap{{kPhys, idx("p", s)}};
    for (const auto& leg : peps_virtual_legs()) {
      auto it = p.bond_of[s].find(leg);
      if (it == p.bond_of[s].end()) {
        kmap.emplace_back(leg, site_leg(s, leg));
        bmap.emplace_back(leg, site_leg(s, leg));
      } else {
        const std::string side = p.bonds[it->second].a == s ? "a" : "b";
        kmap.emplace_back(leg, idx("k", it->second) + side);
        bmap.emplace_back(leg, idx("b", it->second) + side);
      }
    }
    const DenseTensor k = ket[s].relabeled(kmap), br = bra[s].conj().relabeled(bmap);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& l : k.legs())
      if (br.has_leg(l)) pairs.emplace_back(l, l);
    out.push_back(contract(k, br, pairs));
  }
  return out;
}

// Bond tensor ket[a,b] conj(bra[a',b']).
DenseTensor product_bond(int e, const Mat& ket, const Mat& bra) {
  const int D = static_cast<int>(ket.rows());
  DenseTensor t({idx("k", e) + "a", idx("k", e) + "b", idx("b", e) + "a", idx("b", e) + "b"}, {D, D, D, D});
  for (int a = 0; a < D; ++a)
    for (int c = 0; c < D; ++c)
      for (int a2 = 0; a2 < D; ++a2)
        for (int c2 = 0; c2 < D; ++c2) t.at({a, c, a2, c2}) = ket(a, c) * std::conj(bra(a2, c2));
  return t;
}

// Unmeasured bond: each ket leg traced against its own bra leg.
DenseTensor open_bond(int e, int D) {
  DenseTensor t({idx("k", e) + "a", idx("k", e) + "b", idx("b", e) + "a", idx("b", e) + "b"}, {D, D, D, D});
  for (int a = 0; a < D; ++a)
    for (int c = 0; c < D; ++c) t.at({a, c, a, c}) = 1.0;
  return t;
}

cplx scalar(const DenseTensor& t) {
  if (t.size() != 1) throw Error(ErrorKind::DimensionMismatch, "network did not close");
  return t.data()[0];
}

std::vector<DenseTensor> corrected_sites(const PepsGrid& g, const PepsFeedback& f) {
  std::vector<DenseTensor> out;
  for (int s = 0; s < g.w * g.h; ++s) {
    DenseTensor t = apply_on_leg(g.sites[s].tensor, kPhys, f.corrections[s]);
    for (const auto& [leg, op] : f.boundary[s]) t = apply_on_leg(t, leg, op);
    out.push_back(std::move(t));
  }
  return out;
}

double peps_fidelity(const PepsGrid& g, const PepsPlan& p, const PepsFeedback& f, const std::vector<int>& outcomes) {
  const int D = p.basis->dim;
  const Mat I = Mat::Identity(D, D);
  std::vector<DenseTensor> target;
  for (const auto& s : g.sites) target.push_back(s.tensor);
  const auto fin = corrected_sites(g, f);
  auto overlap = [&](const std::vector<DenseTensor>& ket, bool ket_measured, const std::vector<DenseTensor>& bra,
                     bool bra_measured) {
    auto net = layer_sites(g, p, ket, bra);
    for (int e = 0; e < static_cast<int>(p.bonds.size()); ++e) {
      const Mat W = measured_bond(*p.basis, outcomes[e]);
      net.push_back(product_bond(e, ket_measured ? W : I, bra_measured ? W : I));
    }
    return scalar(contract_network(net));
  };
  const cplx tf = overlap(fin, true, target, false);
  const double ff = std::real(overlap(fin, true, fin, true));
  const double tt = std::real(overlap(target, false, target, false));
  return std::norm(tf) / (ff * tt);
}

}  // namespace

ProtocolRun peps_run_with_outcomes(const PepsGrid& g, const std::vector<int>& outcomes, double tol) {
  const PepsPlan p = make_plan(g);
  if (outcomes.size() != p.bonds.size()) throw Error(ErrorKind::DimensionMismatch, "wrong number of outcomes");
  const auto f = peps_feedback(g, p, outcomes);
  ProtocolRun run;
  run.outcomes = outcomes;
  run.corrections = f.corrections;
  run.corrected = f.corrected;
  run.message = f.message;
  run.fidelity = peps_fidelity(g, p, f, outcomes);
  run.success = run.corrected && run.fidelity > 1 - tol;
  return run;
}

ProtocolRun run_peps_protocol(const PepsGrid& g, std::uint64_t seed, double tol) {
  const PepsPlan p = make_plan(g);
  const int D = p.basis->dim;
  std::vector<DenseTensor> sites;
  for (const auto& s : g.sites) sites.push_back(s.tensor);
  const auto E = layer_sites(g, p, sites, sites);
  std::mt19937_64 rng(seed);
  std::vector<int> outcomes;
  std::vector<double> probs;
  const int nb = static_cast<int>(p.bonds.size());
  for (int e = 0; e < nb; ++e) {
    std::vector<double> w;
    for (int i = 0; i < p.basis->size(); ++i) {
      auto net = E;
      for (int k = 0; k < nb; ++k) {
        if (k < e) {
          const Mat W = measured_bond(*p.basis, outcomes[k]);
          net.push_back(product_bond(k, W, W));
        } else if (k == e) {
          const Mat W = measured_bond(*p.basis, i);
          net.push_back(product_bond(k, W, W));
        } else {
          net.push_back(open_bond(k, D));
        }
      }
      w.push_back(std::max(0.0, std::real(scalar(contract_network(net)))));
    }
    const int pick = sample_index(w, rng);
    double total = 0;
    for (double x : w) total += x;
    outcomes.push_back(pick);
    probs.push_back(w[pick] / total);
  }
  ProtocolRun run = peps_run_with_outcomes(g, outcomes, tol);
  run.seed = seed;
  run.outcome_probabilities = probs;
  return run;
}

PepsEnumeration enumerate_peps_outcomes(const PepsGrid& g) {
  const PepsPlan p = make_plan(g);
  const MFBasis& b = *p.basis;
  const auto& gt = b.group();
  const int m = b.size();
  const int nb = static_cast<int>(p.bonds.size());
  const double total = std::pow(static_cast<double>(m), nb);
  if (total > 16777216.0) throw Error(ErrorKind::SizeGuard, "more than 2^24 outcome tuples");
  const int n = g.w * g.h;
  const int nlegs = 4;
  auto slot = [](const std::string& leg) {
    const auto& legs = peps_virtual_legs();
    return static_cast<int>(std::find(legs.begin(), legs.end(), leg) - legs.begin());
  };
  // Flattened routing tables.
  struct Recv {
    int site, bond, a_slot, b_slot, a, b, leg;
  };
  std::vector<std::vector<Recv>> recv(n);
  for (int s : p.order)
    for (const auto& rc : p.receives[s]) {
      const auto& bd = p.bonds[rc.bond];
      recv[s].push_back({s, rc.bond, slot(bd.leg_a), slot(bd.leg_b), bd.a, bd.b, slot(rc.leg)});
    }
  // outs_of[s][leg][g] -> list of (slot, h); empty list with stuck flag
  std::vector<std::vector<std::vector<std::vector<std::pair<int, int>>>>> outs_of(
      n, std::vector<std::vector<std::vector<std::pair<int, int>>>>(nlegs));
  std::vector<std::vector<std::vector<char>>> stuck(n, std::vector<std::vector<char>>(nlegs, std::vector<char>(m, 1)));
  for (int s = 0; s < n; ++s)
    for (const auto& [leg, ch] : p.choice[s]) {
      const int ls = slot(leg);
      outs_of[s][ls].resize(m);
      for (int gi = 0; gi < m; ++gi) {
        if (ch[gi] < 0) continue;
        stuck[s][ls][gi] = 0;
        for (const auto& [ol, h] : p.tables[s][ch[gi]].entry(gi)->outs) outs_of[s][ls][gi].emplace_back(slot(ol), h);
      }
    }
  std::vector<int> meet;  // bonds where both sides push outwards
  for (int e = 0; e < nb; ++e)
    if (p.receiver[e] < 0) meet.push_back(e);

  PepsEnumeration rep;
  rep.tuples = static_cast<std::uint64_t>(total);
  std::vector<int> out(nb, 0);
  std::vector<int> acc(static_cast<std::size_t>(n) * nlegs);
  for (std::uint64_t t = 0; t < rep.tuples; ++t) {
    std::fill(acc.begin(), acc.end(), p.id);
    bool ok = true;
    std::string why;
    for (int s : p.order) {
      for (const auto& r : recv[s]) {
        const int gi = gt.prod(gt.prod(acc[r.a * nlegs + r.a_slot], out[r.bond]), acc[r.b * nlegs + r.b_slot]);
        if (gi == p.id) continue;
        if (stuck[s][r.leg][gi]) {
          ok = false;
          if (rep.first_failure.empty()) why = "defect " + b.labels[gi] + " stuck at site " + std::to_string(s);
          break;
        }
        for (const auto& [ls, h] : outs_of[s][r.leg][gi]) {
          int& x = acc[s * nlegs + ls];
          x = peps_mult(peps_virtual_legs()[ls]) == Mult::Right ? gt.prod(h, x) : gt.prod(x, h);
        }
      }
      if (!ok) break;
    }
    if (ok)
      for (int e : meet) {
        const auto& bd = p.bonds[e];
        const int gi = gt.prod(gt.prod(acc[bd.a * nlegs + slot(bd.leg_a)], out[e]), acc[bd.b * nlegs + slot(bd.leg_b)]);
        if (gi != p.id) {
          ok = false;
          if (rep.first_failure.empty()) why = "outward defects do not cancel on bond " + std::to_string(e);
          break;
        }
      }
    if (ok) ++rep.corrected;
    else if (rep.first_failure.empty()) rep.first_failure = why;
    for (int k = nb - 1; k >= 0; --k) {
      if (++out[k] < m) break;
      out[k] = 0;
    }
  }
  rep.all_corrected = rep.corrected == rep.tuples;
  return rep;
}

}  // namespace mftn
