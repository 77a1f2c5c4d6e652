// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mftn/cli.hpp"
#include "mftn/fixtures.hpp"
#include "mftn/io.hpp"
#include "mftn/mpo.hpp"
#include "mftn/protocol.hpp"
#include "util.hpp"

using namespace mftn;
namespace fx = mftn::fixtures;

namespace {

constexpr double kOverlapTol = 1e-9;     // 1: projector overlap >= 1 - this
constexpr double kAkltExact = 1e-10;     // 2: V^dag U V vs (P (x) P) on the triplet span
constexpr double kReconTol = 1e-9;       // 2, 9: reconstruction / conjugation residuals
constexpr double kCanonicalTol = 1e-8;   // 3
constexpr double kGhzTol = 1e-10;        // 4
constexpr double kEvalTol = 1e-12;       // 5: analytic e values
constexpr double kBruteRel = 1e-8;       // 5: brute vs analytic, relative
constexpr double kFidelityTol = 1e-9;    // 7, 8
constexpr double kMpoTol = 1e-8;         // 10

struct Outcome {
  bool pass = true;
  std::string detail;
  double limit_s = 0;  // 0: no runtime bound
};

Mat flat(const DenseTensor& t) {
  Mat v(t.size(), 1);
  for (std::size_t i = 0; i < t.size(); ++i) v(static_cast<long>(i), 0) = t.data()[i];
  return v;
}

Mat span_of(const std::vector<DenseTensor>& ts) {
  Mat m(ts.front().size(), static_cast<long>(ts.size()));
  for (std::size_t k = 0; k < ts.size(); ++k) m.col(static_cast<long>(k)) = flat(ts[k]);
  return m;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// ---- 1 ----
Outcome c1() {
  Outcome o;
  double worst = 0;
  const std::vector<std::pair<std::string, std::vector<DenseTensor>>> sets = {
      {"ex1.json", {fx::copy_family(0.0).tensor, fx::copy_family(1.0).tensor}},
      {"ex2.json", {fx::bend_family(0.0).tensor, fx::bend_family(1.0).tensor}}};
  for (const auto& [file, closed] : sets) {
    std::ostringstream out, err;
    const int code = cli::dispatch({"solve-family", "--basis", "WH:2", "--constraints", std::string(MFTN_DATA_DIR) + "/" + file},
                                   out, err);
    const auto rep = io::Json::parse(out.str());
    const int dim = rep["results"]["dimension"].get<int>();
    std::vector<DenseTensor> fam;
    for (const auto& t : rep["results"]["tensors"]) fam.push_back(io::tensor_from_json(t));
    o.pass = o.pass && code == 0 && dim == 2;
    const Mat P = testutil::span_projector(span_of(fam));
    for (const auto& t : closed) {
      const Mat v = flat(t);
      const double ov = (v.adjoint() * P * v)(0, 0).real() / v.squaredNorm();
      worst = std::max(worst, 1 - ov);
    }
    o.detail += file + " dim " + std::to_string(dim) + "; ";
  }
  o.pass = o.pass && worst <= kOverlapTol;
  o.detail += "min overlap 1-" + fmt("%.2e", worst);
  o.limit_s = 1;
  return o;
}

// ---- 2 ----
Outcome c2() {
  Outcome o;
  const MPSTensor A = fx::aklt();
  const auto s = split_polar(A);
  const auto cc = correction_consistency(A, s);
  Vec t00 = Vec::Zero(4), t11 = Vec::Zero(4), T = Vec::Zero(4), S = Vec::Zero(4);
  t00(0) = 1;
  t11(3) = 1;
  T(1) = T(2) = 1 / std::sqrt(2.0);
  S(1) = 1 / std::sqrt(2.0);
  S(2) = -1 / std::sqrt(2.0);
  double on_triplet = 0, singlet = 1e300;
  for (char p : {'Z', 'X'}) {
    const Mat P = p == 'Z' ? fx::pauli_z() : fx::pauli_x();
    const Mat PP = testutil::kron_loops(P, P);
    const Mat lhs = s.V.adjoint() * fx::aklt_u(p) * s.V;
    for (const Vec& v : {t00, t11, T}) on_triplet = std::max(on_triplet, (lhs * v - PP * v).norm());
    // (P (x) P) R on the whole space
    on_triplet = std::max(on_triplet, (lhs - PP * s.R).norm());
    singlet = std::min(singlet, (lhs * S - PP * S).norm());
  }
  const auto f = clifford_magic_decompose(s, A);
  o.pass = cc.pass && on_triplet < kAkltExact && singlet > 0.5 && f.residual < kReconTol && !f.stabilizer &&
           !is_stabilizer_state(f.psi, 2, 2) && f.is_clifford;
  o.detail = "triplet residual " + fmt("%.2e", on_triplet) + ", singlet gap " + fmt("%.3f", singlet) +
             ", reconstruction " + fmt("%.2e", f.residual) + ", psi stabilizer count " +
             std::to_string(stabilizer_count(f.psi, 2, 2)) + "/16";
  o.limit_s = 5;
  return o;
}

// ---- 3 ----
Outcome c3() {
  Outcome o;
  std::mt19937_64 rng(3003);
  std::normal_distribution<double> g(0, 1);
  struct Set {
    BasisPtr b;
    std::vector<SymmetryConstraint> c;
    int d;
  };
  std::vector<Set> sets = {{fx::wh(2), fx::copy_family_constraints(), 2},
                           {fx::wh(2), fx::bend_family_constraints(), 2},
                           {fx::wh(2), fx::aklt().constraints, 3},
                           {fx::wh(2), fx::cluster().constraints, 2},
                           {fx::wh(2), fx::non_bijective().constraints, 2},
                           {fx::wh(2), spt_solution(fx::wh(2), fx::aklt_alpha()).constraints, 4},
                           {fx::wh(3), spt_solution(fx::wh(3), fx::ones_alpha(3)).constraints, 9}};
  int n = 0, failures = 0;
  double worst = 0;
  for (int t = 0; t < 120; ++t) {
    const Set& s = sets[std::uniform_int_distribution<int>(0, static_cast<int>(sets.size()) - 1)(rng)];
    // full fixture sets: a subset can lose irreducibility on the bond (Z alone fixes diagonals)
    const std::vector<SymmetryConstraint>& sub = s.c;
    const auto fam = solve_symmetry_family(*s.b, sub, s.d, s.b->dim);
    if (fam.dimension == 0) continue;
    DenseTensor T = fam.tensors[0].scaled(cplx(g(rng), g(rng)));
    for (int k = 1; k < fam.dimension; ++k) T = T + fam.tensors[k].scaled(cplx(g(rng), g(rng)));
    MPSTensor A;
    A.basis = s.b;
    A.tensor = T;
    A.constraints = sub;
    const auto r = canonical_form_check(A, kCanonicalTol);
    worst = std::max(worst, r.residual);
    failures += !(r.pass && r.residual < kCanonicalTol);
    ++n;
  }
  o.pass = n >= 100 && failures == 0;
  o.detail = std::to_string(n) + " members, " + std::to_string(failures) + " failures, worst residual " +
             fmt("%.2e", worst);
  return o;
}

// ---- 4 ----
Outcome c4() {
  Outcome o;
  for (int D : {2, 3}) {
    const MPSTensor A = spt_solution(fx::wh(D), fx::ghz_alpha(D));
    const Mat M = mps_matrix(A.tensor);
    Eigen::JacobiSVD<Mat> svd(M);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-9 * svd.singularValues()(0);
    Mat delta = Mat::Zero(D * D, D * D);
    for (int a = 0; a < D; ++a) delta(a * D + a, a * D + a) = 1.0;
    const double res = testutil::prop_residual(M, delta);
    o.pass = o.pass && rank == D && res < kGhzTol;
    o.detail += "D=" + std::to_string(D) + " rank " + std::to_string(rank) + " delta residual " + fmt("%.1e", res) + "; ";
  }
  return o;
}

// ---- 5 ----
Outcome c5() {
  Outcome o;
  double worst_e = 0, worst_b = 0;
  std::string degs;
  for (double a : {0.0, 0.3, 0.7, 1.0}) {
    const auto s = transfer_spectrum_analytic(interpolated_alpha(a), *fx::wh(2), 2);
    const double want[4] = {2 + 2 * a * a, 2 + 2 * a * a, 4 * a, 4 * a};
    for (int i = 0; i < 4; ++i) worst_e = std::max(worst_e, std::abs(s.e[i] - want[i]));
    const int expect_deg = a < 1 ? 2 : 4;
    o.pass = o.pass && s.degeneracy_of_max == expect_deg;
    for (int L : {2, 3}) {
      const auto an = transfer_spectrum_analytic(interpolated_alpha(a), *fx::wh(2), L);
      auto brute = transfer_matrix_brute(fx::interpolated(a), L);
      std::vector<double> bm, am;
      const double top = an.sorted_magnitudes.front();
      for (auto x : brute)
        if (std::abs(x) > kBruteRel * top) bm.push_back(std::abs(x));
      for (double x : an.sorted_magnitudes)
        if (x > kBruteRel * top) am.push_back(x);
      std::sort(bm.rbegin(), bm.rend());
      if (bm.size() != am.size()) {
        o.pass = false;
        worst_b = 1;
      } else {
        for (std::size_t i = 0; i < am.size(); ++i) worst_b = std::max(worst_b, std::abs(bm[i] - am[i]) / top);
      }
      const int bdeg = degeneracy_of_max(brute);
      o.pass = o.pass && bdeg == expect_deg;
    }
    degs += std::to_string(s.degeneracy_of_max) + " ";
  }
  o.pass = o.pass && worst_e < kEvalTol && worst_b < kBruteRel;
  o.detail = "e residual " + fmt("%.1e", worst_e) + ", brute rel " + fmt("%.1e", worst_b) + ", degeneracy at 0/0.3/0.7/1: " + degs;
  o.limit_s = 30;
  return o;
}

// ---- 6 ----
Outcome c6() {
  Outcome o;
  std::mt19937_64 rng(606);
  std::normal_distribution<double> g(0, 1);
  struct Case {
    std::string name;
    PEPSTensor A;
    TopoSymmetrySpec spec;
  };
  std::vector<Case> cases = {{"toric2", fx::toric(2), fx::x_subgroup(2)},
                             {"toric3", fx::toric(3), fx::x_subgroup(3)},
                             {"charged2", fx::charged(2, 1), fx::x_subgroup(2, 1)},
                             {"charged3", fx::charged(3, 2), fx::x_subgroup(3, 2)},
                             {"interp0.3", fx::interpolated(0.3), fx::x_subgroup(2)},
                             {"equal_sum2", fx::equal_sum(2), {fx::wh(2), {0, 1, 2, 3}, 0.0}}};
  for (int D : {2, 3})
    for (int t = 0; t < 3; ++t) {
      std::vector<cplx> alpha(D * D);
      std::vector<cplx> base(D);
      for (auto& x : base) x = cplx(g(rng), g(rng));
      for (int i = 0; i < D * D; ++i) alpha[i] = base[i / D];
      cases.push_back({"randomX" + std::to_string(D), topo_solution(fx::wh(D), alpha), fx::x_subgroup(D)});
    }
  int deficient = 0;
  for (const auto& c : cases) {
    const bool sym = check_topo_symmetry(c.A, c.spec).pass;
    const auto r = injectivity_check(c.A, c.spec);
    const bool ok = sym && !r.injective && r.pass;
    deficient += ok;
    if (!ok) o.detail += c.name + " failed; ";
  }
  int full = 0;
  for (int D : {2, 3}) {
    const auto r = injectivity_check(fx::bell_pairs(D), std::nullopt);
    full += r.injective && r.rank == r.full;
  }
  o.pass = deficient == static_cast<int>(cases.size()) && full == 2;
  o.detail += std::to_string(deficient) + "/" + std::to_string(cases.size()) + " rank-deficient, identity tensor full rank " +
              std::to_string(full) + "/2";
  return o;
}

// ---- 7 ----
Outcome c7() {
  Outcome o;
  const std::vector<MPSTensor> open6(6, fx::aklt());
  int ok = 0;
  double worst = 1;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto r = run_mps_protocol(open6, Boundary::Open, seed);
    ok += r.success && r.fidelity >= 1 - kFidelityTol;
    worst = std::min(worst, r.fidelity);
  }
  const auto e_open = enumerate_outcomes(std::vector<MPSTensor>(4, fx::aklt()), Boundary::Open);
  const auto e_per = enumerate_outcomes(std::vector<MPSTensor>(3, fx::aklt()), Boundary::Periodic);
  const int trials = 4000;
  int mc = 0;
  for (int t = 0; t < trials; ++t) mc += run_mps_protocol(std::vector<MPSTensor>(3, fx::aklt()), Boundary::Periodic, 10000 + t).success;
  const double rate = double(mc) / trials;
  const double p = e_per.success_probability;
  const double sig = std::sqrt(p * (1 - p) / trials);
  const double sig_q = std::sqrt(0.25 * 0.75 / trials);
  const bool fraction_exact = e_per.corrected * 16 == e_per.tuples * 4;
  o.pass = ok == 500 && e_open.corrected == e_open.tuples && std::abs(e_open.success_probability - 1) < 1e-12 &&
           fraction_exact && std::abs(rate - p) < 3 * sig;
  o.detail = "open 500 seeds " + std::to_string(ok) + "/500 (min fidelity 1-" + fmt("%.1e", 1 - worst) +
             "), open 3-bond probability " + fmt("%.15g", e_open.success_probability) + "; periodic 3-bond tuples " +
             std::to_string(e_per.corrected) + "/" + std::to_string(e_per.tuples) + " = " + fmt("%.4f", e_per.corrected_fraction) +
             ", Born-weighted " + fmt("%.6f", p) + " (7/27 = " + fmt("%.6f", 7.0 / 27) + "), MC " + fmt("%.4f", rate) +
             " over " + std::to_string(trials) + " (|MC-Born| " + fmt("%.2f", std::abs(rate - p) / sig) + " sigma, |MC-1/4| " +
             fmt("%.2f", std::abs(rate - 0.25) / sig_q) + " sigma)";
  o.limit_s = 60;
  return o;
}

// ---- 8 ----
Outcome c8() {
  Outcome o;
  const PepsGrid g2 = uniform_grid(fx::toric(2), 2, 2, Orientation::UR);
  const PepsGrid g3 = four_corner_grid(fx::toric(2), 3, 3);
  const auto e2 = enumerate_peps_outcomes(g2);
  const auto e3 = enumerate_peps_outcomes(g3);
  double worst = 1;
  int ok = 0, runs = 0;
  for (const PepsGrid* g : {&g2, &g3})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = run_peps_protocol(*g, seed);
      ok += r.success && r.fidelity >= 1 - kFidelityTol;
      worst = std::min(worst, r.fidelity);
      ++runs;
    }
  o.pass = e2.all_corrected && e3.all_corrected && ok == runs;
  o.detail = "2x2 " + std::to_string(e2.corrected) + "/" + std::to_string(e2.tuples) + ", 3x3 four-corner " +
             std::to_string(e3.corrected) + "/" + std::to_string(e3.tuples) + " tuples correctable; sampled " +
             std::to_string(ok) + "/" + std::to_string(runs) + " min fidelity 1-" + fmt("%.1e", 1 - worst);
  return o;
}

// ---- 9 ----
Mat oracle_matrix(const PauliVector& p) {
  Mat m = Mat::Identity(1, 1);
  for (int j = 0; j < p.n; ++j)
    m = testutil::kron_loops(m, testutil::mpow(testutil::X(p.d), p.v[j]) * testutil::mpow(testutil::Z(p.d), p.w[j]));
  return std::polar(1.0, M_PI * p.phase_exp / p.d) * m;
}

double synth_residual(const PartialCliffordMap& m, bool* clifford) {
  const Mat U = synthesize_clifford(m);
  *clifford = is_clifford(U, m.n, m.d);
  double r = 0;
  for (const auto& im : m.images)
    r = std::max(r, (U * oracle_matrix(im.source) * U.adjoint() - oracle_matrix(im.target)).norm());
  return r;
}

Outcome c9() {
  Outcome o;
  std::mt19937_64 rng(909);
  double worst = 0;
  int good = 0, total = 0;
  for (auto [d, n] : {std::pair{2, 3}, std::pair{3, 2}}) {
    std::uniform_int_distribution<int> e(0, d - 1), ph(0, 2 * d - 1), sl(0, n - 1);
    auto rand_pauli = [&] {
      PauliVector p = PauliVector::identity(n, d);
      for (int j = 0; j < n; ++j) {
        p.v[j] = e(rng);
        p.w[j] = e(rng);
      }
      p.phase_exp = ph(rng);
      return p;
    };
    int made = 0;
    while (made < 25) {
      PartialCliffordMap m;
      m.n = n;
      m.d = d;
      const int slot = sl(rng);
      m.add(slot, 'X', rand_pauli());
      m.add(slot, 'Z', rand_pauli());
      if (!check_admissible(m).pass()) continue;
      ++made;
      bool cl = false;
      const double r = synth_residual(m, &cl);
      worst = std::max(worst, r);
      good += cl && r < kReconTol;
      ++total;
    }
  }
  PartialCliffordMap ghz;
  ghz.n = 3;
  ghz.d = 2;
  PauliVector xxx = PauliVector::identity(3, 2), zzz = PauliVector::identity(3, 2);
  xxx.v = {1, 1, 1};
  zzz.w = {1, 1, 1};
  ghz.add(0, 'X', xxx);
  ghz.add(0, 'Z', zzz);
  bool cl = false;
  const double rg = synth_residual(ghz, &cl);
  o.pass = good == total && cl && rg < kReconTol;
  o.detail = std::to_string(good) + "/" + std::to_string(total) + " random maps, worst residual " + fmt("%.1e", worst) +
             "; XXX/ZZZ residual " + fmt("%.1e", rg);
  return o;
}

// ---- 10 ----
Outcome c10() {
  Outcome o;
  std::mt19937_64 rng(1010);
  const MPOTensor O = pauli_slice_mpo(fx::wh(2));
  double worst_u = 0, worst_f = 1;
  int good = 0;
  for (int t = 0; t < 20; ++t) {
    const Mat Ut = random_unitary(O.d(), rng);
    const MPOTensor O2 = apply_input_unitary(O, Ut);
    const bool sl = mpo_slices(O2).pass;
    const bool pu = build_purifying_unitary(O2).pass;
    double ru = 1;
    try {
      ru = testutil::prop_residual(relative_local_unitary(O, O2).U_tilde, Ut);
    } catch (const Error&) {
    }
    const std::vector<MPOTensor> chain(3, O2);
    const DenseTensor in = random_mpo_input(3, O.d(), O.D(), rng);
    const auto run = apply_mpo_via_protocol(chain, in, 7000 + t);
    worst_u = std::max(worst_u, ru);
    worst_f = std::min(worst_f, run.run.fidelity);
    good += sl && pu && ru < kMpoTol && run.run.corrected && run.run.fidelity >= 1 - kMpoTol;
  }
  o.pass = good == 20;
  o.detail = std::to_string(good) + "/20 instances, worst U_tilde residual " + fmt("%.1e", worst_u) +
             ", min fidelity 1-" + fmt("%.1e", 1 - worst_f);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"solver families", c1},        {"AKLT structure", c2},     {"canonical form property", c3},
      {"GHZ rank and support", c4},   {"transfer spectra", c5},   {"non-injectivity", c6},
      {"MPS protocol", c7},           {"PEPS protocol", c8},      {"Clifford synthesis", c9},
      {"MPO round trip and apply", c10}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool within = o.limit_s == 0 || secs < o.limit_s;
    const bool pass = o.pass && within;
    failed += !pass;
    std::printf("%s %2zu %-26s %8.2fs%s  %s\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.limit_s > 0 ? (within ? "" : " (over time limit)") : "", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
