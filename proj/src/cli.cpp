#include "mftn/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "mftn/io.hpp"
#include "mftn/linalg.hpp"
#include "mftn/protocol.hpp"

namespace mftn::cli {

using io::Json;

namespace {

struct Options {
  std::string basis, constraints, alpha, chain, peps, mpo, mpo2, map, paulis, input, out;
  std::string boundary = "open", orientation = "UR", grid = "2x2", subgroup;
  int L = 0, sites = 0, trials = 1, k = 0;
  double phi = 0;
  std::uint64_t seed = 0;
  std::optional<double> tol;
  bool enumerate = false, brute = false;
  std::vector<std::string> positional;
};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void add(const std::string& s) {
    // Length prefix keeps ("ab", "c") and ("a", "bc") apart.
    const std::string len = std::to_string(s.size()) + ":";
    EVP_DigestUpdate(ctx_, len.data(), len.size());
    EVP_DigestUpdate(ctx_, s.data(), s.size());
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    EVP_DigestFinal_ex(ctx_, md, &n);
    std::ostringstream os;
    for (unsigned int i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
  }

 private:
  EVP_MD_CTX* ctx_;
};

struct Ctx {
  Options opt;
  double tol = kDefaultTol;
  Sha256 digest;
  Json checks = Json::array();
  Json results = Json::object();

  void check(const std::string& name, bool pass, double residual) {
    Json c;
    c["name"] = name;
    c["pass"] = pass;
    c["residual"] = residual;
    checks.push_back(c);
  }

  // File path, inline JSON, or (for bases) a bare spec string.
  Json arg_json(const std::string& flag, const std::string& value, bool allow_spec = false) {
    if (value.empty()) throw CLI::RequiredError(flag);
    if (std::filesystem::is_regular_file(value)) {
      std::ifstream f(value);
      std::stringstream ss;
      ss << f.rdbuf();
      digest.add(ss.str());
      try {
        return Json::parse(ss.str());
      } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::Malformed, "'" + value + "': " + e.what());
      }
    }
    try {
      return Json::parse(value);
    } catch (const Json::parse_error& e) {
      if (allow_spec) return Json(value);
      throw Error(ErrorKind::Malformed, flag + " is neither a readable file nor JSON: " + e.what());
    }
  }

  BasisPtr basis(bool required) {
    if (opt.basis.empty()) {
      if (required) throw CLI::RequiredError("--basis");
      return nullptr;
    }
    return io::basis_from_json(arg_json("--basis", opt.basis, true));
  }
};

Json labels_of(const MFBasis& b, const std::vector<int>& idx) {
  Json a = Json::array();
  for (int i : idx) a.push_back(b.labels[i]);
  return a;
}

Json doubles(const std::vector<double>& v) { return Json(v); }

double max_of(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, x);
  return m;
}

// ---- subcommands ----

void cmd_basis(Ctx& c) {
  const BasisPtr b = c.basis(true);
  const MFBasis& B = *b;
  c.results["dim"] = B.dim;
  c.results["size"] = B.size();
  c.results["labels"] = B.labels;
  c.results["weyl_heisenberg"] = B.weyl_heisenberg;
  const auto cocycle = check_group_closure(B);
  c.results["is_group"] = cocycle.has_value();
  if (cocycle) {
    Json rows = Json::array();
    for (int j = 0; j < B.size(); ++j) {
      std::vector<cplx> row;
      for (int k = 0; k < B.size(); ++k) row.push_back((*cocycle)(j, k));
      rows.push_back(io::complex_list(row));
    }
    c.results["cocycle"] = rows;
  }
  c.results["basis"] = io::basis_to_json(B);
  c.check("valid_basis", true, 0.0);
}

void cmd_solve_family(Ctx& c) {
  const io::ConstraintSet cs = io::constraints_from_json(c.arg_json("--constraints", c.opt.constraints), c.basis(false));
  const MFBasis& b = *cs.basis;
  const int D = b.dim;
  c.results["D"] = D;
  if (cs.has_unknown) {
    const int d = cs.d ? cs.d : D * D;
    const AlsResult r = solve_with_unknown_u(b, cs.constraints, d, D, c.tol);
    c.results["d"] = d;
    c.results["method"] = "alternating";
    c.results["iterations"] = r.iterations;
    c.results["residual"] = r.residual;
    c.results["tensor"] = io::tensor_to_json(r.tensor);
    c.results["constraints"] = io::constraints_to_json(b, r.constraints);
    c.check("als_converged", r.converged, r.residual);
    return;
  }
  const int d = cs.d;
  const FamilyResult f = solve_symmetry_family(b, cs.constraints, d, D, c.tol);
  c.results["d"] = d;
  c.results["method"] = "nullspace";
  c.results["dimension"] = f.dimension;
  Json ts = Json::array();
  double worst = 0;
  for (const auto& t : f.tensors) {
    ts.push_back(io::tensor_to_json(t));
    MPSTensor A{t, cs.basis, cs.constraints};
    worst = std::max(worst, check_mf_symmetry(A, c.tol).max_residual);
  }
  c.results["tensors"] = ts;
  const MapOrder mo = map_order(b, cs.constraints, false);
  c.results["map"] = {{"bijective", mo.bijective},
                      {"order", mo.order ? Json(*mo.order) : Json(nullptr)},
                      {"domain", labels_of(b, mo.domain)},
                      {"image", labels_of(b, mo.image)}};
  c.check("solution_exists", f.dimension > 0, 0.0);
  c.check("family_symmetry", worst <= c.tol, worst);
}

MPSTensor load_mps(Ctx& c) { return io::mps_from_json(c.arg_json("--chain", c.opt.chain), c.basis(false)); }

void cmd_check_mps(Ctx& c) {
  const MPSTensor A = load_mps(c);
  const SymmetryReport s = check_mf_symmetry(A, c.tol);
  const CanonicalReport k = canonical_form_check(A, c.tol);
  c.results["symmetry_residuals"] = doubles(s.residuals);
  c.results["canonical_constant"] = io::complex_to_json(k.constant);
  c.check("mf_symmetry", s.pass, s.max_residual);
  c.check("canonical_form", k.pass, k.residual);
}

void cmd_decompose_mps(Ctx& c) {
  const MPSTensor A = load_mps(c);
  const PolarSplit s = split_polar(A, c.tol);
  c.results["rank_q"] = s.rank_q;
  c.results["rank_v"] = s.rank_v;
  c.results["null_equal"] = s.null_equal;
  c.results["injective"] = s.injective;
  c.results["Q"] = io::matrix_to_json(s.Q);
  c.results["commutator_residuals"] = doubles(s.commutator_residuals);
  c.check("polar_split", s.pass, std::max(s.reconstruction_residual, max_of(s.commutator_residuals)));

  const CorrectionReport cr = correction_consistency(A, s, c.tol);
  c.results["correction_residuals"] = doubles(cr.residuals);
  c.results["null_discrepancy"] = doubles(cr.null_discrepancy);
  c.check("correction_consistency", cr.pass, max_of(cr.residuals));

  try {
    const CliffordMagicForm f = clifford_magic_decompose(s, A);
    c.results["clifford"] = {{"U_C", io::matrix_to_json(f.U_C)},
                             {"psi", io::complex_list(std::vector<cplx>(f.psi.data(), f.psi.data() + f.psi.size()))},
                             {"scale", f.scale},
                             {"is_clifford", f.is_clifford},
                             {"stabilizer", f.stabilizer}};
    c.check("clifford_magic", f.is_clifford && f.residual <= c.tol, f.residual);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Malformed) throw;
    c.results["clifford_error"] = e.what();
  }

  // Generic tensor routines on the physical-by-virtual matrix.
  const MatrixView mv{A.tensor, {kPhys}, {kLeft, kRight}};
  const PolarResult pr = polar_decompose(mv, c.tol);
  const Mat Vm = pr.V.matrix({kPhys}, {primed(kLeft), primed(kRight)});
  const Mat Qm = pr.Q.matrix({primed(kLeft), primed(kRight)}, {kLeft, kRight});
  const Mat M = mv.to_matrix();
  const double polar_res = (Vm * Qm - M).norm() / M.norm();
  c.check("polar_reconstruction", polar_res <= c.tol, polar_res);
  const EigResult eig = eig_hermitian(MatrixView{pr.Q, {primed(kLeft), primed(kRight)}, {kLeft, kRight}});
  c.results["q_eigenvalues"] = doubles(eig.values);
  const Mat P = pseudo_inverse(mv, c.tol).matrix({kLeft, kRight}, {kPhys});
  const double pinv_res = (M * P * M - M).norm() / M.norm();
  c.check("pseudo_inverse", pinv_res <= c.tol, pinv_res);
}

void cmd_spt(Ctx& c) {
  const BasisPtr b = c.basis(true);
  const auto alpha = io::complex_list_from_json(c.arg_json("--alpha", c.opt.alpha));
  const MPSTensor Q = spt_solution(b, alpha);
  const SymmetryReport s = check_mf_symmetry(Q, c.tol);
  const Mat M = mps_matrix(Q.tensor);
  c.results["physical_rank"] = linalg::numerical_rank(M, c.tol);
  c.results["tensor"] = io::tensor_to_json(Q.tensor);
  c.check("mf_symmetry", s.pass, s.max_residual);
}

void cmd_block(Ctx& c) {
  const MPSTensor A = load_mps(c);
  const int k = c.opt.k ? c.opt.k : (c.opt.sites ? c.opt.sites : 2);
  const MPSTensor B = block(A, k);
  const SymmetryReport s = check_mf_symmetry(B, c.tol);
  c.results["k"] = k;
  c.results["d"] = B.d();
  c.results["constraints"] = static_cast<int>(B.constraints.size());
  c.results["pushable_image"] = labels_of(*A.basis, pushable_image(A, k));
  c.results["tensor"] = io::tensor_to_json(B.tensor);
  c.check("mf_symmetry", s.pass, s.max_residual);
}

void cmd_expect(Ctx& c) {
  const Json pj = c.arg_json("--paulis", c.opt.paulis);
  if (!pj.is_array()) throw Error(ErrorKind::Malformed, "--paulis must be an array of pauli objects");
  std::vector<PauliVector> paulis;
  for (const auto& p : pj) paulis.push_back(io::pauli_from_json(p));
  MPSTensor A;
  if (!c.opt.chain.empty()) {
    A = load_mps(c);
  } else {
    A = spt_solution(c.basis(true), io::complex_list_from_json(c.arg_json("--alpha", c.opt.alpha)));
  }
  const int n = c.opt.sites ? c.opt.sites : static_cast<int>(paulis.size());
  if (static_cast<int>(paulis.size()) != n) throw Error(ErrorKind::Malformed, "need one pauli per site");
  const std::vector<MPSTensor> family(n, A);
  const Boundary bc = parse_boundary(c.opt.boundary);
  const cplx v = pauli_expectation(family, paulis, bc);
  const cplx dense = pauli_expectation_dense(family, paulis, bc);
  const double res = std::abs(v - dense) / std::max(1.0, std::abs(dense));
  c.results["value"] = io::complex_to_json(v);
  c.results["dense_value"] = io::complex_to_json(dense);
  c.check("transfer_matches_dense", res <= c.tol, res);
}

PEPSTensor load_peps(Ctx& c, std::optional<TopoSymmetrySpec>* sym = nullptr) {
  const Json j = c.arg_json("--peps", c.opt.peps);
  if (sym && j.is_object() && j.contains("alpha")) *sym = io::topo_from_json(j, c.basis(false)).symmetry;
  return io::peps_from_json(j, c.basis(false));
}

void cmd_check_peps(Ctx& c) {
  std::optional<TopoSymmetrySpec> sym;
  const PEPSTensor A = load_peps(c, &sym);
  const SymmetryReport s = check_peps_mf_symmetry(A, c.tol);
  c.check("mf_symmetry", s.pass, s.max_residual);
  const IsometryReport iso = peps_isometry_check(A, c.tol);
  c.results["isometry_constant"] = io::complex_to_json(iso.constant);
  c.check("isometry", iso.pass, iso.residual);
  const PepsPolarReport p = peps_split_polar(A, c.tol);
  c.results["rank_q"] = p.rank_q;
  c.results["null_equal"] = p.null_equal;
  c.check("polar_split", p.polar_pass, std::max(p.reconstruction_residual, max_of(p.commutator_residuals)));
  if (p.clifford) {
    c.results["clifford"] = {{"is_clifford", p.clifford->is_clifford},
                             {"stabilizer", p.clifford->stabilizer},
                             {"scale", p.clifford->scale}};
    c.check("clifford_form", p.clifford->is_clifford && p.clifford->residual <= c.tol, p.clifford->residual);
  } else {
    c.results["clifford_error"] = p.clifford_error;
  }
  const InjectivityReport inj = injectivity_check(A, sym, c.tol);
  c.results["injectivity"] = {{"rank", inj.rank}, {"full", inj.full}, {"injective", inj.injective}};
  if (sym) c.check("injectivity_signature", inj.pass, 0.0);
}

io::TopoInput load_topo(Ctx& c) {
  io::TopoInput t;
  if (!c.opt.peps.empty()) {
    t = io::topo_from_json(c.arg_json("--peps", c.opt.peps), c.basis(false));
  } else {
    t.basis = c.basis(true);
    t.alpha = io::complex_list_from_json(c.arg_json("--alpha", c.opt.alpha));
    if (static_cast<int>(t.alpha.size()) != t.basis->size())
      throw Error(ErrorKind::Malformed, "alpha length does not match the basis");
  }
  if (!c.opt.subgroup.empty()) {
    TopoSymmetrySpec s;
    s.basis = t.basis;
    std::stringstream ss(c.opt.subgroup);
    std::string lab;
    while (std::getline(ss, lab, ',')) s.subgroup.push_back(io::label_index(*t.basis, Json(lab)));
    s.phi = c.opt.phi;
    t.symmetry = s;
  }
  if (c.opt.L) t.L = c.opt.L;
  return t;
}

void cmd_topo_solve(Ctx& c) {
  const io::TopoInput t = load_topo(c);
  const PEPSTensor A = topo_solution(t.basis, t.alpha);
  const SymmetryReport s = check_peps_mf_symmetry(A, c.tol);
  c.results["tensor"] = io::tensor_to_json(A.tensor);
  c.results["rules"] = static_cast<int>(A.rules.size());
  const auto back = topo_alpha(A);
  double res = 0;
  for (std::size_t i = 0; i < back.size(); ++i) res = std::max(res, std::abs(back[i] - t.alpha[i]));
  c.results["alpha"] = io::complex_list(back);
  c.check("mf_symmetry", s.pass, s.max_residual);
  c.check("alpha_round_trip", res <= c.tol, res);
  if (t.symmetry) {
    const TopoReport r = check_topo_symmetry(A, *t.symmetry, c.tol);
    c.results["topo"] = {{"closed", r.closed},
                         {"phi_measured", r.phi_measured},
                         {"tensor_residuals", doubles(r.tensor_residuals)},
                         {"alpha_residuals", doubles(r.alpha_residuals)}};
    c.check("topo_symmetry", r.pass, max_of(r.tensor_residuals));
  }
}

void cmd_transfer(Ctx& c) {
  const io::TopoInput t = load_topo(c);
  const int L = t.L.value_or(2);
  const TransferSpectrum ts = transfer_spectrum_analytic(t.alpha, *t.basis, L);
  c.results["L"] = L;
  c.results["e"] = io::complex_list(ts.e);
  c.results["t"] = io::complex_list(ts.t);
  c.results["sorted_magnitudes"] = doubles(ts.sorted_magnitudes);
  c.results["degeneracy_of_max"] = ts.degeneracy_of_max;
  const double dim = std::pow(static_cast<double>(t.basis->dim), 2.0 * L);
  if (c.opt.brute || dim <= 4096) {
    const auto brute = transfer_matrix_brute(topo_solution(t.basis, t.alpha), L);
    std::vector<double> bm;
    for (const auto& z : brute) bm.push_back(std::abs(z));
    std::sort(bm.rbegin(), bm.rend());
    std::vector<double> am = ts.sorted_magnitudes;
    std::sort(am.rbegin(), am.rend());
    am.resize(std::max(am.size(), bm.size()), 0.0);
    bm.resize(am.size(), 0.0);
    const double scale = std::max(1e-300, std::max(am.front(), bm.front()));
    double res = 0;
    for (std::size_t i = 0; i < am.size(); ++i) res = std::max(res, std::abs(am[i] - bm[i]) / scale);
    c.results["brute_eigenvalues"] = io::complex_list(brute);
    c.results["brute_degeneracy_of_max"] = degeneracy_of_max(brute);
    c.check("brute_matches_analytic", res <= std::max(c.tol, 1e-8), res);
  } else {
    c.results["brute_skipped"] = "D^(2L) above 4096";
  }
}

void cmd_degeneracy(Ctx& c) {
  const io::TopoInput t = load_topo(c);
  if (!t.symmetry) throw CLI::RequiredError("--subgroup (or \"subgroup\" in the --peps JSON)");
  const int L = t.L.value_or(2);
  const DegeneracyReport r = degeneracy_report(*t.symmetry, t.alpha, L, std::max(c.tol, 1e-8));
  c.results["L"] = L;
  c.results["m"] = r.m;
  c.results["degeneracy"] = r.degeneracy;
  c.results["max_value"] = r.max_value;
  c.results["bound"] = r.bound;
  c.check("degeneracy_bound", r.degeneracy_ok, 0.0);
  c.check("max_eigenvalue", r.max_ok, std::abs(r.max_value - r.bound));
}

Json run_json(const ProtocolRun& r) {
  return {{"seed", r.seed},
          {"outcomes", r.outcomes},
          {"outcome_probabilities", doubles(r.outcome_probabilities)},
          {"fidelity", r.fidelity},
          {"corrected", r.corrected},
          {"success", r.success},
          {"message", r.message}};
}

PepsGrid make_grid(Ctx& c, const PEPSTensor& A) {
  int w = 0, h = 0;
  char x = 0;
  std::stringstream ss(c.opt.grid);
  if (!(ss >> w >> x >> h) || x != 'x' || w < 1 || h < 1) throw CLI::ValidationError("--grid", "expected WxH");
  if (c.opt.orientation == "corners") return four_corner_grid(A, w, h);
  return uniform_grid(A, w, h, parse_orientation(c.opt.orientation));
}

void cmd_simulate(Ctx& c) {
  c.results["rng"] = kRngName;
  const int trials = std::max(0, c.opt.trials);
  if (!c.opt.peps.empty()) {
    const PepsGrid g = make_grid(c, load_peps(c));
    c.results["grid"] = c.opt.grid;
    c.results["orientation"] = c.opt.orientation;
    Json runs = Json::array();
    int ok = 0;
    double min_f = 1;
    for (int t = 0; t < trials; ++t) {
      const ProtocolRun r = run_peps_protocol(g, c.opt.seed + t, c.tol);
      runs.push_back(run_json(r));
      ok += r.success;
      min_f = std::min(min_f, r.fidelity);
    }
    c.results["trials"] = runs;
    c.results["successes"] = ok;
    if (trials) c.check("all_trials_succeed", ok == trials, 1 - min_f);
    if (c.opt.enumerate) {
      const PepsEnumeration e = enumerate_peps_outcomes(g);
      c.results["enumeration"] = {{"tuples", e.tuples}, {"corrected", e.corrected}, {"first_failure", e.first_failure}};
      c.check("all_outcomes_correctable", e.all_corrected, 0.0);
    }
    return;
  }
  const MPSTensor A = load_mps(c);
  const int n = c.opt.sites ? c.opt.sites : 6;
  const Boundary bc = parse_boundary(c.opt.boundary);
  const std::vector<MPSTensor> chain(n, A);
  c.results["sites"] = n;
  c.results["boundary"] = c.opt.boundary;
  Json runs = Json::array();
  int ok = 0, corrected = 0;
  double min_f = 1;
  for (int t = 0; t < trials; ++t) {
    const ProtocolRun r = run_mps_protocol(chain, bc, c.opt.seed + t, c.tol);
    runs.push_back(run_json(r));
    ok += r.success;
    if (r.corrected) {
      ++corrected;
      min_f = std::min(min_f, r.fidelity);
    }
  }
  c.results["trials"] = runs;
  c.results["successes"] = ok;
  c.results["success_rate"] = trials ? double(ok) / trials : 0.0;
  if (trials) {
    if (bc == Boundary::Open)
      c.check("all_trials_succeed", ok == trials, 1 - min_f);
    else
      c.check("corrected_trials_exact", ok == corrected, 1 - min_f);
  }
  if (c.opt.enumerate) {
    const EnumerationReport e = enumerate_outcomes(chain, bc, c.tol);
    c.results["enumeration"] = {{"tuples", e.tuples},
                                {"corrected", e.corrected},
                                {"corrected_fraction", e.corrected_fraction},
                                {"success_probability", e.success_probability},
                                {"max_probability_deviation", e.max_probability_deviation},
                                {"min_fidelity", e.min_fidelity}};
    if (bc == Boundary::Open)
      c.check("deterministic", std::abs(e.success_probability - 1) <= c.tol * 10, std::abs(e.success_probability - 1));
    if (trials > 1) {
      const double p = e.success_probability;
      const double sigma = std::sqrt(std::max(p * (1 - p), 1e-300) / trials);
      const double dev = std::abs(double(ok) / trials - p);
      c.results["monte_carlo_sigmas"] = dev / sigma;
      c.check("monte_carlo_within_3_sigma", dev <= 3 * sigma + 1e-12, dev);
    }
  }
}

void cmd_mpo(Ctx& c) {
  if (c.opt.positional.size() != 1) throw CLI::ValidationError("mpo", "expected one of check|purify|relative|apply");
  const std::string action = c.opt.positional[0];
  const MPOTensor O = io::mpo_from_json(c.arg_json("--mpo", c.opt.mpo), c.basis(false));
  c.results["action"] = action;
  if (action == "check") {
    const SymmetryReport s = check_mpo_symmetry(O, c.tol);
    const MpoIsometryReport iso = check_mpo_isometry(O, c.tol);
    const SliceReport sl = mpo_slices(O, c.tol);
    c.results["isometry_constant"] = io::complex_to_json(iso.constant);
    c.results["worst_slice_pair"] = {sl.worst_pair.first, sl.worst_pair.second};
    c.check("mf_symmetry", s.pass, s.max_residual);
    c.check("isometry", iso.pass, iso.residual);
    c.check("slices_orthonormal", sl.pass, sl.max_residual);
  } else if (action == "purify") {
    const PurifyReport p = build_purifying_unitary(O, c.tol);
    c.results["U"] = io::matrix_to_json(p.U);
    c.results["symmetry_residuals"] = doubles(p.symmetry_residuals);
    c.check("unitary", p.unitarity_residual <= c.tol, p.unitarity_residual);
    c.check("purification_symmetry", p.pass, max_of(p.symmetry_residuals));
  } else if (action == "relative") {
    const MPOTensor O2 = io::mpo_from_json(c.arg_json("--mpo2", c.opt.mpo2), c.basis(false));
    const RelativeUnitary r = relative_local_unitary(O, O2, std::max(c.tol, 1e-8));
    c.results["U_tilde"] = io::matrix_to_json(r.U_tilde);
    c.check("factorizes", r.factor_residual <= std::max(c.tol, 1e-8), r.factor_residual);
    c.check("reconstructs", r.reconstruction_residual <= std::max(c.tol, 1e-8), r.reconstruction_residual);
  } else if (action == "apply") {
    const int n = c.opt.sites ? c.opt.sites : 3;
    const std::vector<MPOTensor> chain(n, O);
    DenseTensor input;
    if (!c.opt.input.empty()) {
      input = io::tensor_from_json(c.arg_json("--input", c.opt.input));
    } else {
      std::mt19937_64 rng(c.opt.seed);
      input = random_mpo_input(n, O.d(), O.D(), rng);
    }
    const Boundary bc = parse_boundary(c.opt.boundary);
    if (bc == Boundary::Periodic) {
      const double p = mpo_periodic_postselection_probability(chain, input);
      c.results["postselection_probability"] = p;
      c.check("probability_valid", p >= -c.tol && p <= 1 + c.tol, 0.0);
      return;
    }
    const MpoProtocolRun r = apply_mpo_via_protocol(chain, input, c.opt.seed, c.tol);
    c.results["run"] = run_json(r.run);
    c.results["fidelity"] = r.run.fidelity;
    c.check("matches_direct", r.run.success, 1 - r.run.fidelity);
  } else {
    throw CLI::ValidationError("mpo", "unknown action '" + action + "'");
  }
}

void cmd_clifford_synth(Ctx& c) {
  const PartialCliffordMap m = io::clifford_map_from_json(c.arg_json("--map", c.opt.map));
  const AdmissibilityReport a = check_admissible(m);
  c.results["failures"] = a.failures;
  c.check("admissible", a.pass(), 0.0);
  if (!a.pass()) return;
  const Mat U = synthesize_clifford(m);
  const bool cl = is_clifford(U, m.n, m.d, c.tol);
  double worst = 0;
  for (const auto& im : m.images) {
    const Mat lhs = U * pauli_to_matrix(im.source) * U.adjoint();
    const Mat rhs = pauli_to_matrix(im.target);
    worst = std::max(worst, (lhs - rhs).norm() / rhs.norm());
  }
  c.results["U"] = io::matrix_to_json(U);
  c.check("is_clifford", cl, 0.0);
  c.check("images_reproduced", worst <= c.tol, worst);
}

using Handler = std::function<void(Ctx&)>;

struct Subcommand {
  std::string name;
  std::string summary;
  Handler run;
};

const std::vector<Subcommand>& table() {
  static const std::vector<Subcommand> t = {
      {"basis", "validate a bond basis and print its group data (--basis)", cmd_basis},
      {"solve-family", "solve a constraint set for its tensor family (--constraints [--basis])", cmd_solve_family},
      {"check-mps", "symmetry and canonical-form checks (--chain)", cmd_check_mps},
      {"decompose-mps", "polar split, correction consistency, Clifford+magic form (--chain)", cmd_decompose_mps},
      {"spt", "SPT-type solution from coefficients (--basis --alpha)", cmd_spt},
      {"block", "block k sites (--chain --k)", cmd_block},
      {"expect", "Pauli-string expectation (--chain | --basis --alpha; --paulis)", cmd_expect},
      {"check-peps", "PEPS symmetry, isometry, polar and injectivity (--peps)", cmd_check_peps},
      {"topo-solve", "topological PEPS solution and symmetry (--peps | --basis --alpha)", cmd_topo_solve},
      {"transfer", "transfer spectrum, analytic and brute force (--basis --alpha --L)", cmd_transfer},
      {"degeneracy", "leading transfer degeneracy (--peps spec with subgroup, --L)", cmd_degeneracy},
      {"simulate", "measurement-feedback runs (--chain --sites --boundary | --peps --grid --orientation)",
       cmd_simulate},
      {"mpo", "check|purify|relative|apply (--mpo [--mpo2] [--sites])", cmd_mpo},
      {"clifford-synth", "synthesize a Clifford from a partial map (--map)", cmd_clifford_synth},
  };
  return t;
}

std::optional<double> env_tolerance() {
  const char* s = std::getenv("MFTN_TOL");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (*end || !(v > 0)) throw Error(ErrorKind::Malformed, std::string("MFTN_TOL is not a positive number: ") + s);
  return v;
}

std::string kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownLeg: return "UnknownLeg";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotUnitary: return "NotUnitary";
    case ErrorKind::InvalidBasis: return "InvalidBasis";
    case ErrorKind::NotGroup: return "NotGroup";
    case ErrorKind::Inadmissible: return "Inadmissible";
    case ErrorKind::NonPrime: return "NonPrime";
    case ErrorKind::SymmetryFailure: return "SymmetryFailure";
    case ErrorKind::DefectStuck: return "DefectStuck";
    case ErrorKind::SizeGuard: return "SizeGuard";
    case ErrorKind::Malformed: return "Malformed";
  }
  return "Unknown";
}

void add_flags(CLI::App& app, Options& o) {
  app.add_option("--basis", o.basis, "basis spec (WH:D, product:a,b, mixed:a,b) or basis JSON");
  app.add_option("--constraints", o.constraints, "constraint-set JSON");
  app.add_option("--alpha", o.alpha, "coefficient list JSON");
  app.add_option("--L", o.L, "transfer width");
  app.add_option("--sites", o.sites, "chain length");
  app.add_option("--boundary", o.boundary, "open or periodic");
  app.add_option("--trials", o.trials, "number of seeded runs");
  app.add_option("--seed", o.seed, "base seed; trial t uses seed + t");
  app.add_option("--tol", o.tol, "numeric tolerance (default 1e-9, or MFTN_TOL)");
  app.add_option("--out", o.out, "write the report here instead of stdout");
  app.add_option("--chain", o.chain, "MPS tensor JSON");
  app.add_option("--peps", o.peps, "PEPS tensor or topological spec JSON");
  app.add_option("--mpo", o.mpo, "MPO tensor JSON");
  app.add_option("--mpo2", o.mpo2, "second MPO for mpo relative");
  app.add_option("--map", o.map, "partial Clifford map JSON");
  app.add_option("--paulis", o.paulis, "per-site Pauli list JSON");
  app.add_option("--input", o.input, "input state tensor JSON for mpo apply");
  app.add_option("--k", o.k, "block size");
  app.add_option("--grid", o.grid, "PEPS patch size WxH");
  app.add_option("--orientation", o.orientation, "UR, UL, DR, DL or corners");
  app.add_option("--subgroup", o.subgroup, "comma-separated subgroup labels");
  app.add_option("--phi", o.phi, "subgroup phase");
  app.add_flag("--enumerate", o.enumerate, "exhaustive outcome enumeration");
  app.add_flag("--brute", o.brute, "force the brute-force transfer matrix");
  app.add_option("action", o.positional, "mpo action");
}

}  // namespace

const std::vector<OperationEntry>& operation_table() {
  static const std::vector<OperationEntry> t = {
      {"weyl_heisenberg_basis", "basis"},
      {"composite_basis", "basis"},
      {"hadamard_latin_basis", "basis"},
      {"check_group_closure", "basis"},
      {"solve_symmetry_family", "solve-family"},
      {"map_order", "solve-family"},
      {"check_mf_symmetry", "check-mps"},
      {"canonical_form_check", "check-mps"},
      {"polar_decompose", "decompose-mps"},
      {"eig_hermitian", "decompose-mps"},
      {"pseudo_inverse", "decompose-mps"},
      {"split_polar", "decompose-mps"},
      {"correction_consistency", "decompose-mps"},
      {"clifford_magic_decompose", "decompose-mps"},
      {"spt_solution", "spt"},
      {"block", "block"},
      {"contract", "expect"},
      {"pauli_expectation", "expect"},
      {"check_peps_mf_symmetry", "check-peps"},
      {"peps_isometry_check", "check-peps"},
      {"peps_split_polar", "check-peps"},
      {"injectivity_check", "check-peps"},
      {"topo_solution", "topo-solve"},
      {"check_topo_symmetry", "topo-solve"},
      {"transfer_spectrum_analytic", "transfer"},
      {"transfer_matrix_brute", "transfer"},
      {"degeneracy_report", "degeneracy"},
      {"run_mps_protocol", "simulate"},
      {"run_peps_protocol", "simulate"},
      {"enumerate_outcomes", "simulate"},
      {"check_mpo_isometry", "mpo"},
      {"mpo_slices", "mpo"},
      {"build_purifying_unitary", "mpo"},
      {"relative_local_unitary", "mpo"},
      {"apply_mpo_via_protocol", "mpo"},
      {"pauli_to_matrix", "clifford-synth"},
      {"check_admissible", "clifford-synth"},
      {"synthesize_clifford", "clifford-synth"},
      {"is_clifford", "clifford-synth"},
  };
  return t;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = [] {
    std::vector<std::string> v;
    for (const auto& c : table()) v.push_back(c.name);
    return v;
  }();
  return s;
}

std::string usage() {
  std::ostringstream os;
  os << "usage: mftn_cli <subcommand> [flags]\n\nsubcommands:\n";
  for (const auto& c : table()) os << "  " << std::left << std::setw(16) << c.name << c.summary << "\n";
  os << "\nshared flags: --basis --constraints --alpha --L --sites --boundary --trials --seed --tol --out\n"
        "              --chain --peps --mpo --mpo2 --map --paulis --input --k --grid --orientation\n"
        "              --subgroup --phi --enumerate --brute\n"
        "environment: MFTN_TOL sets the default tolerance (--tol wins)\n"
        "exit codes: 0 all checks pass, 1 a check failed, 2 usage error, 3 malformed JSON\n"
        "run `mftn_cli <subcommand> --help` for flag details\n";
  return os.str();
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << usage();
    return kExitUsage;
  }
  if (args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    out << usage();
    return kExitOk;
  }
  const auto it = std::find_if(table().begin(), table().end(), [&](const Subcommand& s) { return s.name == args[0]; });
  if (it == table().end()) {
    err << "unknown subcommand '" << args[0] << "'\n" << usage();
    return kExitUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  Ctx c;
  CLI::App app{it->summary, "mftn_cli " + it->name};
  add_flags(app, c.opt);
  try {
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  Json report;
  report["command"] = it->name;
  int code = kExitOk;
  try {
    c.tol = c.opt.tol ? *c.opt.tol : env_tolerance().value_or(kDefaultTol);
    if (!(c.tol > 0)) throw CLI::ValidationError("--tol", "must be positive");
    // The report path does not change the computation.
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--out") {
        ++i;
        continue;
      }
      if (args[i].rfind("--out=", 0) == 0) continue;
      c.digest.add(args[i]);
    }
    c.digest.add("tol=" + io::dump(Json(c.tol), 0));
    it->run(c);
  } catch (const CLI::Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Malformed) {
      err << "malformed input: " << e.what() << "\n";
      return kExitMalformed;
    }
    report["error"] = {{"kind", kind_name(e.kind())}, {"message", e.what()}};
    c.check("completed", false, 0.0);
  } catch (const std::exception& e) {
    report["error"] = {{"kind", "Exception"}, {"message", e.what()}};
    c.check("completed", false, 0.0);
  }

  for (const auto& ch : c.checks)
    if (!ch["pass"].get<bool>()) code = kExitCheckFailed;

  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  Json ordered;
  ordered["command"] = it->name;
  ordered["inputs_digest"] = "sha256:" + c.digest.hex();
  ordered["tolerance"] = c.tol;
  ordered["seed"] = c.opt.seed;
  ordered["exit_code"] = code;
  ordered["checks"] = c.checks;
  ordered["results"] = c.results;
  if (report.contains("error")) ordered["error"] = report["error"];
  ordered["artifacts"] = c.opt.out.empty() ? Json::array() : Json::array({c.opt.out});
  ordered["elapsed_ms"] = ms;

  const std::string text = io::dump(ordered) + "\n";
  if (c.opt.out.empty()) {
    out << text;
  } else {
    std::ofstream f(c.opt.out);
    if (!f) {
      err << "cannot write '" << c.opt.out << "'\n";
      return kExitUsage;
    }
    f << text;
  }
  return code;
}

}  // namespace mftn::cli
