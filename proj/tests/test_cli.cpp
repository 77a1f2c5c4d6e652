#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "mftn/cli.hpp"
#include "mftn/fixtures.hpp"
#include "mftn/io.hpp"
#include "util.hpp"

using namespace mftn;
using io::Json;
namespace fx = mftn::fixtures;

namespace {

const std::string kData = MFTN_DATA_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
  Json report() const { return Json::parse(out); }
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string strip_elapsed(const std::string& s) {
  return std::regex_replace(s, std::regex("\"elapsed_ms\": [0-9]+"), "\"elapsed_ms\": 0");
}

bool all_checks_pass(const Json& r) {
  for (const auto& c : r["checks"])
    if (!c["pass"].get<bool>()) return false;
  return true;
}

}  // namespace

TEST(IoRoundTrip, TensorAndComplex) {
  std::mt19937_64 rng(1);
  const DenseTensor t = testutil::random_tensor(rng, {"a", "b", "c"}, {2, 3, 2});
  const Json j = Json::parse(io::dump(io::tensor_to_json(t)));
  const DenseTensor back = io::tensor_from_json(j);
  EXPECT_EQ(back.legs(), t.legs());
  EXPECT_EQ(back.shape(), t.shape());
  // 17 significant digits survive the text round trip exactly
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(back.data()[i], t.data()[i]);
  EXPECT_EQ(io::complex_from_json(Json::parse("2.5")), cplx(2.5, 0));
  EXPECT_EQ(io::complex_from_json(Json::parse("[1, -2]")), cplx(1, -2));
}

TEST(IoRoundTrip, BasisPauliAndChains) {
  const auto b = fx::wh(3);
  const auto b2 = io::basis_from_json(Json::parse(io::dump(io::basis_to_json(*b))));
  ASSERT_EQ(b2->size(), 9);
  for (int i = 0; i < 9; ++i) EXPECT_LT((b2->elements[i] - b->elements[i]).norm(), 1e-15);
  PauliVector p = PauliVector::identity(2, 3);
  p.v = {1, 2};
  p.w = {0, 1};
  p.phase_exp = 5;
  EXPECT_TRUE(io::pauli_from_json(io::pauli_to_json(p)) == p);

  const MPSTensor A = fx::aklt();
  const MPSTensor A2 = io::mps_from_json(Json::parse(io::dump(io::mps_to_json(A))));
  EXPECT_LT((A2.tensor.permuted(A.tensor.legs()) - A.tensor).norm(), 1e-15);
  EXPECT_TRUE(check_mf_symmetry(A2).pass);

  const PEPSTensor P = fx::toric(2);
  const PEPSTensor P2 = io::peps_from_json(Json::parse(io::dump(io::peps_to_json(P))));
  EXPECT_TRUE(check_peps_mf_symmetry(P2).pass);

  const MPOTensor O = io::mpo_from_json(io::read_json_file(kData + "/pauli_slice_mpo.json"));
  const MPOTensor O2 = io::mpo_from_json(Json::parse(io::dump(io::mpo_to_json(O))));
  EXPECT_LT((O2.tensor.permuted(O.tensor.legs()) - O.tensor).norm(), 1e-15);
}

TEST(IoRoundTrip, YLabelsFoldPhases) {
  const auto cs = io::constraints_from_json(io::read_json_file(kData + "/non_bijective.json"));
  ASSERT_EQ(cs.constraints.size(), 2u);
  MPSTensor A;
  A.basis = cs.basis;
  A.constraints = cs.constraints;
  const auto fam = solve_symmetry_family(*cs.basis, cs.constraints, 2, 2);
  EXPECT_EQ(fam.dimension, 2);
}

TEST(IoRoundTrip, MalformedInputs) {
  EXPECT_THROW(io::tensor_from_json(Json::parse(R"({"legs":["a"],"shape":[2],"data":[1]})")), Error);
  EXPECT_THROW(io::read_json_file(kData + "/does_not_exist.json"), Error);
  EXPECT_THROW(io::basis_from_json(Json::parse("\"WH:x\"")), Error);
}

TEST(Dispatch, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("solve-family"), std::string::npos);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
}

TEST(Dispatch, UnknownSubcommandAndBadFlags) {
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"basis", "--no-such-flag", "1"}).code, cli::kExitUsage);
}

TEST(Dispatch, MalformedJsonExitsThree) {
  const std::string path = ::testing::TempDir() + "mftn_bad.json";
  std::ofstream(path) << "{ \"basis\": \"WH:2\", \"constraints\": [";
  EXPECT_EQ(run({"solve-family", "--constraints", path}).code, cli::kExitMalformed);
  EXPECT_EQ(run({"spt", "--basis", "WH:2", "--alpha", "[1, 2"}).code, cli::kExitMalformed);
  std::remove(path.c_str());
}

TEST(Dispatch, FailedCheckExitsOne) {
  // copy-family constraints with a tensor that does not satisfy them
  Json j = io::read_json_file(kData + "/copy.json");
  std::mt19937_64 rng(2);
  j["tensor"] = io::tensor_to_json(testutil::random_tensor(rng, {"left", "phys", "right"}, {2, 2, 2}));
  const auto r = run({"check-mps", "--chain", j.dump()});
  EXPECT_EQ(r.code, cli::kExitCheckFailed);
  const Json rep = r.report();
  EXPECT_EQ(rep["exit_code"].get<int>(), 1);
  EXPECT_FALSE(all_checks_pass(rep));
}

TEST(Dispatch, SolveFamilyDimensionTwo) {
  for (const char* f : {"/ex1.json", "/ex2.json"}) {
    const auto r = run({"solve-family", "--basis", "WH:2", "--constraints", kData + f});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json rep = r.report();
    EXPECT_EQ(rep["command"], "solve-family");
    EXPECT_EQ(rep["results"]["dimension"].get<int>(), 2);
    EXPECT_TRUE(all_checks_pass(rep));
    EXPECT_EQ(rep["inputs_digest"].get<std::string>().rfind("sha256:", 0), 0u);
  }
}

TEST(Dispatch, TransferInterpolated) {
  const auto r = run({"transfer", "--basis", "WH:2", "--alpha", kData + "/interp.json", "--L", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rep = r.report();
  const double a = 0.3;
  const auto t = io::complex_list_from_json(rep["results"]["t"]);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_NEAR(t[0].real(), std::pow(2 + 2 * a * a, 2), 1e-12);
  EXPECT_NEAR(t[1].real(), std::pow(2 + 2 * a * a, 2), 1e-12);
  EXPECT_NEAR(t[2].real(), std::pow(4 * a, 2), 1e-12);
  EXPECT_NEAR(t[3].real(), std::pow(4 * a, 2), 1e-12);
  EXPECT_EQ(rep["results"]["degeneracy_of_max"].get<int>(), 2);
}

TEST(Dispatch, ToleranceFromEnvironmentAndFlag) {
  ::setenv("MFTN_TOL", "1e-7", 1);
  const Json env = run({"basis", "--basis", "WH:2"}).report();
  EXPECT_DOUBLE_EQ(env["tolerance"].get<double>(), 1e-7);
  const Json flag = run({"basis", "--basis", "WH:2", "--tol", "1e-5"}).report();
  EXPECT_DOUBLE_EQ(flag["tolerance"].get<double>(), 1e-5);
  ::unsetenv("MFTN_TOL");
  EXPECT_DOUBLE_EQ(run({"basis", "--basis", "WH:2"}).report()["tolerance"].get<double>(), 1e-9);
}

TEST(Dispatch, DeterministicModuloElapsed) {
  const std::vector<std::string> args = {"simulate", "--chain", kData + "/aklt.json", "--sites", "4",
                                         "--boundary", "periodic", "--trials", "20", "--seed", "11"};
  const auto a = run(args), b = run(args);
  EXPECT_EQ(a.code, b.code);
  EXPECT_EQ(strip_elapsed(a.out), strip_elapsed(b.out));
  auto other = args;
  other.back() = "12";
  EXPECT_NE(strip_elapsed(run(other).out), strip_elapsed(a.out));
}

TEST(Dispatch, OutFileArtifact) {
  const std::string path = ::testing::TempDir() + "mftn_report.json";
  const auto r = run({"basis", "--basis", "WH:3", "--out", path});
  EXPECT_EQ(r.code, 0);
  const Json rep = io::read_json_file(path);
  ASSERT_EQ(rep["artifacts"].size(), 1u);
  EXPECT_EQ(rep["artifacts"][0], path);
  std::remove(path.c_str());
}

TEST(Dispatch, EverySubcommandRunsOnShippedData) {
  const std::vector<std::vector<std::string>> cmds = {
      {"basis", "--basis", "WH:2"},
      {"check-mps", "--chain", kData + "/aklt.json"},
      {"decompose-mps", "--chain", kData + "/aklt.json"},
      {"spt", "--basis", "WH:2", "--alpha", kData + "/ghz2.json"},
      {"block", "--chain", kData + "/aklt.json", "--k", "2"},
      {"expect", "--basis", "WH:2", "--alpha", kData + "/ghz2.json", "--sites", "3", "--paulis", kData + "/ghz_zz.json"},
      {"check-peps", "--peps", kData + "/toric.json"},
      {"topo-solve", "--peps", kData + "/charged.json"},
      {"degeneracy", "--peps", kData + "/toric.json", "--L", "2"},
      {"simulate", "--chain", kData + "/aklt.json", "--sites", "3", "--trials", "5", "--seed", "1"},
      {"mpo", "check", "--mpo", kData + "/pauli_slice_mpo.json"},
      {"mpo", "apply", "--mpo", kData + "/pauli_slice_mpo.json", "--sites", "3", "--seed", "2"},
      {"clifford-synth", "--map", kData + "/ghz_map.json"},
  };
  for (const auto& c : cmds) {
    const auto r = run(c);
    EXPECT_EQ(r.code, 0) << c[0] << " " << r.err << r.out.substr(0, 400);
  }
}

TEST(Coverage, EveryOperationHasExactlyOneSubcommand) {
  const std::vector<std::string> ops = {
      "contract", "polar_decompose", "eig_hermitian", "pseudo_inverse", "weyl_heisenberg_basis",
      "composite_basis", "hadamard_latin_basis", "check_group_closure", "pauli_to_matrix", "check_admissible",
      "synthesize_clifford", "is_clifford", "check_mf_symmetry", "solve_symmetry_family", "canonical_form_check",
      "split_polar", "correction_consistency", "clifford_magic_decompose", "spt_solution", "block", "map_order",
      "pauli_expectation", "check_peps_mf_symmetry", "peps_isometry_check", "peps_split_polar", "topo_solution",
      "check_topo_symmetry", "transfer_spectrum_analytic", "transfer_matrix_brute", "degeneracy_report",
      "injectivity_check", "run_mps_protocol", "run_peps_protocol", "enumerate_outcomes", "check_mpo_isometry",
      "mpo_slices", "build_purifying_unitary", "relative_local_unitary", "apply_mpo_via_protocol"};
  const auto& table = cli::operation_table();
  const auto& subs = cli::subcommands();
  const std::set<std::string> sub_set(subs.begin(), subs.end());
  EXPECT_EQ(sub_set.size(), 14u);
  for (const auto& op : ops) {
    int n = 0;
    for (const auto& e : table) n += e.operation == op;
    EXPECT_EQ(n, 1) << op;
  }
  EXPECT_EQ(table.size(), ops.size());
  std::set<std::string> used;
  for (const auto& e : table) {
    EXPECT_TRUE(sub_set.count(e.subcommand)) << e.subcommand;
    used.insert(e.subcommand);
  }
  EXPECT_EQ(used, sub_set);
}

TEST(Binary, ExitCodesThroughProcess) {
  const std::string cli = MFTN_CLI_PATH;
  auto code = [&](const std::string& a) {
    const int s = std::system((cli + " " + a + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  EXPECT_EQ(code("--help"), 0);
  EXPECT_EQ(code("frobnicate"), 2);
  EXPECT_EQ(code("solve-family --basis WH:2 --constraints " + kData + "/ex1.json"), 0);
}
