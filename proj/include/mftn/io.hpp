#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mftn/basis.hpp"
#include "mftn/clifford.hpp"
#include "mftn/mpo.hpp"
#include "mftn/mps.hpp"
#include "mftn/peps.hpp"

namespace mftn::io {

using Json = nlohmann::ordered_json;

// Serializes with every double printed to 17 significant digits.
std::string dump(const Json& j, int indent = 2);

// Throws Error(Malformed) when the file is missing or not JSON.
Json read_json_file(const std::string& path);

Json complex_to_json(cplx z);
cplx complex_from_json(const Json& j);  // [re, im] or a plain number
Json complex_list(const std::vector<cplx>& v);
std::vector<cplx> complex_list_from_json(const Json& j);

// {"legs": [...], "shape": [...], "data": [[re, im], ...]}, row-major.
Json tensor_to_json(const DenseTensor& t);
DenseTensor tensor_from_json(const Json& j);
Json matrix_to_json(const Mat& m);  // legs ("row", "col")
// Rank-2 tensor json (first leg = rows) or nested [[[re, im], ...], ...].
Mat matrix_from_json(const Json& j);

// "WH:D", "product:a,b", "mixed:a,b" or {"dim", "elements", "labels"};
// {"hadamard": [...], "latin": [[...]]} builds a Hadamard-Latin basis.
BasisPtr basis_from_json(const Json& j);
Json basis_to_json(const MFBasis& b);

Json pauli_to_json(const PauliVector& p);
PauliVector pauli_from_json(const Json& j);

int label_index(const MFBasis& b, const Json& j);  // label string or integer index

struct ConstraintSet {
  BasisPtr basis;
  std::vector<SymmetryConstraint> constraints;
  int d = 0;  // physical dimension implied by the u_phys entries, 0 if every entry is "solve"
  bool has_unknown = false;
};
// {"basis": ..., "constraints": [{"p_in", "u_phys": tensor-json | "solve" | label, "p_out"}]}.
// A u_phys label names an element of the bond basis. `fallback` is used when "basis" is absent.
ConstraintSet constraints_from_json(const Json& j, BasisPtr fallback = nullptr);
Json constraints_to_json(const MFBasis& b, const std::vector<SymmetryConstraint>& c);

// Constraint set plus "tensor" (legs left, phys, right).
MPSTensor mps_from_json(const Json& j, BasisPtr fallback = nullptr);
Json mps_to_json(const MPSTensor& A);

struct TopoInput {
  BasisPtr basis;
  std::vector<cplx> alpha;
  std::optional<TopoSymmetrySpec> symmetry;  // present when "subgroup" is given
  std::optional<int> L;
};
// {"basis": "WH:D", "alpha": [[re, im], ...], "subgroup": [labels], "phi": x, "L": n}
TopoInput topo_from_json(const Json& j, BasisPtr fallback = nullptr);

// Topo spec (built with topo_solution) or {"basis", "tensor", "rules": [{"src", "g", "u", "outs": [[leg, label]]}]}.
PEPSTensor peps_from_json(const Json& j, BasisPtr fallback = nullptr);
Json peps_to_json(const PEPSTensor& A);

// {"construct": "pauli-slice", "basis": ...}, {"construct": "identity", "d": n}, or a constraint set
// plus "tensor" with legs (left, right, phys_in, phys_out). Optional "input_unitary" is applied on phys_in.
MPOTensor mpo_from_json(const Json& j, BasisPtr fallback = nullptr);
Json mpo_to_json(const MPOTensor& O);

// {"n", "d", "images": [{"slot", "gen": "X" | "Z", "target": pauli-json}]}
PartialCliffordMap clifford_map_from_json(const Json& j);

}  // namespace mftn::io
