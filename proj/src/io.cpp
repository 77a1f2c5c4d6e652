#include "mftn/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace mftn::io {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::Malformed, what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) malformed(std::string("missing field '") + key + "'");
  return j.at(key);
}

int as_int(const Json& j, const char* what) {
  if (!j.is_number_integer()) malformed(std::string(what) + " must be an integer");
  return j.get<int>();
}

void dump_rec(const Json& j, int indent, int depth, std::string& out) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent) * (depth + 1), ' ') : "";
  const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent) * depth, ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      if (!std::isfinite(x)) {
        out += "null";
        break;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", x);
      std::string s(buf);
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      out += s;
      break;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      // Short numeric arrays stay on one line.
      bool flat = j.size() <= 4;
      for (const auto& e : j) flat = flat && e.is_primitive();
      out += "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        if (!flat) out += nl + pad;
        dump_rec(e, indent, depth + 1, out);
        first = false;
      }
      if (!flat) out += nl + close;
      out += "]";
      break;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += "{";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",";
        out += nl + pad;
        out += Json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        dump_rec(it.value(), indent, depth + 1, out);
        first = false;
      }
      out += nl + close;
      out += "}";
      break;
    }
    default:
      out += j.dump();
  }
}

bool is_hermitian_y(const MFBasis& b, const Json& j) {
  return j.is_string() && j.get<std::string>() == "Y" && b.weyl_heisenberg && b.dim == 2;
}

// Labels name basis elements; "Y" is the Hermitian i X Z rather than the XZ element.
Mat element_matrix(const MFBasis& b, const Json& j) {
  if (is_hermitian_y(b, j))
    return cplx(0, 1) * b.elements[b.index_of("XZ")];
  return b.elements[label_index(b, j)];
}

}  // namespace

std::string dump(const Json& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  return out;
}

Json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) malformed("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    malformed("'" + path + "': " + e.what());
  }
}

Json complex_to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

cplx complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  malformed("complex number must be [re, im] or a number");
}

Json complex_list(const std::vector<cplx>& v) {
  Json a = Json::array();
  for (const auto& z : v) a.push_back(complex_to_json(z));
  return a;
}

std::vector<cplx> complex_list_from_json(const Json& j) {
  const Json& arr = j.is_object() ? field(j, "alpha") : j;
  if (!arr.is_array()) malformed("expected an array of complex numbers");
  std::vector<cplx> out;
  for (const auto& e : arr) out.push_back(complex_from_json(e));
  return out;
}

Json tensor_to_json(const DenseTensor& t) {
  Json j;
  j["legs"] = t.legs();
  j["shape"] = t.shape();
  j["data"] = complex_list(t.data());
  return j;
}

DenseTensor tensor_from_json(const Json& j) {
  std::vector<std::string> legs;
  std::vector<int> shape;
  try {
    legs = field(j, "legs").get<std::vector<std::string>>();
    shape = field(j, "shape").get<std::vector<int>>();
  } catch (const Json::type_error& e) {
    malformed(std::string("tensor legs/shape: ") + e.what());
  }
  const Json& data = field(j, "data");
  if (!data.is_array()) malformed("tensor data must be an array");
  std::vector<cplx> v;
  v.reserve(data.size());
  for (const auto& e : data) v.push_back(complex_from_json(e));
  std::size_t n = 1;
  for (int s : shape) {
    if (s <= 0) malformed("tensor shape entries must be positive");
    n *= static_cast<std::size_t>(s);
  }
  if (legs.size() != shape.size()) malformed("tensor legs and shape differ in length");
  if (v.size() != n) malformed("tensor data has " + std::to_string(v.size()) + " entries, shape needs " + std::to_string(n));
  return DenseTensor(legs, shape, v);
}

Json matrix_to_json(const Mat& m) {
  return tensor_to_json(DenseTensor::from_matrix(m, {"row"}, {static_cast<int>(m.rows())}, {"col"},
                                                 {static_cast<int>(m.cols())}));
}

Mat matrix_from_json(const Json& j) {
  if (j.is_object()) {
    const DenseTensor t = tensor_from_json(j);
    if (t.rank() != 2) malformed("matrix tensor must have rank 2");
    return t.matrix({t.legs()[0]}, {t.legs()[1]});
  }
  if (!j.is_array() || j.empty()) malformed("matrix must be a tensor or a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) malformed("matrix rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols) malformed("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(j[r][c]);
  }
  return m;
}

BasisPtr basis_from_json(const Json& j) {
  try {
    if (j.is_string()) return std::make_shared<const MFBasis>(basis_from_spec(j.get<std::string>()));
    if (j.is_object() && j.contains("hadamard")) {
      std::vector<Mat> H;
      for (const auto& h : field(j, "hadamard")) H.push_back(matrix_from_json(h));
      const auto lam = field(j, "latin").get<std::vector<std::vector<int>>>();
      return std::make_shared<const MFBasis>(hadamard_latin_basis(H, lam));
    }
    if (j.is_object() && j.contains("composite")) {
      const Json& c = j.at("composite");
      const std::string mode = field(c, "mode").get<std::string>();
      CompositeMode m;
      if (mode == "product")
        m = CompositeMode::Product;
      else if (mode == "mixed_clock" || mode == "mixed")
        m = CompositeMode::MixedClock;
      else
        malformed("unknown composite mode '" + mode + "'");
      return std::make_shared<const MFBasis>(
          composite_basis(*basis_from_json(field(c, "b1")), *basis_from_json(field(c, "b2")), m));
    }
  } catch (const Json::exception& e) {
    malformed(std::string("basis: ") + e.what());
  }
  MFBasis b;
  b.dim = as_int(field(j, "dim"), "basis dim");
  for (const auto& e : field(j, "elements")) b.elements.push_back(matrix_from_json(e));
  if (j.contains("labels")) {
    b.labels = j.at("labels").get<std::vector<std::string>>();
  } else {
    for (std::size_t i = 0; i < b.elements.size(); ++i) b.labels.push_back("P" + std::to_string(i));
  }
  validate_basis(b);
  b.table = group_table(b);
  b.is_group = b.table.has_value();
  if (*b.is_group) b.cocycle = check_group_closure(b);
  return std::make_shared<const MFBasis>(std::move(b));
}

Json basis_to_json(const MFBasis& b) {
  Json j;
  j["dim"] = b.dim;
  Json el = Json::array();
  for (const auto& e : b.elements) el.push_back(matrix_to_json(e));
  j["elements"] = el;
  j["labels"] = b.labels;
  return j;
}

Json pauli_to_json(const PauliVector& p) {
  Json j;
  j["n"] = p.n;
  j["d"] = p.d;
  j["v"] = p.v;
  j["w"] = p.w;
  j["phase_exp"] = p.phase_exp;
  return j;
}

PauliVector pauli_from_json(const Json& j) {
  PauliVector p;
  try {
    p.n = field(j, "n").get<int>();
    p.d = field(j, "d").get<int>();
    p.v = field(j, "v").get<std::vector<int>>();
    p.w = field(j, "w").get<std::vector<int>>();
    p.phase_exp = j.value("phase_exp", 0);
  } catch (const Json::exception& e) {
    malformed(std::string("pauli: ") + e.what());
  }
  if (p.d < 2 || p.n < 1) malformed("pauli needs n >= 1 and d >= 2");
  if (static_cast<int>(p.v.size()) != p.n || static_cast<int>(p.w.size()) != p.n)
    malformed("pauli v and w must have n entries");
  p.normalize();
  return p;
}

int label_index(const MFBasis& b, const Json& j) {
  if (j.is_number_integer()) {
    const int i = j.get<int>();
    if (i < 0 || i >= b.size()) malformed("basis index " + std::to_string(i) + " out of range");
    return i;
  }
  if (!j.is_string()) malformed("basis element must be a label or an index");
  try {
    return b.index_of(j.get<std::string>());
  } catch (const Error& e) {
    malformed(e.what());
  }
}

ConstraintSet constraints_from_json(const Json& j, BasisPtr fallback) {
  ConstraintSet cs;
  cs.basis = j.is_object() && j.contains("basis") ? basis_from_json(j.at("basis")) : fallback;
  if (!cs.basis) malformed("constraint set needs a basis");
  const Json& arr = field(j, "constraints");
  if (!arr.is_array()) malformed("constraints must be an array");
  for (const auto& c : arr) {
    SymmetryConstraint s;
    s.p_in = label_index(*cs.basis, field(c, "p_in"));
    s.p_out = label_index(*cs.basis, field(c, "p_out"));
    // Y = i XZ: the phase of P enters as is, the phase of P' through P'^*.
    cplx fold = 1.0;
    if (is_hermitian_y(*cs.basis, field(c, "p_in"))) fold *= cplx(0, 1);
    if (is_hermitian_y(*cs.basis, field(c, "p_out"))) fold *= cplx(0, -1);
    const Json& u = field(c, "u_phys");
    if (u.is_string() && u.get<std::string>() == "solve") {
      s.solve_u = true;
      cs.has_unknown = true;
    } else if (u.is_string() || u.is_number_integer()) {
      s.u_phys = element_matrix(*cs.basis, u);
    } else {
      s.u_phys = matrix_from_json(u);
    }
    if (!s.solve_u) {
      if (s.u_phys.rows() != s.u_phys.cols()) malformed("u_phys must be square");
      const int d = static_cast<int>(s.u_phys.rows());
      if (cs.d && cs.d != d) malformed("u_phys entries disagree on the physical dimension");
      cs.d = d;
      s.u_phys *= fold;
    }
    cs.constraints.push_back(std::move(s));
  }
  return cs;
}

Json constraints_to_json(const MFBasis& b, const std::vector<SymmetryConstraint>& c) {
  Json arr = Json::array();
  for (const auto& s : c) {
    Json e;
    e["p_in"] = b.labels[s.p_in];
    e["u_phys"] = s.solve_u ? Json("solve") : matrix_to_json(s.u_phys);
    e["p_out"] = b.labels[s.p_out];
    arr.push_back(e);
  }
  return arr;
}

MPSTensor mps_from_json(const Json& j, BasisPtr fallback) {
  ConstraintSet cs = constraints_from_json(j, fallback);
  if (cs.has_unknown) malformed("an MPS tensor needs explicit u_phys for every constraint");
  MPSTensor A;
  A.basis = cs.basis;
  A.constraints = std::move(cs.constraints);
  A.tensor = tensor_from_json(field(j, "tensor"));
  if (!A.tensor.has_leg(kLeft) || !A.tensor.has_leg(kPhys) || !A.tensor.has_leg(kRight) || A.tensor.rank() != 3)
    malformed("MPS tensor legs must be left, phys, right");
  A.tensor = A.tensor.permuted({kLeft, kPhys, kRight});
  A.validate();
  return A;
}

Json mps_to_json(const MPSTensor& A) {
  Json j;
  j["basis"] = basis_to_json(*A.basis);
  j["constraints"] = constraints_to_json(*A.basis, A.constraints);
  j["tensor"] = tensor_to_json(A.tensor);
  return j;
}

TopoInput topo_from_json(const Json& j, BasisPtr fallback) {
  TopoInput t;
  t.basis = j.is_object() && j.contains("basis") ? basis_from_json(j.at("basis")) : fallback;
  if (!t.basis) malformed("topological spec needs a basis");
  t.alpha = complex_list_from_json(field(j, "alpha"));
  if (static_cast<int>(t.alpha.size()) != t.basis->size())
    malformed("alpha has " + std::to_string(t.alpha.size()) + " entries, basis has " +
              std::to_string(t.basis->size()));
  if (j.contains("subgroup")) {
    TopoSymmetrySpec s;
    s.basis = t.basis;
    for (const auto& l : j.at("subgroup")) s.subgroup.push_back(label_index(*t.basis, l));
    s.phi = j.value("phi", 0.0);
    t.symmetry = s;
  }
  if (j.contains("L")) t.L = as_int(j.at("L"), "L");
  return t;
}

PEPSTensor peps_from_json(const Json& j, BasisPtr fallback) {
  if (j.is_object() && j.contains("alpha")) {
    const TopoInput t = topo_from_json(j, fallback);
    return topo_solution(t.basis, t.alpha);
  }
  PEPSTensor A;
  A.basis = j.is_object() && j.contains("basis") ? basis_from_json(j.at("basis")) : fallback;
  if (!A.basis) malformed("PEPS tensor needs a basis");
  A.tensor = tensor_from_json(field(j, "tensor"));
  for (const auto& leg : {kLeft, kUp, kRight, kDown, kPhys})
    if (!A.tensor.has_leg(leg)) malformed("PEPS tensor lacks leg '" + leg + "'");
  if (A.tensor.rank() != 5) malformed("PEPS tensor must have exactly five legs");
  A.tensor = A.tensor.permuted({kLeft, kUp, kRight, kDown, kPhys});
  const int d = A.tensor.dim(kPhys);
  for (const auto& r : field(j, "rules")) {
    DefectRule rule;
    rule.src = field(r, "src").get<std::string>();
    rule.g = label_index(*A.basis, field(r, "g"));
    const Json& u = field(r, "u");
    rule.u = u.is_string() || u.is_number_integer() ? element_matrix(*A.basis, u) : matrix_from_json(u);
    if (rule.u.rows() != d || rule.u.cols() != d) malformed("rule u must be d x d");
    for (const auto& o : field(r, "outs")) {
      if (!o.is_array() || o.size() != 2) malformed("rule outs must be [leg, label] pairs");
      rule.outs.emplace_back(o[0].get<std::string>(), label_index(*A.basis, o[1]));
    }
    A.rules.push_back(std::move(rule));
  }
  A.validate();
  return A;
}

Json peps_to_json(const PEPSTensor& A) {
  Json j;
  j["basis"] = basis_to_json(*A.basis);
  j["tensor"] = tensor_to_json(A.tensor);
  Json rules = Json::array();
  for (const auto& r : A.rules) {
    Json e;
    e["src"] = r.src;
    e["g"] = A.basis->labels[r.g];
    e["u"] = matrix_to_json(r.u);
    Json outs = Json::array();
    for (const auto& [leg, h] : r.outs) outs.push_back(Json::array({leg, A.basis->labels[h]}));
    e["outs"] = outs;
    rules.push_back(e);
  }
  j["rules"] = rules;
  return j;
}

MPOTensor mpo_from_json(const Json& j, BasisPtr fallback) {
  MPOTensor O;
  if (j.is_object() && j.contains("construct")) {
    const std::string kind = j.at("construct").get<std::string>();
    if (kind == "pauli-slice") {
      BasisPtr b = j.contains("basis") ? basis_from_json(j.at("basis")) : fallback;
      if (!b) malformed("pauli-slice MPO needs a basis");
      O = pauli_slice_mpo(b);
    } else if (kind == "identity") {
      O = identity_mpo(as_int(field(j, "d"), "d"));
    } else {
      malformed("unknown MPO construction '" + kind + "'");
    }
  } else {
    ConstraintSet cs = constraints_from_json(j, fallback);
    if (cs.has_unknown) malformed("an MPO tensor needs explicit u_phys for every constraint");
    O.basis = cs.basis;
    O.constraints = std::move(cs.constraints);
    O.tensor = tensor_from_json(field(j, "tensor"));
    for (const auto& leg : {kLeft, kRight, kPhysIn, kPhysOut})
      if (!O.tensor.has_leg(leg)) malformed("MPO tensor lacks leg '" + leg + "'");
    if (O.tensor.rank() != 4) malformed("MPO tensor must have exactly four legs");
    O.tensor = O.tensor.permuted({kLeft, kRight, kPhysIn, kPhysOut});
    O.validate();
  }
  if (j.is_object() && j.contains("input_unitary")) O = apply_input_unitary(O, matrix_from_json(j.at("input_unitary")));
  return O;
}

Json mpo_to_json(const MPOTensor& O) {
  Json j;
  j["basis"] = basis_to_json(*O.basis);
  j["constraints"] = constraints_to_json(*O.basis, O.constraints);
  j["tensor"] = tensor_to_json(O.tensor);
  return j;
}

PartialCliffordMap clifford_map_from_json(const Json& j) {
  PartialCliffordMap m;
  m.n = as_int(field(j, "n"), "n");
  m.d = as_int(field(j, "d"), "d");
  for (const auto& im : field(j, "images")) {
    const int slot = as_int(field(im, "slot"), "slot");
    if (slot < 0 || slot >= m.n) malformed("image slot out of range");
    const std::string gen = field(im, "gen").get<std::string>();
    if (gen != "X" && gen != "Z") malformed("image generator must be X or Z");
    const PauliVector target = pauli_from_json(field(im, "target"));
    if (target.n != m.n || target.d != m.d) malformed("image target has the wrong n or d");
    m.add(slot, gen[0], target);
  }
  return m;
}

}  // namespace mftn::io
