#pragma once

#include <vector>

#include "mftn/basis.hpp"
#include "mftn/mps.hpp"
#include "mftn/peps.hpp"

// Closed-form tensors used by tests, the acceptance run and the CLI.
namespace mftn::fixtures {

BasisPtr wh(int D);

Mat pauli_x();
Mat pauli_y();  // standard Y = i X Z
Mat pauli_z();
Mat hadamard();

// A^s = |s><s| + alpha/sqrt(2) I, constraints (X,X,X), (Z,I,Z).
MPSTensor copy_family(cplx alpha);
std::vector<SymmetryConstraint> copy_family_constraints();
// A^s = |s><s| H + alpha |s><0|, constraints (X,X,Z), (Z,Z,I).
MPSTensor bend_family(cplx alpha);
std::vector<SymmetryConstraint> bend_family_constraints();

// Physical basis |+1>, |0>, |-1>.
MPSTensor aklt();
Mat aklt_u(char p);  // 'X', 'Y', 'Z'

// A^s = sqrt(2) H |s><s|, constraints (X,I,Z), (Z,X,X).
MPSTensor cluster();

// Constraints (X,X,Y), (Z,Z,I); tensor is one member of the solution space.
MPSTensor non_bijective();

// Q-form tensor with the rotating map X -> Y -> Z -> X.
MPSTensor rotating();

// Alpha vectors in Weyl-Heisenberg index order (v + D w).
std::vector<cplx> ghz_alpha(int D);
std::vector<cplx> aklt_alpha();
std::vector<cplx> identity_alpha(int D);
std::vector<cplx> ones_alpha(int D);

// Topological Q-form tensors over WH(D).
PEPSTensor toric(int D);
PEPSTensor charged(int D, int k);
PEPSTensor equal_sum(int D);
PEPSTensor interpolated(double a);
PEPSTensor bell_pairs(int D);
// Subgroup of X powers with phase -2 pi k / D.
TopoSymmetrySpec x_subgroup(int D, int k = 0);

}  // namespace mftn::fixtures
