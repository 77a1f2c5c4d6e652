#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mftn/tensor.hpp"

namespace mftn {

// omega(j, k) defined by P_k P_j = omega(j, k) P_j P_k.
struct CocycleTable {
  int dim_sq = 0;
  std::vector<cplx> phases;
  cplx operator()(int j, int k) const { return phases[static_cast<std::size_t>(j) * dim_sq + k]; }
};

// P_i P_j = phase * P_index.
struct GroupTable {
  int n = 0;
  std::vector<int> index;
  std::vector<cplx> phase;
  int prod(int i, int j) const { return index[static_cast<std::size_t>(i) * n + j]; }
  cplx prod_phase(int i, int j) const { return phase[static_cast<std::size_t>(i) * n + j]; }
};

struct MFBasis {
  int dim = 0;
  std::vector<Mat> elements;  // unnormalized unitaries, Tr(P_i^dag P_j) = D delta_ij
  std::vector<std::string> labels;
  std::optional<bool> is_group;
  std::optional<CocycleTable> cocycle;
  std::optional<GroupTable> table;
  bool weyl_heisenberg = false;  // elements are X^v Z^w, index v + D*w

  int size() const { return static_cast<int>(elements.size()); }
  int index_of(const std::string& label) const;
  // Index k and phase c with m = c * P_k, if m is proportional to an element.
  std::optional<std::pair<int, cplx>> find(const Mat& m, double tol = 1e-8) const;
  int identity_index() const;
  int inverse_index(int i) const;  // requires group table
  const GroupTable& group() const;
};

using BasisPtr = std::shared_ptr<const MFBasis>;

// Throws InvalidBasis when size, unitarity, orthogonality or completeness fail.
void validate_basis(const MFBasis& b, double tol = 1e-9);

MFBasis weyl_heisenberg_basis(int D);

enum class CompositeMode { Product, MixedClock };
MFBasis composite_basis(const MFBasis& b1, const MFBasis& b2, CompositeMode mode);

MFBasis hadamard_latin_basis(const std::vector<Mat>& H, const std::vector<std::vector<int>>& lam);

std::optional<CocycleTable> check_group_closure(const MFBasis& b, double tol = 1e-8);
std::optional<GroupTable> group_table(const MFBasis& b, double tol = 1e-8);

// Clock and shift matrices.
Mat shift_matrix(int D);
Mat clock_matrix(int D);
Mat fourier_matrix(int D);  // unnormalized, entries omega^{jk}

// Parses "WH:D", "product:D1,D2", "mixed:D1,D2".
MFBasis basis_from_spec(const std::string& spec);

}  // namespace mftn
