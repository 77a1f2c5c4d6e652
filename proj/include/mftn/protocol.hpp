#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mftn/mps.hpp"
#include "mftn/peps.hpp"

namespace mftn {

inline const std::string kRngName = "mt19937_64";

// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);
int sample_index(const std::vector<double>& weights, std::mt19937_64& rng);

struct ProtocolRun {
  std::uint64_t seed = 0;
  std::string rng = kRngName;
  std::vector<int> outcomes;                  // per measured bond, basis index
  std::vector<double> outcome_probabilities;  // Born probability of each sampled outcome, conditioned on earlier ones
  std::vector<Mat> corrections;               // per site, on phys
  std::optional<DenseTensor> final_state;     // dense only where affordable
  double fidelity = 0;
  bool corrected = false;  // every defect was pushed away or annihilated
  bool success = false;    // corrected and fidelity > 1 - tol
  std::string message;
};

// ---- MPS chains ----

// Contracts the chain with bond matrices (identity for the target). Open: legs left, p0..p{N-1}, right.
DenseTensor mps_chain_state(const std::vector<MPSTensor>& sites, Boundary bc, const std::vector<Mat>& bonds);

ProtocolRun run_mps_protocol(const std::vector<MPSTensor>& sites, Boundary bc, std::uint64_t seed,
                             double tol = kDefaultTol);

struct MpsOutcomeResult {
  std::vector<Mat> corrections;
  std::optional<Mat> boundary;  // open boundary: operator applied on the right leg
  bool corrected = false;
  std::string message;
};
// Deterministic feedback for one outcome tuple.
MpsOutcomeResult mps_feedback(const std::vector<MPSTensor>& sites, Boundary bc, const std::vector<int>& outcomes);

struct EnumerationReport {
  std::size_t tuples = 0;
  std::size_t corrected = 0;
  double corrected_fraction = 0;     // corrected / tuples, counting every outcome tuple once
  double success_probability = 0;    // sum of Born probabilities of corrected tuples
  double max_probability_deviation = 0;  // from uniform 1/D^{2 bonds}
  std::vector<double> probabilities;
  std::vector<double> fidelities;    // for corrected tuples; 0 otherwise
  double min_fidelity = 1;
};
EnumerationReport enumerate_outcomes(const std::vector<MPSTensor>& sites, Boundary bc, double tol = kDefaultTol);

int mps_bond_count(int n, Boundary bc);

// ---- PEPS patches ----

// Drain direction of a site: defects enter on the two opposite legs and leave towards the named corner.
enum class Orientation { UR, UL, DR, DL };
Orientation parse_orientation(const std::string& s);
std::string orientation_name(Orientation o);
std::vector<std::string> orientation_in_legs(Orientation o);
std::vector<std::string> orientation_out_legs(Orientation o);

// Sites indexed y * w + x; x grows rightwards, y upwards.
struct PepsGrid {
  int w = 1;
  int h = 1;
  std::vector<PEPSTensor> sites;
  std::vector<Orientation> orientation;

  const PEPSTensor& at(int x, int y) const { return sites[y * w + x]; }
};
PepsGrid uniform_grid(const PEPSTensor& A, int w, int h, Orientation o);
// Each quadrant drains to its own corner.
PepsGrid four_corner_grid(const PEPSTensor& A, int w, int h);

struct PepsBond {
  int a = 0, b = 0;  // site indices, a left of / below b
  std::string leg_a, leg_b;
};
std::vector<PepsBond> peps_bonds(const PepsGrid& g);

ProtocolRun run_peps_protocol(const PepsGrid& g, std::uint64_t seed, double tol = kDefaultTol);
// Feedback for a fixed outcome tuple; fidelity from double-layer contraction.
ProtocolRun peps_run_with_outcomes(const PepsGrid& g, const std::vector<int>& outcomes, double tol = kDefaultTol);

struct PepsEnumeration {
  std::uint64_t tuples = 0;
  std::uint64_t corrected = 0;
  bool all_corrected = false;
  std::string first_failure;
};
// Index-level feedback over every outcome tuple; (D^2)^bonds must stay at or below 2^24.
PepsEnumeration enumerate_peps_outcomes(const PepsGrid& g);

}  // namespace mftn
