#pragma once

// Rank <-> Cartesian coordinate mapping, the 6- and 26-neighbour tables, and
// uniform domain decomposition.

#include <array>
#include <string_view>

#include "lbhalo/lattice.hpp"

namespace lbhalo {

enum Axis : int { X = 0, Y = 1, Z = 2 };
enum Direction : int { BACKWARD = 0, FORWARD = 1 };

/// The 26 neighbour displacements. Read the letters as x, y, z with
/// N = -1, M = 0, P = +1.
enum HaloNeighbour : int {
  NNN = 0, NNM, NNP, NMN, NMM, NMP, NPN, NPM, NPP,
  MNN, MNM, MNP, MMN, MMP, MPN, MPM, MPP,
  PNN, PNM, PNP, PMN, PMM, PMP, PPN, PPM, PPP
};

inline constexpr int kNeighbourCount = 26;
/// Marks a missing neighbour across a non-periodic boundary.
inline constexpr int kNoNeighbour = -1;

/// Displacement (dx, dy, dz) of a neighbour index.
Vec3i displacement(int neighbour);
/// Neighbour index of a non-zero displacement in {-1,0,1}^3.
int neighbour_index(const Vec3i& d);
/// Index of the displacement -d.
inline int opposite_neighbour(int neighbour) { return kNeighbourCount - 1 - neighbour; }
/// Three-letter enum name, e.g. "MNP".
std::string_view neighbour_name(int neighbour);

class CartesianTopology {
 public:
  explicit CartesianTopology(const Vec3i& dims, const std::array<bool, 3>& periodic = {true, true, true});

  const Vec3i& dims() const { return dims_; }
  const std::array<bool, 3>& periodic() const { return periodic_; }
  int size() const { return dims_.prod(); }

  /// Row-major rank (x slowest) after periodic wrap. Throws BoundaryError for a
  /// coordinate outside a non-periodic dimension.
  int rank_of(const Vec3i& coords) const;
  Vec3i coords_of(int rank) const;
  /// Rank at `rank + d`, or kNoNeighbour across an open boundary.
  int shifted(int rank, const Vec3i& d) const;

 private:
  void check_rank(int rank) const;

  Vec3i dims_;
  std::array<bool, 3> periodic_;
};

/// [direction][axis], as filled by a Cartesian shift of 1 along each axis.
using OrthogonalNeighbours = std::array<std::array<int, 3>, 2>;
/// Indexed by HaloNeighbour.
using FullNeighbours = std::array<int, kNeighbourCount>;

OrthogonalNeighbours orthogonal_neighbours(const CartesianTopology& topo, int rank);
FullNeighbours full_neighbours(const CartesianTopology& topo, int rank);

struct NeighbourTable {
  OrthogonalNeighbours orthogonal;
  FullNeighbours full;

  static NeighbourTable build(const CartesianTopology& topo, int rank) {
    return {orthogonal_neighbours(topo, rank), full_neighbours(topo, rank)};
  }
};

/// Local dims (X/Px, Y/Py, Z/Pz). Throws ConfigError unless every axis divides exactly.
Vec3i decompose(const Vec3i& global_dims, const Vec3i& proc_dims);

}  // namespace lbhalo
