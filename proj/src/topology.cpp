#include "lbhalo/topology.hpp"

#include <string>

namespace lbhalo {

namespace {

constexpr std::array<std::string_view, kNeighbourCount> kNames{
    "NNN", "NNM", "NNP", "NMN", "NMM", "NMP", "NPN", "NPM", "NPP",
    "MNN", "MNM", "MNP", "MMN", "MMP", "MPN", "MPM", "MPP",
    "PNN", "PNM", "PNP", "PMN", "PMM", "PMP", "PPN", "PPM", "PPP"};

std::string to_string(const Vec3i& v) {
  return "(" + std::to_string(v.x()) + "," + std::to_string(v.y()) + "," + std::to_string(v.z()) + ")";
}

}  // namespace

Vec3i displacement(int neighbour) {
  if (neighbour < 0 || neighbour >= kNeighbourCount) {
    throw DomainError("neighbour index out of range: " + std::to_string(neighbour));
  }
  // Skip the (0,0,0) slot that sits at flat position 13.
  const int flat = neighbour < 13 ? neighbour : neighbour + 1;
  return {flat / 9 - 1, (flat / 3) % 3 - 1, flat % 3 - 1};
}

int neighbour_index(const Vec3i& d) {
  if ((d.array().abs() > 1).any() || d.isZero()) {
    throw DomainError("not a neighbour displacement: " + to_string(d));
  }
  const int flat = 9 * (d.x() + 1) + 3 * (d.y() + 1) + (d.z() + 1);
  return flat < 13 ? flat : flat - 1;
}

std::string_view neighbour_name(int neighbour) {
  return kNames.at(static_cast<std::size_t>(neighbour));
}

CartesianTopology::CartesianTopology(const Vec3i& dims, const std::array<bool, 3>& periodic)
    : dims_(dims), periodic_(periodic) {
  if ((dims_.array() < 1).any()) throw ConfigError("process grid dimensions must be positive");
}

void CartesianTopology::check_rank(int rank) const {
  if (rank < 0 || rank >= size()) {
    throw DomainError("rank " + std::to_string(rank) + " outside 0.." + std::to_string(size() - 1));
  }
}

int CartesianTopology::rank_of(const Vec3i& coords) const {
  Vec3i c = coords;
  for (int a = 0; a < 3; ++a) {
    if (c(a) >= 0 && c(a) < dims_(a)) continue;
    if (!periodic_[static_cast<std::size_t>(a)]) {
      throw BoundaryError("coordinate " + to_string(coords) + " outside non-periodic dimension " +
                          std::to_string(a));
    }
    c(a) = ((c(a) % dims_(a)) + dims_(a)) % dims_(a);
  }
  return (c.x() * dims_.y() + c.y()) * dims_.z() + c.z();
}

Vec3i CartesianTopology::coords_of(int rank) const {
  check_rank(rank);
  return {rank / (dims_.y() * dims_.z()), (rank / dims_.z()) % dims_.y(), rank % dims_.z()};
}

int CartesianTopology::shifted(int rank, const Vec3i& d) const {
  const Vec3i target = coords_of(rank) + d;
  for (int a = 0; a < 3; ++a) {
    if (!periodic_[static_cast<std::size_t>(a)] && (target(a) < 0 || target(a) >= dims_(a))) {
      return kNoNeighbour;
    }
  }
  return rank_of(target);
}

OrthogonalNeighbours orthogonal_neighbours(const CartesianTopology& topo, int rank) {
  OrthogonalNeighbours out{};
  for (int a = 0; a < 3; ++a) {
    const Vec3i step = Vec3i::Unit(a);
    out[BACKWARD][static_cast<std::size_t>(a)] = topo.shifted(rank, -step);
    out[FORWARD][static_cast<std::size_t>(a)] = topo.shifted(rank, step);
  }
  return out;
}

FullNeighbours full_neighbours(const CartesianTopology& topo, int rank) {
  FullNeighbours out{};
  std::size_t n = 0;
  for (int x = -1; x <= 1; ++x)
    for (int y = -1; y <= 1; ++y)
      for (int z = -1; z <= 1; ++z) {
        if (x == 0 && y == 0 && z == 0) continue;
        out[n++] = topo.shifted(rank, Vec3i(x, y, z));
      }
  return out;
}

Vec3i decompose(const Vec3i& global_dims, const Vec3i& proc_dims) {
  if ((global_dims.array() < 1).any() || (proc_dims.array() < 1).any()) {
    throw ConfigError("lattice and process dimensions must be positive");
  }
  for (int a = 0; a < 3; ++a) {
    if (global_dims(a) % proc_dims(a) != 0) {
      throw ConfigError("global dimension " + std::to_string(global_dims(a)) + " on axis " +
                        std::to_string(a) + " is not divisible by " + std::to_string(proc_dims(a)) +
                        " processes");
    }
  }
  return global_dims.array() / proc_dims.array();
}

}  // namespace lbhalo
