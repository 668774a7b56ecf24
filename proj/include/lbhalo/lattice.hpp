#pragma once

// Discrete-velocity models, the per-rank distribution field with its one-site
// halo shell, and the BGK collide/stream update.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lbhalo/errors.hpp"

namespace lbhalo {

using Vec3i = Eigen::Vector3i;
using Vec3d = Eigen::Vector3d;

inline constexpr int kMaxVelocities = 27;

/// Per-site column of distribution values. Fixed capacity keeps it on the stack.
using SiteVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxVelocities, 1>;
/// Velocity vectors as rows, one per discrete direction.
using DirectionMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor, kMaxVelocities, 3>;

/// A DnQm discrete-velocity model in three dimensions.
///
/// Index 0 is always the rest velocity. The remaining velocities are ordered by
/// squared length and then lexicographically over (x, y, z) in {-1, 0, 1}.
class VelocitySet {
 public:
  static VelocitySet d3q15();
  static VelocitySet d3q19();
  static VelocitySet d3q27();
  /// Model with `m` velocities; throws ConfigError unless m is 15, 19 or 27.
  static VelocitySet with_count(int m);

  int size() const { return static_cast<int>(velocities_.size()); }
  const Vec3i& velocity(int i) const { return velocities_[static_cast<std::size_t>(i)]; }
  double weight(int i) const { return weights_(i); }
  int opposite(int i) const { return opposite_[static_cast<std::size_t>(i)]; }

  std::span<const Vec3i> velocities() const { return velocities_; }
  const SiteVector& weights() const { return weights_; }
  /// m x 3 matrix with e_i as row i, for moment expressions.
  const DirectionMatrix& directions() const { return directions_; }

 private:
  VelocitySet(std::vector<Vec3i> velocities, const std::array<double, 4>& weight_by_norm);

  std::vector<Vec3i> velocities_;
  SiteVector weights_;
  DirectionMatrix directions_;
  std::vector<int> opposite_;
};

/// Distribution values f_i(r) on a local subdomain plus a one-site halo shell.
///
/// Storage coordinates run 0..L+1 per axis with the interior at 1..L. Layout is
/// site-major: index = ((x*(Ly+2) + y)*(Lz+2) + z)*m + i, so a z-run of sites is
/// contiguous.
class DistributionField {
 public:
  DistributionField(const Vec3i& local_dims, int components);

  const Vec3i& local_dims() const { return dims_; }
  Vec3i storage_dims() const { return dims_.array() + 2; }
  int components() const { return m_; }

  std::size_t site_offset(int x, int y, int z) const {
    return ((static_cast<std::size_t>(x) * static_cast<std::size_t>(dims_.y() + 2) +
             static_cast<std::size_t>(y)) *
                static_cast<std::size_t>(dims_.z() + 2) +
            static_cast<std::size_t>(z)) *
           static_cast<std::size_t>(m_);
  }
  std::size_t site_offset(const Vec3i& s) const { return site_offset(s.x(), s.y(), s.z()); }

  std::span<double> site(int x, int y, int z) {
    return {data_.data() + site_offset(x, y, z), static_cast<std::size_t>(m_)};
  }
  std::span<const double> site(int x, int y, int z) const {
    return {data_.data() + site_offset(x, y, z), static_cast<std::size_t>(m_)};
  }
  std::span<double> site(const Vec3i& s) { return site(s.x(), s.y(), s.z()); }
  std::span<const double> site(const Vec3i& s) const { return site(s.x(), s.y(), s.z()); }

  double& operator()(int x, int y, int z, int i) {
    return data_[site_offset(x, y, z) + static_cast<std::size_t>(i)];
  }
  double operator()(int x, int y, int z, int i) const {
    return data_[site_offset(x, y, z) + static_cast<std::size_t>(i)];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool in_storage(const Vec3i& s) const;
  bool is_interior(const Vec3i& s) const;
  bool is_halo(const Vec3i& s) const { return in_storage(s) && !is_interior(s); }

  std::size_t interior_site_count() const;
  std::size_t storage_site_count() const;
  std::size_t halo_site_count() const { return storage_site_count() - interior_site_count(); }

  /// Exchanges storage with the scratch buffer; used by double-buffered streaming.
  std::vector<double>& scratch();
  void swap_scratch() { data_.swap(scratch_); }

  friend bool operator==(const DistributionField& a, const DistributionField& b) {
    return a.dims_ == b.dims_ && a.m_ == b.m_ && a.data_ == b.data_;
  }

 private:
  Vec3i dims_;
  int m_;
  std::vector<double> data_;
  std::vector<double> scratch_;
};

/// rho = sum_i f_i at an interior site. Throws DomainError outside the interior.
double density(const DistributionField& field, const Vec3i& site);

/// u = (1/rho) sum_i f_i e_i. Throws ZeroDensityError when rho == 0.
Vec3d velocity(const DistributionField& field, const Vec3i& site, const VelocitySet& vs);

/// Second-order polynomial equilibrium
/// f_i = w_i rho [1 + 3 e.u + 9/2 (e.u)^2 - 3/2 u.u].
SiteVector equilibrium(double rho, const Vec3d& u, const VelocitySet& vs);

/// BGK relaxation f <- f - (f - f_eq)/tau on every interior site.
/// Requires tau > 0.5 and a finite field.
void collide(DistributionField& field, const VelocitySet& vs, double tau);

/// Pull streaming f_i(r) <- f_i(r - e_i) over the interior. The halo shell must
/// already hold neighbour data; its contents afterwards are unspecified.
void stream(DistributionField& field, const VelocitySet& vs);

/// Sum of all distribution values over the interior.
double total_mass(const DistributionField& field);
/// Sum of f_i e_i over the interior.
Vec3d total_momentum(const DistributionField& field, const VelocitySet& vs);

/// Bytes needed to hold m doubles per site of an X*Y*Z lattice.
/// Throws OverflowError if the product does not fit in 64 bits.
std::uint64_t memory_estimate(const std::array<std::uint64_t, 3>& global_dims, std::uint64_t m);

}  // namespace lbhalo
