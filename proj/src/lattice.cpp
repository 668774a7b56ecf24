#include "lbhalo/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lbhalo {

namespace {

void require_interior(const DistributionField& field, const Vec3i& s) {
  if (!field.is_interior(s)) {
    throw DomainError("site (" + std::to_string(s.x()) + "," + std::to_string(s.y()) + "," +
                      std::to_string(s.z()) + ") is not an interior site");
  }
}

Eigen::Map<const SiteVector> as_vector(std::span<const double> f) {
  return {f.data(), static_cast<Eigen::Index>(f.size())};
}

}  // namespace

VelocitySet::VelocitySet(std::vector<Vec3i> velocities, const std::array<double, 4>& weight_by_norm)
    : velocities_(std::move(velocities)) {
  const auto m = static_cast<Eigen::Index>(velocities_.size());
  weights_.resize(m);
  directions_.resize(m, 3);
  opposite_.resize(velocities_.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec3i& e = velocities_[static_cast<std::size_t>(i)];
    weights_(i) = weight_by_norm[static_cast<std::size_t>(e.squaredNorm())];
    directions_.row(i) = e.cast<double>().transpose();
    const auto it = std::find(velocities_.begin(), velocities_.end(), Vec3i(-e));
    opposite_[static_cast<std::size_t>(i)] = static_cast<int>(it - velocities_.begin());
  }
}

namespace {

// Rest velocity first, then shells of increasing |e|^2; within a shell the
// x-outer, z-inner enumeration order of {-1,0,1}^3.
std::vector<Vec3i> enumerate_shells(const std::array<double, 4>& weight_by_norm) {
  std::vector<Vec3i> out;
  for (int norm = 0; norm <= 3; ++norm) {
    if (weight_by_norm[static_cast<std::size_t>(norm)] == 0.0) continue;
    for (int x = -1; x <= 1; ++x)
      for (int y = -1; y <= 1; ++y)
        for (int z = -1; z <= 1; ++z)
          if (x * x + y * y + z * z == norm) out.emplace_back(x, y, z);
  }
  return out;
}

}  // namespace

VelocitySet VelocitySet::d3q15() {
  const std::array<double, 4> w{2.0 / 9.0, 1.0 / 9.0, 0.0, 1.0 / 72.0};
  return VelocitySet(enumerate_shells(w), w);
}

VelocitySet VelocitySet::d3q19() {
  const std::array<double, 4> w{1.0 / 3.0, 1.0 / 18.0, 1.0 / 36.0, 0.0};
  return VelocitySet(enumerate_shells(w), w);
}

VelocitySet VelocitySet::d3q27() {
  const std::array<double, 4> w{8.0 / 27.0, 2.0 / 27.0, 1.0 / 54.0, 1.0 / 216.0};
  return VelocitySet(enumerate_shells(w), w);
}

VelocitySet VelocitySet::with_count(int m) {
  switch (m) {
    case 15: return d3q15();
    case 19: return d3q19();
    case 27: return d3q27();
    default:
      throw ConfigError("no velocity model with " + std::to_string(m) +
                        " velocities (supported: 15, 19, 27)");
  }
}

DistributionField::DistributionField(const Vec3i& local_dims, int components)
    : dims_(local_dims), m_(components) {
  if ((dims_.array() < 1).any()) throw ConfigError("local lattice dimensions must be positive");
  if (m_ < 1 || m_ > kMaxVelocities) {
    throw ConfigError("component count must be in 1.." + std::to_string(kMaxVelocities));
  }
  data_.assign(storage_site_count() * static_cast<std::size_t>(m_), 0.0);
}

bool DistributionField::in_storage(const Vec3i& s) const {
  return (s.array() >= 0).all() && (s.array() <= dims_.array() + 1).all();
}

bool DistributionField::is_interior(const Vec3i& s) const {
  return (s.array() >= 1).all() && (s.array() <= dims_.array()).all();
}

std::size_t DistributionField::interior_site_count() const {
  return static_cast<std::size_t>(dims_.x()) * static_cast<std::size_t>(dims_.y()) *
         static_cast<std::size_t>(dims_.z());
}

std::size_t DistributionField::storage_site_count() const {
  return static_cast<std::size_t>(dims_.x() + 2) * static_cast<std::size_t>(dims_.y() + 2) *
         static_cast<std::size_t>(dims_.z() + 2);
}

std::vector<double>& DistributionField::scratch() {
  scratch_.resize(data_.size());
  return scratch_;
}

double density(const DistributionField& field, const Vec3i& site) {
  require_interior(field, site);
  return as_vector(field.site(site)).sum();
}

Vec3d velocity(const DistributionField& field, const Vec3i& site, const VelocitySet& vs) {
  require_interior(field, site);
  const auto f = as_vector(field.site(site));
  const double rho = f.sum();
  if (rho == 0.0) throw ZeroDensityError("zero density: macroscopic velocity undefined");
  return vs.directions().transpose() * f / rho;
}

SiteVector equilibrium(double rho, const Vec3d& u, const VelocitySet& vs) {
  if (!(rho > 0.0)) throw NumericError("equilibrium requires rho > 0");
  const SiteVector eu = vs.directions() * u;
  const double uu = u.squaredNorm();
  return (vs.weights().array() * rho *
          (1.0 + 3.0 * eu.array() + 4.5 * eu.array().square() - 1.5 * uu))
      .matrix();
}

void collide(DistributionField& field, const VelocitySet& vs, double tau) {
  if (!(tau > 0.5) || !std::isfinite(tau)) throw NumericError("collide requires tau > 0.5");
  if (field.components() != vs.size()) {
    throw ConfigError("field component count does not match the velocity model");
  }
  const double omega = 1.0 / tau;
  const Vec3i& L = field.local_dims();
  for (int x = 1; x <= L.x(); ++x)
    for (int y = 1; y <= L.y(); ++y)
      for (int z = 1; z <= L.z(); ++z) {
        auto site = field.site(x, y, z);
        Eigen::Map<SiteVector> f(site.data(), static_cast<Eigen::Index>(site.size()));
        if (!f.allFinite()) throw NumericError("non-finite distribution value in collide");
        const double rho = f.sum();
        const Vec3d u = vs.directions().transpose() * f / rho;
        // With tau == 1 the first term vanishes exactly, leaving f_eq.
        f = (1.0 - omega) * f + omega * equilibrium(rho, u, vs);
      }
}

void stream(DistributionField& field, const VelocitySet& vs) {
  if (field.components() != vs.size()) {
    throw ConfigError("field component count does not match the velocity model");
  }
  std::vector<double>& next = field.scratch();
  const auto src = field.data();
  const Vec3i& L = field.local_dims();
  const int m = field.components();
  for (int x = 1; x <= L.x(); ++x)
    for (int y = 1; y <= L.y(); ++y)
      for (int z = 1; z <= L.z(); ++z) {
        const std::size_t dst = field.site_offset(x, y, z);
        for (int i = 0; i < m; ++i) {
          const Vec3i& e = vs.velocity(i);
          next[dst + static_cast<std::size_t>(i)] =
              src[field.site_offset(x - e.x(), y - e.y(), z - e.z()) + static_cast<std::size_t>(i)];
        }
      }
  field.swap_scratch();
}

double total_mass(const DistributionField& field) {
  const Vec3i& L = field.local_dims();
  double sum = 0.0;
  for (int x = 1; x <= L.x(); ++x)
    for (int y = 1; y <= L.y(); ++y)
      for (int z = 1; z <= L.z(); ++z) sum += as_vector(field.site(x, y, z)).sum();
  return sum;
}

Vec3d total_momentum(const DistributionField& field, const VelocitySet& vs) {
  const Vec3i& L = field.local_dims();
  Vec3d sum = Vec3d::Zero();
  for (int x = 1; x <= L.x(); ++x)
    for (int y = 1; y <= L.y(); ++y)
      for (int z = 1; z <= L.z(); ++z)
        sum += vs.directions().transpose() * as_vector(field.site(x, y, z));
  return sum;
}

std::uint64_t memory_estimate(const std::array<std::uint64_t, 3>& global_dims, std::uint64_t m) {
  if (m == 0 || std::any_of(global_dims.begin(), global_dims.end(), [](auto d) { return d == 0; })) {
    throw ConfigError("memory_estimate requires positive dimensions");
  }
  std::uint64_t bytes = 8;
  for (std::uint64_t factor : {m, global_dims[0], global_dims[1], global_dims[2]}) {
    if (__builtin_mul_overflow(bytes, factor, &bytes)) {
      throw OverflowError("memory estimate overflows 64-bit byte count");
    }
  }
  return bytes;
}

}  // namespace lbhalo
