#pragma once

// Halo exchange over the transport: the staged blocking protocol (six messages,
// three wait points) and the split start/end non-blocking protocol (26 direct
// messages for planes, edges and corners).

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lbhalo/lattice.hpp"
#include "lbhalo/topology.hpp"
#include "lbhalo/transport.hpp"

namespace lbhalo {

enum class HaloStrategy { Blocking, Nonblocking };

std::string_view to_string(HaloStrategy s);
/// Accepts "blocking" or "nonblocking"; throws ConfigError otherwise.
HaloStrategy parse_strategy(std::string_view name);

/// Neighbour groups, numbered by how many displacement components are non-zero.
enum class HaloGroup { Planes = 1, Edges = 2, Corners = 3 };

HaloGroup group_of(int neighbour);

/// Inclusive box of storage coordinates.
struct SiteBox {
  Vec3i lo;
  Vec3i hi;

  Vec3i extent() const { return hi - lo + Vec3i::Ones(); }
  std::size_t site_count() const {
    const Vec3i e = extent();
    return static_cast<std::size_t>(e.x()) * static_cast<std::size_t>(e.y()) * static_cast<std::size_t>(e.z());
  }
};

/// Interior sites adjacent to the face, edge or corner facing `neighbour`.
SiteBox send_region(const Vec3i& local_dims, int neighbour);
/// Halo sites that hold data from `neighbour`.
SiteBox recv_region(const Vec3i& local_dims, int neighbour);
/// Sites sent along `axis` in the blocking protocol. Axes already exchanged
/// include their halo layers so that edges and corners propagate.
SiteBox stage_send_region(const Vec3i& local_dims, int axis, Direction toward);
SiteBox stage_recv_region(const Vec3i& local_dims, int axis, Direction from);

/// Copies a box into a flat buffer in ascending (x, y, z) order, all m components per site.
void pack_box(const DistributionField& field, const SiteBox& box, std::span<double> out);
void unpack_box(std::span<const double> in, const SiteBox& box, DistributionField& field);

/// Messages of one exchange carry tag = sequence * kTagStride + message id.
/// Ids 0..25 are non-blocking messages named by their direction of travel;
/// ids 26..31 are the blocking stage messages.
inline constexpr int kTagStride = 32;
inline constexpr int stage_message_id(int axis, Direction travel) { return 26 + 2 * axis + travel; }
int message_tag(std::uint64_t sequence, int message_id);

/// Persistent send/receive staging arrays plus the in-flight request handles.
class HaloBuffers {
 public:
  HaloBuffers(const Vec3i& local_dims, int components);

  const Vec3i& local_dims() const { return dims_; }
  int components() const { return m_; }

  std::span<double> send(int neighbour) { return send_[idx(neighbour)]; }
  std::span<const double> send(int neighbour) const { return send_[idx(neighbour)]; }
  std::span<double> recv(int neighbour) { return recv_[idx(neighbour)]; }
  std::span<const double> recv(int neighbour) const { return recv_[idx(neighbour)]; }

  std::span<double> stage_send(int axis, Direction toward) { return stage_send_[stage_idx(axis, toward)]; }
  std::span<double> stage_recv(int axis, Direction from) { return stage_recv_[stage_idx(axis, from)]; }

  /// Total doubles across the 26 receive buffers.
  std::size_t nonblocking_recv_doubles() const;
  /// Total doubles across the six blocking-stage receive buffers.
  std::size_t blocking_recv_doubles() const;

  std::array<transport::RequestHandle, kNeighbourCount> send_requests;
  std::array<transport::RequestHandle, kNeighbourCount> recv_requests;
  /// Receive buffers that unpack_halo_buffers writes into the halo shell.
  std::array<bool, kNeighbourCount> recv_active;

 private:
  static std::size_t idx(int neighbour) { return static_cast<std::size_t>(neighbour); }
  static std::size_t stage_idx(int axis, Direction d) { return static_cast<std::size_t>(2 * axis + d); }

  Vec3i dims_;
  int m_;
  std::array<std::vector<double>, kNeighbourCount> send_;
  std::array<std::vector<double>, kNeighbourCount> recv_;
  std::array<std::vector<double>, 6> stage_send_;
  std::array<std::vector<double>, 6> stage_recv_;
};

/// Packs every send buffer of one neighbour group.
void pack_group(const DistributionField& field, HaloGroup group, HaloBuffers& buffers);
/// Writes every active receive buffer into the halo shell.
void unpack_halo_buffers(const HaloBuffers& buffers, DistributionField& field);

struct HaloCounters {
  std::uint64_t exchanges = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t bytes_sent = 0;
  /// Logical completion points: three per blocking exchange, one per non-blocking end.
  std::uint64_t barriers = 0;
  /// Raw wait_all/wait_any calls.
  std::uint64_t wait_calls = 0;
  /// Waits issued inside exchange_nonblocking_start; always zero.
  std::uint64_t start_waits = 0;
};

/// Ticket for a non-blocking exchange in flight.
class HaloToken {
 public:
  bool open() const { return open_; }
  std::uint64_t sequence() const { return sequence_; }

 private:
  friend class HaloExchange;
  const DistributionField* field_ = nullptr;
  std::uint64_t sequence_ = 0;
  bool open_ = false;
};

/// One rank's halo exchanger. Owns the staging buffers and neighbour tables.
class HaloExchange {
 public:
  HaloExchange(const CartesianTopology& topo, transport::Endpoint endpoint, const Vec3i& local_dims,
               int components);

  /// Three stages (X, Y, Z), each: pack, post receives, post sends, wait.
  void exchange_blocking(DistributionField& field);

  /// Posts all 26 receives, then packs and sends planes, edges and corners.
  /// Never waits.
  HaloToken exchange_nonblocking_start(const DistributionField& field);
  /// Waits for every receive, unpacks, then waits for every send.
  void exchange_nonblocking_end(HaloToken& token, DistributionField& field);

  void exchange(DistributionField& field, HaloStrategy strategy);

  int rank() const { return endpoint_.rank(); }
  const NeighbourTable& neighbours() const { return table_; }
  const HaloCounters& counters() const { return counters_; }
  HaloBuffers& buffers() { return buffers_; }

 private:
  void check_field(const DistributionField& field) const;
  std::uint64_t next_sequence() { return sequence_++; }

  transport::Endpoint endpoint_;
  NeighbourTable table_;
  HaloBuffers buffers_;
  HaloCounters counters_;
  std::uint64_t sequence_ = 0;
  bool in_flight_ = false;
};

/// Halo site count (a+2)(b+2)(c+2) - abc.
std::size_t halo_site_count(const Vec3i& local_dims);

}  // namespace lbhalo
