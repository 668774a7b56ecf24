#include "lbhalo/halo.hpp"

#include <cstring>
#include <string>

namespace lbhalo {

namespace {

constexpr std::array<char, 3> kAxisName{'X', 'Y', 'Z'};

std::size_t box_doubles(const SiteBox& box, int m) { return box.site_count() * static_cast<std::size_t>(m); }

}  // namespace

std::string_view to_string(HaloStrategy s) {
  return s == HaloStrategy::Blocking ? "blocking" : "nonblocking";
}

HaloStrategy parse_strategy(std::string_view name) {
  if (name == "blocking") return HaloStrategy::Blocking;
  if (name == "nonblocking") return HaloStrategy::Nonblocking;
  throw ConfigError("unknown halo strategy '" + std::string(name) + "' (expected blocking or nonblocking)");
}

HaloGroup group_of(int neighbour) {
  const Vec3i d = displacement(neighbour);
  return static_cast<HaloGroup>(d.cwiseAbs().sum());
}

SiteBox send_region(const Vec3i& L, int neighbour) {
  const Vec3i d = displacement(neighbour);
  SiteBox box;
  for (int a = 0; a < 3; ++a) {
    box.lo(a) = d(a) == 1 ? L(a) : 1;
    box.hi(a) = d(a) == -1 ? 1 : L(a);
  }
  return box;
}

SiteBox recv_region(const Vec3i& L, int neighbour) {
  const Vec3i d = displacement(neighbour);
  SiteBox box;
  for (int a = 0; a < 3; ++a) {
    if (d(a) == 0) {
      box.lo(a) = 1;
      box.hi(a) = L(a);
    } else {
      box.lo(a) = box.hi(a) = d(a) == -1 ? 0 : L(a) + 1;
    }
  }
  return box;
}

SiteBox stage_send_region(const Vec3i& L, int axis, Direction toward) {
  SiteBox box;
  for (int a = 0; a < 3; ++a) {
    if (a == axis) {
      box.lo(a) = box.hi(a) = toward == BACKWARD ? 1 : L(a);
    } else {
      box.lo(a) = a < axis ? 0 : 1;
      box.hi(a) = a < axis ? L(a) + 1 : L(a);
    }
  }
  return box;
}

SiteBox stage_recv_region(const Vec3i& L, int axis, Direction from) {
  SiteBox box = stage_send_region(L, axis, from);
  box.lo(axis) = box.hi(axis) = from == BACKWARD ? 0 : L(axis) + 1;
  return box;
}

void pack_box(const DistributionField& field, const SiteBox& box, std::span<double> out) {
  const std::size_t m = static_cast<std::size_t>(field.components());
  if (out.size() != box_doubles(box, field.components())) {
    throw ConfigError("pack buffer holds " + std::to_string(out.size()) + " doubles, region needs " +
                      std::to_string(box_doubles(box, field.components())));
  }
  const auto src = field.data();
  const std::size_t run = static_cast<std::size_t>(box.extent().z()) * m;
  double* dst = out.data();
  for (int x = box.lo.x(); x <= box.hi.x(); ++x)
    for (int y = box.lo.y(); y <= box.hi.y(); ++y) {
      std::memcpy(dst, src.data() + field.site_offset(x, y, box.lo.z()), run * sizeof(double));
      dst += run;
    }
}

void unpack_box(std::span<const double> in, const SiteBox& box, DistributionField& field) {
  const std::size_t m = static_cast<std::size_t>(field.components());
  if (in.size() != box_doubles(box, field.components())) {
    throw ConfigError("unpack buffer holds " + std::to_string(in.size()) + " doubles, region needs " +
                      std::to_string(box_doubles(box, field.components())));
  }
  const auto dst = field.data();
  const std::size_t run = static_cast<std::size_t>(box.extent().z()) * m;
  const double* src = in.data();
  for (int x = box.lo.x(); x <= box.hi.x(); ++x)
    for (int y = box.lo.y(); y <= box.hi.y(); ++y) {
      std::memcpy(dst.data() + field.site_offset(x, y, box.lo.z()), src, run * sizeof(double));
      src += run;
    }
}

int message_tag(std::uint64_t sequence, int message_id) {
  // Sequence wraps well before int overflow; consecutive exchanges stay distinct.
  constexpr std::uint64_t kWrap = std::uint64_t{1} << 24;
  return static_cast<int>(sequence % kWrap) * kTagStride + message_id;
}

HaloBuffers::HaloBuffers(const Vec3i& local_dims, int components) : dims_(local_dims), m_(components) {
  if ((dims_.array() < 1).any()) throw ConfigError("local lattice dimensions must be positive");
  if (m_ < 1 || m_ > kMaxVelocities) throw ConfigError("component count out of range");
  for (int n = 0; n < kNeighbourCount; ++n) {
    send_[idx(n)].assign(box_doubles(send_region(dims_, n), m_), 0.0);
    recv_[idx(n)].assign(box_doubles(recv_region(dims_, n), m_), 0.0);
  }
  for (int a = 0; a < 3; ++a)
    for (Direction d : {BACKWARD, FORWARD}) {
      stage_send_[stage_idx(a, d)].assign(box_doubles(stage_send_region(dims_, a, d), m_), 0.0);
      stage_recv_[stage_idx(a, d)].assign(box_doubles(stage_recv_region(dims_, a, d), m_), 0.0);
    }
  recv_active.fill(true);
}

std::size_t HaloBuffers::nonblocking_recv_doubles() const {
  std::size_t n = 0;
  for (const auto& b : recv_) n += b.size();
  return n;
}

std::size_t HaloBuffers::blocking_recv_doubles() const {
  std::size_t n = 0;
  for (const auto& b : stage_recv_) n += b.size();
  return n;
}

namespace {

void check_buffers(const DistributionField& field, const HaloBuffers& buffers) {
  if (field.local_dims() != buffers.local_dims() || field.components() != buffers.components()) {
    throw ConfigError("halo buffers were sized for a different field");
  }
}

}  // namespace

void pack_group(const DistributionField& field, HaloGroup group, HaloBuffers& buffers) {
  check_buffers(field, buffers);
  for (int n = 0; n < kNeighbourCount; ++n) {
    if (group_of(n) == group) pack_box(field, send_region(field.local_dims(), n), buffers.send(n));
  }
}

void unpack_halo_buffers(const HaloBuffers& buffers, DistributionField& field) {
  check_buffers(field, buffers);
  for (int n = 0; n < kNeighbourCount; ++n) {
    if (buffers.recv_active[static_cast<std::size_t>(n)]) {
      unpack_box(buffers.recv(n), recv_region(field.local_dims(), n), field);
    }
  }
}

std::size_t halo_site_count(const Vec3i& L) {
  const auto prod = [](const Vec3i& v) {
    return static_cast<std::size_t>(v.x()) * static_cast<std::size_t>(v.y()) * static_cast<std::size_t>(v.z());
  };
  return prod(L.array() + 2) - prod(L);
}

HaloExchange::HaloExchange(const CartesianTopology& topo, transport::Endpoint endpoint, const Vec3i& local_dims,
                           int components)
    : endpoint_(endpoint),
      table_(NeighbourTable::build(topo, endpoint.rank())),
      buffers_(local_dims, components) {
  if (topo.size() != endpoint.world_size()) {
    throw ConfigError("topology has " + std::to_string(topo.size()) + " ranks but the fabric has " +
                      std::to_string(endpoint.world_size()));
  }
}

void HaloExchange::check_field(const DistributionField& field) const { check_buffers(field, buffers_); }

void HaloExchange::exchange_blocking(DistributionField& field) {
  check_field(field);
  if (in_flight_) throw UsageError("a non-blocking exchange is still in flight");
  const std::uint64_t seq = next_sequence();
  const Vec3i& L = field.local_dims();

  for (int axis = 0; axis < 3; ++axis) {
    const int back = table_.orthogonal[BACKWARD][static_cast<std::size_t>(axis)];
    const int fwd = table_.orthogonal[FORWARD][static_cast<std::size_t>(axis)];
    std::array<transport::RequestHandle, 4> reqs;

    if (back != kNoNeighbour) pack_box(field, stage_send_region(L, axis, BACKWARD), buffers_.stage_send(axis, BACKWARD));
    if (fwd != kNoNeighbour) pack_box(field, stage_send_region(L, axis, FORWARD), buffers_.stage_send(axis, FORWARD));

    // A message from the forward neighbour travels backward, and vice versa.
    if (fwd != kNoNeighbour) {
      reqs[0] = endpoint_.post_recv(fwd, message_tag(seq, stage_message_id(axis, BACKWARD)),
                                    buffers_.stage_recv(axis, FORWARD));
      ++counters_.messages_received;
    }
    if (back != kNoNeighbour) {
      reqs[1] = endpoint_.post_recv(back, message_tag(seq, stage_message_id(axis, FORWARD)),
                                    buffers_.stage_recv(axis, BACKWARD));
      ++counters_.messages_received;
    }
    for (Direction toward : {BACKWARD, FORWARD}) {
      const int dest = toward == BACKWARD ? back : fwd;
      if (dest == kNoNeighbour) continue;
      auto payload = buffers_.stage_send(axis, toward);
      reqs[2 + toward] = endpoint_.post_send(dest, message_tag(seq, stage_message_id(axis, toward)), payload);
      ++counters_.messages_sent;
      counters_.bytes_sent += payload.size() * sizeof(double);
    }

    try {
      transport::wait_all(reqs);
    } catch (const transport::DeadlockError& e) {
      throw transport::DeadlockError(std::string("blocked in ") + kAxisName[static_cast<std::size_t>(axis)] +
                                         " stage: " + e.what(),
                                     e.pending());
    }
    ++counters_.wait_calls;
    ++counters_.barriers;

    if (fwd != kNoNeighbour) unpack_box(buffers_.stage_recv(axis, FORWARD), stage_recv_region(L, axis, FORWARD), field);
    if (back != kNoNeighbour) unpack_box(buffers_.stage_recv(axis, BACKWARD), stage_recv_region(L, axis, BACKWARD), field);
  }
  ++counters_.exchanges;
}

HaloToken HaloExchange::exchange_nonblocking_start(const DistributionField& field) {
  check_field(field);
  if (in_flight_) throw UsageError("a non-blocking exchange is already in flight");
  HaloToken token;
  token.field_ = &field;
  token.sequence_ = next_sequence();
  token.open_ = true;

  for (int n = 0; n < kNeighbourCount; ++n) {
    const auto slot = static_cast<std::size_t>(n);
    const int source = table_.full[slot];
    buffers_.recv_active[slot] = source != kNoNeighbour;
    if (source == kNoNeighbour) continue;
    buffers_.recv_requests[slot] =
        endpoint_.post_recv(source, message_tag(token.sequence_, opposite_neighbour(n)), buffers_.recv(n));
    ++counters_.messages_received;
  }

  for (HaloGroup group : {HaloGroup::Planes, HaloGroup::Edges, HaloGroup::Corners}) {
    pack_group(field, group, buffers_);
    for (int n = 0; n < kNeighbourCount; ++n) {
      const int dest = table_.full[static_cast<std::size_t>(n)];
      if (group_of(n) != group || dest == kNoNeighbour) continue;
      auto payload = buffers_.send(n);
      buffers_.send_requests[static_cast<std::size_t>(n)] =
          endpoint_.post_send(dest, message_tag(token.sequence_, n), payload);
      ++counters_.messages_sent;
      counters_.bytes_sent += payload.size() * sizeof(double);
    }
  }
  in_flight_ = true;
  return token;
}

void HaloExchange::exchange_nonblocking_end(HaloToken& token, DistributionField& field) {
  if (!token.open_) throw UsageError("halo exchange token already ended");
  if (token.field_ != &field) throw UsageError("halo exchange token belongs to a different field");

  std::size_t expected = 0;
  for (const auto& r : buffers_.recv_requests) expected += r.active() ? 1 : 0;
  try {
    for (std::size_t n = 0; n < expected; ++n) {
      transport::wait_any(buffers_.recv_requests);
      ++counters_.wait_calls;
    }
  } catch (const transport::DeadlockError& e) {
    std::string outstanding;
    for (int n = 0; n < kNeighbourCount; ++n) {
      if (!buffers_.recv_requests[static_cast<std::size_t>(n)].active()) continue;
      if (!outstanding.empty()) outstanding += ",";
      outstanding += neighbour_name(n);
    }
    throw transport::DeadlockError("non-blocking halo end: outstanding receives [" + outstanding + "]: " + e.what(),
                                   e.pending());
  }
  unpack_halo_buffers(buffers_, field);
  transport::wait_all(buffers_.send_requests);
  ++counters_.wait_calls;
  ++counters_.barriers;
  ++counters_.exchanges;
  token.open_ = false;
  in_flight_ = false;
}

void HaloExchange::exchange(DistributionField& field, HaloStrategy strategy) {
  if (strategy == HaloStrategy::Blocking) {
    exchange_blocking(field);
  } else {
    HaloToken token = exchange_nonblocking_start(field);
    exchange_nonblocking_end(token, field);
  }
}

}  // namespace lbhalo
