#pragma once

// In-process message passing between rank contexts.
//
// Sends are synchronous and non-blocking: posting returns at once, and the send
// request completes only after a matching receive has been posted and the
// payload handed over. Messages are matched on (source, tag) in posting order.
// Buffers passed to post_send/post_recv must stay alive until their request
// completes.

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "lbhalo/errors.hpp"

namespace lbhalo::transport {

using Clock = std::chrono::steady_clock;

/// Per-message cost t = l + bytes/B, applied as an artificial delivery delay.
/// Messages leaving one rank are serialised on that rank's link.
struct CostModel {
  double latency_s = 0.0;
  double bandwidth_MBps = 1.0e6;

  double message_seconds(std::size_t bytes) const {
    return latency_s + static_cast<double>(bytes) / (bandwidth_MBps * 1.0e6);
  }
};

struct TransportOptions {
  double watchdog_seconds = 30.0;
  std::optional<CostModel> model;
};

enum class RequestKind { Send, Receive };

struct PendingMessage {
  RequestKind kind;
  int source;
  int dest;
  int tag;
};

std::string describe(const std::vector<PendingMessage>& pending);

/// Failed transfer: truncation, invalid rank, or an aborted fabric.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Raised when a wait exceeds the watchdog timeout.
class DeadlockError : public TransportError {
 public:
  DeadlockError(const std::string& what, std::vector<PendingMessage> pending)
      : TransportError(what), pending_(std::move(pending)) {}
  const std::vector<PendingMessage>& pending() const { return pending_; }

 private:
  std::vector<PendingMessage> pending_;
};

class Fabric;

namespace detail {
struct Request;
}

/// Handle to an in-flight send or receive. Waiting consumes the handle,
/// leaving it inactive; waiting on inactive handles returns immediately.
class RequestHandle {
 public:
  RequestHandle() = default;

  bool active() const { return state_ != nullptr; }
  /// True once the request has completed. Does not consume the handle.
  bool test() const;
  RequestKind kind() const;
  int source() const;
  int dest() const;
  int tag() const;

 private:
  friend class Fabric;
  friend void wait_all(std::span<RequestHandle>);
  friend std::size_t wait_any(std::span<RequestHandle>);
  explicit RequestHandle(std::shared_ptr<detail::Request> state) : state_(std::move(state)) {}
  std::shared_ptr<detail::Request> state_;
};

/// Blocks until every handle has completed.
void wait_all(std::span<RequestHandle> handles);
/// Blocks until one active handle completes; consumes it and returns its index.
/// Throws UsageError when no handle is active.
std::size_t wait_any(std::span<RequestHandle> handles);

/// One rank's view of the fabric. Not shareable between rank contexts.
class Endpoint {
 public:
  int rank() const { return rank_; }
  int world_size() const;
  Fabric& fabric() const { return *fabric_; }

  RequestHandle post_send(int dest, int tag, std::span<const std::byte> payload);
  RequestHandle post_recv(int source, int tag, std::span<std::byte> buffer);

  template <typename T>
    requires(!std::is_same_v<std::remove_const_t<T>, std::byte>)
  RequestHandle post_send(int dest, int tag, std::span<T> values) {
    return post_send(dest, tag, std::as_bytes(values));
  }
  template <typename T>
    requires(!std::is_same_v<T, std::byte> && !std::is_const_v<T>)
  RequestHandle post_recv(int source, int tag, std::span<T> values) {
    return post_recv(source, tag, std::as_writable_bytes(values));
  }

  void barrier();

 private:
  friend class Fabric;
  Endpoint(Fabric* fabric, int rank) : fabric_(fabric), rank_(rank) {}
  Fabric* fabric_;
  int rank_;
};

class Fabric {
 public:
  explicit Fabric(int nranks, TransportOptions options = {});
  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;
  ~Fabric();

  int size() const { return nranks_; }
  const TransportOptions& options() const { return options_; }
  Endpoint endpoint(int rank);

  /// Every posted but unmatched send and receive.
  std::vector<PendingMessage> pending() const;
  /// Throws DeadlockError if anything is still unmatched.
  void check_quiescent() const;
  /// Fails all current and future waits with TransportError.
  void abort(const std::string& reason);
  /// Collective barrier over all ranks, subject to the watchdog.
  void barrier(int rank);

  std::uint64_t messages_delivered() const;
  std::uint64_t bytes_delivered() const;

 private:
  friend class Endpoint;
  friend class RequestHandle;
  friend void wait_all(std::span<RequestHandle>);
  friend std::size_t wait_any(std::span<RequestHandle>);

  struct RankState {
    std::deque<std::shared_ptr<detail::Request>> unmatched_sends;  // sends addressed to this rank
    std::deque<std::shared_ptr<detail::Request>> unmatched_recvs;  // receives posted by this rank
    std::condition_variable cv;
    Clock::time_point link_free{};
  };

  RequestHandle post(RequestKind kind, int owner, int peer, int tag, std::span<const std::byte> payload,
                     std::span<std::byte> buffer);
  void deliver(const std::shared_ptr<detail::Request>& send, const std::shared_ptr<detail::Request>& recv,
               std::unique_lock<std::mutex>& lock);
  std::size_t wait(std::span<RequestHandle> handles, bool any);
  std::vector<PendingMessage> pending_locked() const;
  void check_rank(int rank, const char* role) const;

  int nranks_;
  TransportOptions options_;
  mutable std::mutex mutex_;
  std::deque<RankState> ranks_;
  std::condition_variable barrier_cv_;
  int barrier_count_ = 0;
  std::uint64_t barrier_generation_ = 0;
  bool aborted_ = false;
  std::string abort_reason_;
  std::uint64_t messages_delivered_ = 0;
  std::uint64_t bytes_delivered_ = 0;
};

/// Runs `body` once per rank, each on its own thread, and joins them. If a rank
/// throws, the fabric is aborted so the others unwind, and the first
/// exception is rethrown.
void run_ranks(Fabric& fabric, const std::function<void(Endpoint&)>& body);

struct PingPongSample {
  std::size_t message_bytes = 0;
  std::size_t round_trips = 0;
  double elapsed_s = 0.0;
  double bandwidth_MBps = 0.0;
};

/// Times `round_trips` back-and-forth exchanges of `bytes` between two ranks.
/// bandwidth = 2 * bytes * round_trips / elapsed / 1e6.
PingPongSample ping_pong(std::size_t bytes, std::size_t round_trips, const TransportOptions& options = {});

/// Ping-pong at each size, choosing round trips so every size moves roughly
/// `target_bytes` in total.
std::vector<PingPongSample> ping_pong_sweep(std::span<const std::size_t> sizes,
                                            std::size_t target_bytes = std::size_t{64} << 20,
                                            const TransportOptions& options = {});

/// First sample reaching `fraction` of the best bandwidth in the sweep.
std::size_t saturation_index(std::span<const PingPongSample> samples, double fraction = 0.8);

/// Plateau check: beyond the saturation point no later size falls below half
/// the bandwidth of an earlier one.
bool plateau_holds(std::span<const PingPongSample> samples, std::size_t saturation);

}  // namespace lbhalo::transport
