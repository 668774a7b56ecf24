#include "lbhalo/transport.hpp"

#include <algorithm>
#include <cstring>
#include <exception>
#include <thread>

#ifdef __linux__
#include <sys/prctl.h>
#endif

namespace lbhalo::transport {

namespace detail {

struct Request {
  RequestKind kind;
  Fabric* fabric;
  int owner;
  int source;
  int dest;
  int tag;
  std::span<const std::byte> payload;  // send side
  std::span<std::byte> buffer;         // receive side
  bool matched = false;
  bool delivered = false;
  Clock::time_point ready_at{};
  std::string error;

  bool complete(Clock::time_point now) const { return delivered && now >= ready_at; }
};

}  // namespace detail

namespace {

using RequestPtr = std::shared_ptr<detail::Request>;

PendingMessage to_pending(const detail::Request& r) { return {r.kind, r.source, r.dest, r.tag}; }

// Cost-model delays are microsecond-scale; the default 50 us timer slack would
// swamp them.
void tighten_timer_slack() {
#ifdef __linux__
  thread_local bool done = false;
  if (!done) {
    prctl(PR_SET_TIMERSLACK, 1UL, 0UL, 0UL, 0UL);
    done = true;
  }
#endif
}

}  // namespace

std::string describe(const std::vector<PendingMessage>& pending) {
  if (pending.empty()) return "no unmatched messages";
  std::string out;
  for (const auto& p : pending) {
    if (!out.empty()) out += "; ";
    out += p.kind == RequestKind::Send ? "send " : "recv ";
    out += "(source " + std::to_string(p.source) + ", dest " + std::to_string(p.dest) + ", tag " +
           std::to_string(p.tag) + ")";
  }
  return out;
}

bool RequestHandle::test() const {
  if (!state_) return true;
  std::lock_guard lock(state_->fabric->mutex_);
  return state_->complete(Clock::now());
}

RequestKind RequestHandle::kind() const { return state_->kind; }
int RequestHandle::source() const { return state_->source; }
int RequestHandle::dest() const { return state_->dest; }
int RequestHandle::tag() const { return state_->tag; }

int Endpoint::world_size() const { return fabric_->size(); }

RequestHandle Endpoint::post_send(int dest, int tag, std::span<const std::byte> payload) {
  return fabric_->post(RequestKind::Send, rank_, dest, tag, payload, {});
}

RequestHandle Endpoint::post_recv(int source, int tag, std::span<std::byte> buffer) {
  return fabric_->post(RequestKind::Receive, rank_, source, tag, {}, buffer);
}

void Endpoint::barrier() { fabric_->barrier(rank_); }

Fabric::Fabric(int nranks, TransportOptions options) : nranks_(nranks), options_(options) {
  if (nranks_ < 1) throw ConfigError("fabric needs at least one rank");
  if (!(options_.watchdog_seconds > 0.0)) throw ConfigError("watchdog timeout must be positive");
  if (options_.model &&
      (!(options_.model->latency_s >= 0.0) || !(options_.model->bandwidth_MBps > 0.0))) {
    throw ConfigError("cost model needs latency >= 0 and bandwidth > 0");
  }
  ranks_.resize(static_cast<std::size_t>(nranks_));
}

Fabric::~Fabric() = default;

Endpoint Fabric::endpoint(int rank) {
  check_rank(rank, "endpoint");
  return Endpoint(this, rank);
}

void Fabric::check_rank(int rank, const char* role) const {
  if (rank < 0 || rank >= nranks_) {
    throw TransportError(std::string("invalid ") + role + " rank " + std::to_string(rank));
  }
}

RequestHandle Fabric::post(RequestKind kind, int owner, int peer, int tag, std::span<const std::byte> payload,
                           std::span<std::byte> buffer) {
  check_rank(peer, kind == RequestKind::Send ? "destination" : "source");
  if (tag < 0) throw TransportError("negative tag " + std::to_string(tag));

  auto req = std::make_shared<detail::Request>();
  req->kind = kind;
  req->fabric = this;
  req->owner = owner;
  req->source = kind == RequestKind::Send ? owner : peer;
  req->dest = kind == RequestKind::Send ? peer : owner;
  req->tag = tag;
  req->payload = payload;
  req->buffer = buffer;

  std::unique_lock lock(mutex_);
  if (aborted_) throw TransportError("fabric aborted: " + abort_reason_);
  RankState& at_dest = ranks_[static_cast<std::size_t>(req->dest)];
  auto& partners = kind == RequestKind::Send ? at_dest.unmatched_recvs : at_dest.unmatched_sends;
  const auto it = std::find_if(partners.begin(), partners.end(), [&](const RequestPtr& p) {
    return p->source == req->source && p->tag == req->tag;
  });
  if (it == partners.end()) {
    (kind == RequestKind::Send ? at_dest.unmatched_sends : at_dest.unmatched_recvs).push_back(req);
    return RequestHandle(req);
  }
  RequestPtr partner = *it;
  partners.erase(it);
  if (kind == RequestKind::Send) {
    deliver(req, partner, lock);
  } else {
    deliver(partner, req, lock);
  }
  return RequestHandle(req);
}

// Called with the lock held; releases it around the payload copy.
void Fabric::deliver(const RequestPtr& send, const RequestPtr& recv, std::unique_lock<std::mutex>& lock) {
  send->matched = recv->matched = true;
  const std::size_t bytes = send->payload.size();
  const bool truncated = bytes > recv->buffer.size();
  if (truncated) {
    recv->error = "message truncated: " + std::to_string(bytes) + " bytes into a " +
                  std::to_string(recv->buffer.size()) + "-byte buffer (source " +
                  std::to_string(send->source) + ", tag " + std::to_string(send->tag) + ")";
  }

  Clock::time_point ready{};
  if (options_.model) {
    RankState& link = ranks_[static_cast<std::size_t>(send->source)];
    const auto start = std::max(Clock::now(), link.link_free);
    ready = start + std::chrono::duration_cast<Clock::duration>(
                        std::chrono::duration<double>(options_.model->message_seconds(bytes)));
    link.link_free = ready;
  }
  send->ready_at = recv->ready_at = ready;

  lock.unlock();
  if (!truncated && bytes > 0) std::memcpy(recv->buffer.data(), send->payload.data(), bytes);
  lock.lock();

  send->delivered = recv->delivered = true;
  ++messages_delivered_;
  bytes_delivered_ += bytes;
  ranks_[static_cast<std::size_t>(send->owner)].cv.notify_all();
  ranks_[static_cast<std::size_t>(recv->owner)].cv.notify_all();
}

std::vector<PendingMessage> Fabric::pending_locked() const {
  std::vector<PendingMessage> out;
  for (const RankState& r : ranks_) {
    for (const auto& s : r.unmatched_sends) out.push_back(to_pending(*s));
    for (const auto& s : r.unmatched_recvs) out.push_back(to_pending(*s));
  }
  return out;
}

std::vector<PendingMessage> Fabric::pending() const {
  std::lock_guard lock(mutex_);
  return pending_locked();
}

void Fabric::check_quiescent() const {
  auto p = pending();
  if (!p.empty()) throw DeadlockError("unmatched messages at shutdown: " + describe(p), std::move(p));
}

void Fabric::abort(const std::string& reason) {
  std::lock_guard lock(mutex_);
  if (aborted_) return;
  aborted_ = true;
  abort_reason_ = reason;
  for (RankState& r : ranks_) r.cv.notify_all();
  barrier_cv_.notify_all();
}

void Fabric::barrier(int rank) {
  check_rank(rank, "barrier");
  std::unique_lock lock(mutex_);
  if (aborted_) throw TransportError("fabric aborted: " + abort_reason_);
  const auto generation = barrier_generation_;
  if (++barrier_count_ == nranks_) {
    barrier_count_ = 0;
    ++barrier_generation_;
    barrier_cv_.notify_all();
    return;
  }
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(options_.watchdog_seconds));
  while (generation == barrier_generation_) {
    if (aborted_) throw TransportError("fabric aborted: " + abort_reason_);
    if (barrier_cv_.wait_until(lock, deadline) == std::cv_status::timeout &&
        generation == barrier_generation_) {
      throw DeadlockError("barrier timed out on rank " + std::to_string(rank) + " with " +
                              std::to_string(barrier_count_) + " of " + std::to_string(nranks_) +
                              " ranks arrived",
                          pending_locked());
    }
  }
}

std::uint64_t Fabric::messages_delivered() const {
  std::lock_guard lock(mutex_);
  return messages_delivered_;
}

std::uint64_t Fabric::bytes_delivered() const {
  std::lock_guard lock(mutex_);
  return bytes_delivered_;
}

std::size_t Fabric::wait(std::span<RequestHandle> handles, bool any) {
  const auto first = std::find_if(handles.begin(), handles.end(), [](const auto& h) { return h.active(); });
  if (first == handles.end()) {
    if (any) throw UsageError("wait_any called with no active requests");
    return 0;
  }
  if (options_.model) tighten_timer_slack();
  RankState& self = ranks_[static_cast<std::size_t>(first->state_->owner)];
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(options_.watchdog_seconds));

  std::unique_lock lock(mutex_);
  for (;;) {
    if (aborted_) throw TransportError("fabric aborted: " + abort_reason_);
    const auto now = Clock::now();
    bool all_done = true;
    auto wake = deadline;
    for (std::size_t i = 0; i < handles.size(); ++i) {
      const auto& state = handles[i].state_;
      if (!state) continue;
      if (state->complete(now)) {
        if (any) {
          RequestPtr done = std::move(handles[i].state_);
          if (!done->error.empty()) throw TransportError(done->error);
          return i;
        }
      } else {
        all_done = false;
        if (state->delivered) wake = std::min(wake, state->ready_at);
      }
    }
    if (!any && all_done) {
      std::string error;
      for (auto& h : handles) {
        if (h.state_ && error.empty()) error = h.state_->error;
        h.state_.reset();
      }
      if (!error.empty()) throw TransportError(error);
      return 0;
    }
    if (now >= deadline) {
      std::vector<PendingMessage> waiting;
      for (const auto& h : handles)
        if (h.state_ && !h.state_->complete(now)) waiting.push_back(to_pending(*h.state_));
      throw DeadlockError("wait exceeded watchdog of " + std::to_string(options_.watchdog_seconds) +
                              " s; waiting on: " + describe(waiting) +
                              "; unmatched in fabric: " + describe(pending_locked()),
                          pending_locked());
    }
    self.cv.wait_until(lock, wake);
  }
}

void wait_all(std::span<RequestHandle> handles) {
  for (const auto& h : handles) {
    if (h.active()) {
      h.state_->fabric->wait(handles, false);
      return;
    }
  }
}

std::size_t wait_any(std::span<RequestHandle> handles) {
  for (const auto& h : handles) {
    if (h.active()) return h.state_->fabric->wait(handles, true);
  }
  throw UsageError("wait_any called with no active requests");
}

void run_ranks(Fabric& fabric, const std::function<void(Endpoint&)>& body) {
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(fabric.size()));
  for (int r = 0; r < fabric.size(); ++r) {
    threads.emplace_back([&, r] {
      Endpoint ep = fabric.endpoint(r);
      try {
        body(ep);
      } catch (const std::exception& e) {
        {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
        fabric.abort("rank " + std::to_string(r) + " failed: " + e.what());
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

PingPongSample ping_pong(std::size_t bytes, std::size_t round_trips, const TransportOptions& options) {
  if (bytes < 8) throw ConfigError("ping-pong message size must be at least 8 bytes");
  if (round_trips == 0) throw ConfigError("ping-pong needs at least one round trip");
  Fabric fabric(2, options);
  std::vector<std::byte> buffers[2] = {std::vector<std::byte>(bytes, std::byte{1}),
                                       std::vector<std::byte>(bytes, std::byte{2})};
  double elapsed = 0.0;
  run_ranks(fabric, [&](Endpoint& ep) {
    const int me = ep.rank();
    const int peer = 1 - me;
    std::span<std::byte> buf = buffers[me];
    ep.barrier();
    const auto t0 = Clock::now();
    for (std::size_t n = 0; n < round_trips; ++n) {
      const int tag = static_cast<int>(n % (1u << 20)) * 2;
      RequestHandle h[1];
      if (me == 0) {
        h[0] = ep.post_send(peer, tag, std::span<const std::byte>(buf));
        wait_all(h);
        h[0] = ep.post_recv(peer, tag + 1, buf);
        wait_all(h);
      } else {
        h[0] = ep.post_recv(peer, tag, buf);
        wait_all(h);
        h[0] = ep.post_send(peer, tag + 1, std::span<const std::byte>(buf));
        wait_all(h);
      }
    }
    if (me == 0) elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  });
  PingPongSample s;
  s.message_bytes = bytes;
  s.round_trips = round_trips;
  s.elapsed_s = elapsed;
  s.bandwidth_MBps = 2.0 * static_cast<double>(bytes) * static_cast<double>(round_trips) / elapsed / 1.0e6;
  return s;
}

std::vector<PingPongSample> ping_pong_sweep(std::span<const std::size_t> sizes, std::size_t target_bytes,
                                            const TransportOptions& options) {
  std::vector<PingPongSample> out;
  out.reserve(sizes.size());
  for (std::size_t bytes : sizes) {
    const std::size_t trips = std::max<std::size_t>(8, target_bytes / std::max<std::size_t>(bytes, 1));
    out.push_back(ping_pong(bytes, trips, options));
  }
  return out;
}

std::size_t saturation_index(std::span<const PingPongSample> samples, double fraction) {
  if (samples.empty()) throw UsageError("empty ping-pong sweep");
  double best = 0.0;
  for (const auto& s : samples) best = std::max(best, s.bandwidth_MBps);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].bandwidth_MBps >= fraction * best) return i;
  }
  return samples.size() - 1;
}

bool plateau_holds(std::span<const PingPongSample> samples, std::size_t saturation) {
  for (std::size_t a = saturation; a < samples.size(); ++a)
    for (std::size_t b = a + 1; b < samples.size(); ++b)
      if (samples[b].bandwidth_MBps < 0.5 * samples[a].bandwidth_MBps) return false;
  return true;
}

}  // namespace lbhalo::transport
