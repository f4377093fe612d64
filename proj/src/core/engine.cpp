#include "honeymesh/core/engine.hpp"

#include <algorithm>
#include <string>

#include "honeymesh/errors.hpp"

namespace honeymesh::core {

std::uint64_t EventLoop::schedule(SimTime at, EventPayload payload) {
  if (at < clock_.now()) {
    throw SchedulingInPast("event at t=" + std::to_string(at) + " scheduled when now=" +
                           std::to_string(clock_.now()));
  }
  const std::uint64_t seq = next_seq_++;
  queue_.push_back(Event{at, seq, std::move(payload)});
  std::push_heap(queue_.begin(), queue_.end(), Later{});
  return seq;
}

std::size_t EventLoop::run_until(SimTime t_end, const Handler& handler) {
  std::size_t count = 0;
  while (!queue_.empty() && queue_.front().at <= t_end) {
    std::pop_heap(queue_.begin(), queue_.end(), Later{});
    Event ev = std::move(queue_.back());
    queue_.pop_back();
    clock_.advance(ev.at);
    if (record_order_) order_.emplace_back(ev.at, ev.seq);
    handler(ev);
    ++count;
    ++processed_;
  }
  clock_.advance(t_end);
  return count;
}

}  // namespace honeymesh::core
