#include "disttrack/sim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace disttrack {

Simulator::Simulator(Protocol& protocol, RunOptions options)
    : protocol_(protocol),
      options_(std::move(options)),
      k_(protocol.num_sites()) {
  if (k_ < 1) throw std::invalid_argument("protocol must have k >= 1 sites");
}

void Simulator::account(const Message& message) {
  if (options_.keep_log) result_.log.push_back({seq_, message});
  ++seq_;
}

void Simulator::dispatch(Outbox& out) {
  for (Message& message : out.messages_) {
    if (message.from != out.owner_) {
      throw ContractViolation(
          "no spontaneous communication: " + message.from.to_string() +
          " sent " + std::string(kind_name(message.kind)) + " while " +
          out.owner_.to_string() + " was active");
    }
    if (message.from.is_coordinator() == message.to.is_coordinator()) {
      throw ContractViolation(
          "messages must travel between a site and the coordinator: " +
          message.from.to_string() + " -> " + message.to.to_string());
    }
    if (message.to.is_site() && message.to.index() >= k_) {
      throw ContractViolation("destination " + message.to.to_string() +
                              " out of range");
    }
    if (message.payload.empty()) {
      throw ContractViolation("message " +
                              std::string(kind_name(message.kind)) +
                              " carries no words");
    }
    result_.stats.charge(message);
    account(message);
    queue_.push_back(std::move(message));
  }
  for (Message& message : out.broadcasts_) {
    if (!out.owner_.is_coordinator()) {
      throw ContractViolation("only the coordinator may broadcast");
    }
    if (message.payload.empty()) {
      throw ContractViolation("broadcast carries no words");
    }
    result_.stats.charge_broadcast(message.words());
    for (SiteId i = 0; i < k_; ++i) {
      Message copy = message;
      copy.to = Endpoint::site(i);
      account(copy);
      queue_.push_back(std::move(copy));
    }
  }
  out.messages_.clear();
  out.broadcasts_.clear();
}

void Simulator::drain() {
  while (head_ < queue_.size()) {
    // Handlers may append to queue_, so copy out before dispatching.
    Message message = std::move(queue_[head_++]);
    Outbox out(message.to);
    if (message.to.is_coordinator()) {
      protocol_.on_coordinator_message(message, out);
    } else {
      protocol_.on_site_message(message.to.index(), message, out);
    }
    if (!out.empty()) dispatch(out);
  }
  queue_.clear();
  head_ = 0;
}

SimulationResult Simulator::run(ArrivalSource& source,
                                std::span<const TimeInstant> probes,
                                const ProbePlanner& planner) {
  if (!std::is_sorted(probes.begin(), probes.end())) {
    throw std::invalid_argument("probes must be sorted ascending");
  }
  result_ = SimulationResult{};
  result_.stats = CommStats(k_);
  seq_ = 0;

  std::size_t next_probe = 0;
  Arrival arrival;
  TimeInstant t = 0;
  for (; source.next(arrival); ++t) {
    if (arrival.site >= k_) {
      throw std::out_of_range("arrival at site " +
                              std::to_string(arrival.site) + " with k = " +
                              std::to_string(k_));
    }
    Outbox out(Endpoint::site(arrival.site));
    protocol_.on_arrival(arrival.site, arrival.key, out);
    if (!out.empty()) {
      dispatch(out);
      drain();
    }
    if (options_.after_arrival) options_.after_arrival(t, protocol_);

    while (next_probe < probes.size() && probes[next_probe] < t) ++next_probe;
    if (next_probe < probes.size() && probes[next_probe] == t) {
      ExperimentRecord record;
      record.t = t;
      record.comm = result_.stats.totals();
      record.peak_site_words = protocol_.peak_site_words();
      if (planner) record.queries = planner(t, protocol_);
      double worst = -1;
      for (const QueryOutcome& q : record.queries) {
        const double err = std::abs(q.estimate - q.truth);
        if (err > worst) {
          worst = err;
          record.truth = q.truth;
          record.estimate = q.estimate;
          record.abs_err = err;
          record.rel_err = q.truth != 0 ? err / std::abs(q.truth) : err;
        }
      }
      result_.records.push_back(std::move(record));
      while (next_probe < probes.size() && probes[next_probe] == t) {
        ++next_probe;
      }
    }
  }
  result_.arrivals = t;
  return std::move(result_);
}

SimulationResult run_simulation(Protocol& protocol, ArrivalSource& source,
                                std::span<const TimeInstant> probes,
                                const ProbePlanner& planner,
                                RunOptions options) {
  Simulator sim(protocol, std::move(options));
  return sim.run(source, probes, planner);
}

void write_message_log_csv(std::ostream& os, std::uint64_t run_id,
                           std::span<const LoggedMessage> log, bool header) {
  if (header) os << "run_id,seq,from,to,kind,words\n";
  for (const LoggedMessage& entry : log) {
    os << run_id << ',' << entry.seq << ',' << entry.message.from.to_string()
       << ',' << entry.message.to.to_string() << ','
       << kind_name(entry.message.kind) << ',' << entry.message.words()
       << '\n';
  }
}

}  // namespace disttrack
