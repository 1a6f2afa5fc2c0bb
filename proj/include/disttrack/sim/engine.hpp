#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "disttrack/sim/comm_stats.hpp"
#include "disttrack/sim/message.hpp"
#include "disttrack/sim/protocol.hpp"

namespace disttrack {

// Global arrival index: probe t is taken after the (t+1)-th element.
using TimeInstant = std::uint64_t;

struct Arrival {
  SiteId site = 0;
  Key key = 0;
};

class ArrivalSource {
 public:
  virtual ~ArrivalSource() = default;
  virtual bool next(Arrival& arrival) = 0;
};

struct QueryOutcome {
  Query query;
  double truth = 0;
  double estimate = 0;
};

struct ExperimentRecord {
  TimeInstant t = 0;
  // Worst query at this probe (largest absolute error).
  double truth = 0;
  double estimate = 0;
  double abs_err = 0;
  double rel_err = 0;
  SiteTraffic comm;
  std::uint64_t peak_site_words = 0;
  std::vector<QueryOutcome> queries;
};

struct LoggedMessage {
  std::uint64_t seq = 0;
  Message message;

  bool operator==(const LoggedMessage&) const = default;
};

// Supplies the queries (with ground truth) to ask at probe time t.
using ProbePlanner =
    std::function<std::vector<QueryOutcome>(TimeInstant t, const Protocol&)>;

struct RunOptions {
  bool keep_log = false;
  // Called after every arrival's cascade reaches quiescence.
  std::function<void(TimeInstant, const Protocol&)> after_arrival;
};

struct SimulationResult {
  std::vector<ExperimentRecord> records;
  CommStats stats;
  std::vector<LoggedMessage> log;
  std::uint64_t arrivals = 0;
};

class Simulator {
 public:
  Simulator(Protocol& protocol, RunOptions options = {});

  SimulationResult run(ArrivalSource& source,
                       std::span<const TimeInstant> probes,
                       const ProbePlanner& planner);

 private:
  void dispatch(Outbox& out);
  void drain();
  void account(const Message& message);

  Protocol& protocol_;
  RunOptions options_;
  SiteId k_;
  SimulationResult result_;
  std::vector<Message> queue_;
  std::size_t head_ = 0;
  std::uint64_t seq_ = 0;
};

SimulationResult run_simulation(Protocol& protocol, ArrivalSource& source,
                                std::span<const TimeInstant> probes,
                                const ProbePlanner& planner,
                                RunOptions options = {});

// CSV columns: run_id, seq, from, to, kind, words.
void write_message_log_csv(std::ostream& os, std::uint64_t run_id,
                           std::span<const LoggedMessage> log,
                           bool header = true);

}  // namespace disttrack
