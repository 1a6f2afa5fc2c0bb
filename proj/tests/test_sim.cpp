#include <sstream>

#include "disttrack/count/count_tracker.hpp"
#include "disttrack/sim/comm_stats.hpp"
#include "disttrack/sim/engine.hpp"
#include "disttrack/workload/workload.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace disttrack;
using disttrack::testing::VectorSource;

namespace {

// Forwards every arrival. The coordinator answers a value v > 0 with v - 1
// and the site echoes it back, so key v produces a 2v-message cascade.
class EchoProtocol : public Protocol {
 public:
  explicit EchoProtocol(SiteId k, std::size_t words = 1)
      : k_(k), words_(words) {}

  SiteId num_sites() const override { return k_; }
  void on_arrival(SiteId, Key key, Outbox& out) override {
    out.send(Endpoint::coordinator(), MessageKind::kTest,
             std::vector<std::uint64_t>(words_, key));
  }
  void on_site_message(SiteId, const Message& m, Outbox& out) override {
    if (m.payload[0] > 0) {
      out.send(Endpoint::coordinator(), MessageKind::kTest, {m.payload[0]});
    }
  }
  void on_coordinator_message(const Message& m, Outbox& out) override {
    ++received;
    if (m.payload[0] > 0) {
      out.send(m.from, MessageKind::kTest, {m.payload[0] - 1});
    }
  }
  bool supports(QueryKind) const override { return true; }
  double estimate(const Query&) const override {
    return static_cast<double>(received);
  }

  int received = 0;

 private:
  SiteId k_;
  std::size_t words_;
};

// Sends a message on behalf of a site that was not activated.
class RogueProtocol : public EchoProtocol {
 public:
  RogueProtocol() : EchoProtocol(2) {}
  void on_arrival(SiteId, Key, Outbox& out) override {
    out.send(Message{Endpoint::site(1), Endpoint::coordinator(),
                     MessageKind::kTest, 0, {1}});
  }
};

// Broadcasts on every received message.
class BroadcastProtocol : public EchoProtocol {
 public:
  explicit BroadcastProtocol(SiteId k) : EchoProtocol(k) {}
  void on_coordinator_message(const Message&, Outbox& out) override {
    out.broadcast(MessageKind::kTest, {7, 8});
  }
  void on_site_message(SiteId, const Message&, Outbox&) override {}
};

}  // namespace

TEST_CASE("empty workload yields no records and zero stats") {
  EchoProtocol protocol(3);
  VectorSource source({});
  auto result = run_simulation(protocol, source, {}, nullptr);
  CHECK(result.records.empty());
  CHECK(result.arrivals == 0);
  CHECK(result.stats.total_messages() == 0);
  CHECK(result.stats.total_words() == 0);
}

TEST_CASE("a forwarded arrival costs one message of payload size") {
  EchoProtocol protocol(1, 3);
  VectorSource source({{0, 0}});
  auto result = run_simulation(protocol, source, {}, nullptr);
  CHECK(result.stats.messages_up() == 1);
  CHECK(result.stats.words_up() == 3);
  CHECK(result.stats.messages_down() == 0);
}

TEST_CASE("cascades run to quiescence before the next arrival") {
  EchoProtocol protocol(2);
  VectorSource source({{0, 4}, {1, 0}});
  std::vector<int> seen;
  RunOptions options;
  options.after_arrival = [&](TimeInstant, const Protocol& p) {
    seen.push_back(static_cast<const EchoProtocol&>(p).received);
  };
  auto result = run_simulation(protocol, source, {}, nullptr, options);
  // up 4, down 3, up 3, ..., down 0: four round trips.
  REQUIRE(seen.size() == 2);
  CHECK(seen[0] == 4);
  CHECK(seen[1] == 5);
  CHECK(result.stats.messages_down() == 4);
  CHECK(result.stats.messages_up() == 5);
}

TEST_CASE("emitting for a non-activated endpoint is a contract violation") {
  RogueProtocol protocol;
  VectorSource source({{0, 1}});
  CHECK_THROWS_AS(run_simulation(protocol, source, {}, nullptr),
                  ContractViolation);
}

TEST_CASE("sites may not broadcast and messages need words") {
  struct SiteBroadcast : EchoProtocol {
    SiteBroadcast() : EchoProtocol(2) {}
    void on_arrival(SiteId, Key, Outbox& out) override {
      out.broadcast(MessageKind::kTest, {1});
    }
  } site_broadcast;
  VectorSource a({{0, 1}});
  CHECK_THROWS_AS(run_simulation(site_broadcast, a, {}, nullptr),
                  ContractViolation);

  struct Empty : EchoProtocol {
    Empty() : EchoProtocol(2) {}
    void on_arrival(SiteId, Key, Outbox& out) override {
      out.send(Endpoint::coordinator(), MessageKind::kTest, {});
    }
  } empty;
  VectorSource b({{0, 1}});
  CHECK_THROWS_AS(run_simulation(empty, b, {}, nullptr), ContractViolation);
}

TEST_CASE("broadcast is charged k messages and logged per site") {
  BroadcastProtocol protocol(5);
  VectorSource source({{0, 1}, {3, 2}});
  RunOptions options;
  options.keep_log = true;
  auto result = run_simulation(protocol, source, {}, nullptr, options);
  CHECK(result.stats.messages_down() == 10);
  CHECK(result.stats.words_down() == 20);
  CHECK(result.stats.messages_up() == 2);
  CHECK(result.log.size() == 12);
  CHECK(disttrack::testing::recount(result.log, 5) == result.stats);
  for (const SiteTraffic& site : result.stats.per_site()) {
    CHECK(site.messages_down == 2);
  }
}

TEST_CASE("charge_broadcast") {
  CommStats a = charge_broadcast(CommStats{}, 1, 4);
  CHECK(a.messages_down() == 4);
  CHECK(a.words_down() == 4);

  CommStats b = charge_broadcast(CommStats{}, 2, 1);
  CHECK(b.messages_down() == 1);
  CHECK(b.words_down() == 2);

  CommStats c = charge_broadcast(charge_broadcast(CommStats{}, 1, 3), 1, 3);
  CHECK(c.messages_down() == 6);

  CHECK_THROWS_AS(charge_broadcast(CommStats(2), 1, 3), std::invalid_argument);
  CHECK_THROWS_AS(charge_broadcast(CommStats{}, 1, 0), std::invalid_argument);
}

TEST_CASE("ledger totals equal the per-site breakdown") {
  CommStats stats(3);
  stats.charge(Message{Endpoint::site(0), Endpoint::coordinator(),
                       MessageKind::kTest, 0, {1, 2}});
  stats.charge(Message{Endpoint::coordinator(), Endpoint::site(2),
                       MessageKind::kTest, 0, {1}});
  stats.charge_broadcast(3);
  SiteTraffic sum;
  for (const SiteTraffic& s : stats.per_site()) {
    sum.messages_up += s.messages_up;
    sum.messages_down += s.messages_down;
    sum.words_up += s.words_up;
    sum.words_down += s.words_down;
  }
  CHECK(sum == stats.totals());
}

TEST_CASE("replay with the same seed is bit-identical") {
  auto run = [](std::uint64_t seed) {
    count::CountTracker tracker({8, 0.1, 4.0}, seed);
    workload::Workload w(workload::round_robin(20000, 8));
    RunOptions options;
    options.keep_log = true;
    return run_simulation(tracker, w, {}, nullptr, options);
  };
  auto a = run(42);
  auto b = run(42);
  auto c = run(43);
  CHECK(a.log == b.log);
  CHECK(a.stats == b.stats);
  CHECK(a.log != c.log);
}

TEST_CASE("probes must be sorted and are taken after the cascade") {
  EchoProtocol protocol(1);
  VectorSource source({{0, 0}, {0, 0}, {0, 0}});
  std::vector<TimeInstant> bad{2, 1};
  CHECK_THROWS_AS(run_simulation(protocol, source, bad, nullptr),
                  std::invalid_argument);

  VectorSource again({{0, 0}, {0, 0}, {0, 0}});
  std::vector<TimeInstant> probes{0, 2, 2, 9};
  auto planner = [](TimeInstant t, const Protocol& p) {
    return std::vector<QueryOutcome>{
        {Query{}, static_cast<double>(t + 1), p.estimate(Query{})}};
  };
  auto result = run_simulation(protocol, again, probes, planner);
  REQUIRE(result.records.size() == 2);
  CHECK(result.records[0].t == 0);
  CHECK(result.records[0].estimate == 1);
  CHECK(result.records[1].t == 2);
  CHECK(result.records[1].estimate == 3);
  CHECK(result.records[1].comm.messages_up == 3);
}

TEST_CASE("message log csv") {
  std::vector<LoggedMessage> log{
      {0, Message{Endpoint::site(1), Endpoint::coordinator(),
                  MessageKind::kCountReport, 0, {5}}},
      {1, Message{Endpoint::coordinator(), Endpoint::site(0),
                  MessageKind::kNbarBroadcast, 0, {9}}}};
  std::ostringstream os;
  write_message_log_csv(os, 7, log);
  CHECK(os.str() ==
        "run_id,seq,from,to,kind,words\n"
        "7,0,S1,C,COUNT_REPORT,1\n"
        "7,1,C,S0,NBAR_BROADCAST,1\n");
}
