#pragma once

#include <cstdint>
#include <vector>

#include "disttrack/error.hpp"
#include "disttrack/sim/message.hpp"

namespace disttrack {

enum class QueryKind : std::uint8_t { kCount, kFrequency, kRank };

struct Query {
  QueryKind kind = QueryKind::kCount;
  Key key = 0;  // item id for frequency, threshold for rank
};

// Collects the messages produced by one handler activation.
class Outbox {
 public:
  explicit Outbox(Endpoint owner) : owner_(owner) {}

  Endpoint owner() const { return owner_; }

  void send(Message message) { messages_.push_back(std::move(message)); }
  void send(Endpoint to, MessageKind kind, std::vector<std::uint64_t> payload,
            std::uint16_t channel = 0) {
    messages_.push_back(Message{owner_, to, kind, channel, std::move(payload)});
  }
  // Coordinator only; delivered to every site and charged k messages.
  void broadcast(MessageKind kind, std::vector<std::uint64_t> payload,
                 std::uint16_t channel = 0) {
    broadcasts_.push_back(
        Message{owner_, owner_, kind, channel, std::move(payload)});
  }

  bool empty() const { return messages_.empty() && broadcasts_.empty(); }

 private:
  friend class Simulator;

  Endpoint owner_;
  std::vector<Message> messages_;
  std::vector<Message> broadcasts_;
};

// Site/coordinator state machine pair. Handlers run only in response to an
// arrival or a delivered message.
class Protocol {
 public:
  virtual ~Protocol() = default;

  virtual SiteId num_sites() const = 0;

  virtual void on_arrival(SiteId site, Key key, Outbox& out) = 0;
  virtual void on_site_message(SiteId site, const Message& message,
                               Outbox& out) = 0;
  virtual void on_coordinator_message(const Message& message, Outbox& out) = 0;

  virtual bool supports(QueryKind kind) const = 0;
  virtual double estimate(const Query& query) const = 0;

  // Largest per-site memory footprint (words) seen so far.
  virtual std::uint64_t peak_site_words() const { return 0; }
};

}  // namespace disttrack
