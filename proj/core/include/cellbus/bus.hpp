// Copyright 2026 The cellbus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cellbus/errors.hpp"
#include "cellbus/message.hpp"
#include "cellbus/schema.hpp"

namespace cellbus {

/// Name of an isolated pub/sub domain. Messages never cross domains except
/// through a bridge.
struct DomainId {
  std::string name;

  static DomainId modern() { return {"modern"}; }
  static DomainId legacy() { return {"legacy"}; }
  /// One legacy domain per hub, mirroring one master per hub.
  static DomainId legacy(std::string_view hub) { return {"legacy/" + std::string(hub)}; }

  auto operator<=>(const DomainId&) const = default;
};

struct NodeId {
  std::string name;

  auto operator<=>(const NodeId&) const = default;
};

/// Slash-separated topic path, e.g. "/cell/tars/command". Segments match
/// [a-z0-9_]+ and the whole path is at most 256 characters.
class TopicName {
 public:
  static constexpr std::size_t kMaxLength = 256;

  /// Throws InvalidTopic.
  static TopicName parse(std::string_view path);
  static bool is_valid(std::string_view path);

  const std::string& str() const { return path_; }

  auto operator<=>(const TopicName&) const = default;

 private:
  explicit TopicName(std::string path) : path_(std::move(path)) {}
  std::string path_;
};

enum class Reliability { Reliable, BestEffort };
enum class Durability { Volatile };

struct QosProfile {
  Reliability reliability = Reliability::Reliable;
  Durability durability = Durability::Volatile;
  std::size_t depth = 10;  // KeepLast(depth)

  static QosProfile keep_last(std::size_t depth, Reliability r = Reliability::Reliable);
  /// KeepLast(10), reliable.
  static QosProfile command() { return keep_last(10); }
  /// KeepLast(1), reliable: a state topic is a periodic snapshot.
  static QosProfile state() { return keep_last(1); }

  bool operator==(const QosProfile&) const = default;
};

using EndpointId = std::uint64_t;

enum class EndpointKind { Publisher, Subscriber };

struct Endpoint {
  EndpointId id = 0;
  EndpointKind kind = EndpointKind::Publisher;
  DomainId domain;
  TopicName topic = TopicName::parse("/unset");
  SchemaId schema;
  QosProfile qos;
  NodeId owner;
};

/// Two endpoints on one topic whose schemas differ; they stay registered but
/// never match.
struct Incompatibility {
  DomainId domain;
  TopicName topic = TopicName::parse("/unset");
  EndpointId existing = 0;
  EndpointId incoming = 0;
  SchemaId existing_schema;
  SchemaId incoming_schema;
};

/// Bridge bookkeeping attached to forwarded messages. Ordinary subscribers
/// never see it.
struct Provenance {
  std::vector<std::string> bridges;
  std::vector<DomainId> visited;
};

struct Delivery {
  Message message;
  EndpointId publisher = 0;
  NodeId publisher_node;
  std::uint64_t sequence = 0;
  std::uint64_t publish_tick = 0;
  Provenance provenance;
};

struct TraceRecord {
  std::uint64_t tick = 0;
  double time = 0.0;
  DomainId domain;
  TopicName topic = TopicName::parse("/unset");
  NodeId publisher;
  NodeId subscriber;
  std::string payload;  // canonical encoding
};

using TraceSink = std::function<void(const TraceRecord&)>;
/// Returns true when the delivery attempt from `publisher` to `subscriber`
/// should be lost (fault injection). Reliable links retry on the next tick.
using DropFilter = std::function<bool(const Endpoint& publisher, const Endpoint& subscriber)>;

enum class ClockMode { Deterministic, Concurrent };

struct BusOptions {
  ClockMode mode = ClockMode::Deterministic;
  double tick_len = 0.1;             // seconds of logical time
  std::uint64_t discovery_ticks = 1;  // D
};

namespace detail {
struct BusState;
}

class Publisher;
class Subscriber;

class DomainHandle {
 public:
  const DomainId& id() const { return id_; }

 private:
  friend class Bus;
  explicit DomainHandle(DomainId id) : id_(std::move(id)) {}
  DomainId id_;
};

/// In-process multi-domain publish/subscribe transport.
///
/// Deterministic mode: time moves only through tick(); delivery order is the
/// call order of the single driving thread. Concurrent mode: every call is
/// serialized by an internal mutex and may come from any thread; per-publisher
/// FIFO still holds.
///
/// The registry must outlive the bus and every handle created from it.
class Bus {
 public:
  explicit Bus(const SchemaRegistry& registry, BusOptions options = {});
  ~Bus();

  Bus(const Bus&) = delete;
  Bus& operator=(const Bus&) = delete;

  /// Throws DuplicateDomain.
  DomainHandle create_domain(const DomainId& id);
  bool has_domain(const DomainId& id) const;
  /// Throws DomainMissing.
  DomainHandle domain(const DomainId& id) const;

  /// Throws UnknownSchema. A schema clash on the topic is recorded in
  /// incompatibilities(); the endpoint is still created.
  Publisher advertise(const DomainHandle& domain, const TopicName& topic, const SchemaId& schema,
                      QosProfile qos, NodeId owner);
  Subscriber subscribe(const DomainHandle& domain, const TopicName& topic, const SchemaId& schema,
                       QosProfile qos, NodeId owner);

  /// Endpoints at least D ticks old (and not removed for D ticks or more).
  std::vector<Endpoint> discover(const DomainHandle& domain) const;
  std::vector<Incompatibility> incompatibilities() const;

  /// Advances logical time by one tick and retries pending reliable
  /// deliveries.
  void tick();
  std::uint64_t tick_count() const;
  double now() const;
  const BusOptions& options() const;
  const SchemaRegistry& registry() const;

  void set_trace_sink(TraceSink sink);
  void set_drop_filter(DropFilter filter);

 private:
  std::shared_ptr<detail::BusState> state_;
};

/// Move-only publishing handle; the endpoint is removed when the handle is
/// closed or destroyed.
class Publisher {
 public:
  Publisher() = default;
  Publisher(Publisher&&) noexcept = default;
  Publisher& operator=(Publisher&& other) noexcept;
  ~Publisher();

  /// Validates against the endpoint schema; throws ValidationFailed and
  /// enqueues nothing on violation.
  void publish(const Message& message);
  /// Used by bridges: validated publish that carries provenance.
  void publish_forwarded(const Message& message, Provenance provenance);
  /// Fault-injection hook: enqueues without validation.
  void inject_unchecked(const Message& message);

  void close();
  bool valid() const { return state_ != nullptr; }
  EndpointId id() const { return id_; }
  const Endpoint& endpoint() const { return endpoint_; }
  /// Number of live subscribers currently matched.
  std::size_t matched() const;

 private:
  friend class Bus;
  Publisher(std::shared_ptr<detail::BusState> state, Endpoint endpoint);

  std::shared_ptr<detail::BusState> state_;
  EndpointId id_ = 0;
  Endpoint endpoint_;
};

class Subscriber {
 public:
  Subscriber() = default;
  Subscriber(Subscriber&&) noexcept = default;
  Subscriber& operator=(Subscriber&& other) noexcept;
  ~Subscriber();

  /// Drains the queue.
  std::vector<Message> poll();
  /// Drains the queue, keeping publisher and provenance metadata.
  std::vector<Delivery> poll_deliveries();
  std::size_t pending() const;

  void close();
  bool valid() const { return state_ != nullptr; }
  EndpointId id() const { return id_; }
  const Endpoint& endpoint() const { return endpoint_; }

 private:
  friend class Bus;
  Subscriber(std::shared_ptr<detail::BusState> state, Endpoint endpoint);

  std::shared_ptr<detail::BusState> state_;
  EndpointId id_ = 0;
  Endpoint endpoint_;
};

/// Thrown by Publisher::publish when a message violates its schema.
class ValidationFailed : public Error {
 public:
  explicit ValidationFailed(ValidationError error)
      : Error("validation failed: " + error.describe()), error_(std::move(error)) {}
  const ValidationError& error() const { return error_; }

 private:
  ValidationError error_;
};

}  // namespace cellbus
