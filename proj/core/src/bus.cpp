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

#include "cellbus/bus.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <mutex>
#include <set>

#include "cellbus/codec.hpp"
#include "cellbus/errors.hpp"

namespace cellbus {

namespace {

bool valid_segment_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

}  // namespace

bool TopicName::is_valid(std::string_view path) {
  if (path.size() < 2 || path.size() > kMaxLength || path.front() != '/' || path.back() == '/') {
    return false;
  }
  bool previous_slash = true;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const char c = path[i];
    if (c == '/') {
      if (previous_slash) {
        return false;
      }
      previous_slash = true;
    } else if (valid_segment_char(c)) {
      previous_slash = false;
    } else {
      return false;
    }
  }
  return true;
}

TopicName TopicName::parse(std::string_view path) {
  if (!is_valid(path)) {
    throw InvalidTopic("invalid topic name '" + std::string(path) + "'");
  }
  return TopicName(std::string(path));
}

QosProfile QosProfile::keep_last(std::size_t depth, Reliability r) {
  if (depth == 0) {
    throw InvalidQos("KeepLast depth must be >= 1");
  }
  return QosProfile{r, Durability::Volatile, depth};
}

namespace detail {

struct EndpointRecord {
  Endpoint info;
  std::uint64_t created_tick = 0;
  std::optional<std::uint64_t> removed_tick;
  std::uint64_t next_sequence = 0;
  std::deque<Delivery> queue;
  std::map<EndpointId, std::size_t> queued_per_publisher;

  bool alive() const { return !removed_tick.has_value(); }
};

struct BusState {
  BusState(const SchemaRegistry& r, BusOptions o) : registry(&r), options(o) {}

  mutable std::mutex mutex;
  const SchemaRegistry* registry;
  BusOptions options;
  std::uint64_t tick = 0;
  std::set<DomainId> domains;
  EndpointId next_id = 1;
  std::map<EndpointId, EndpointRecord> endpoints;
  std::map<std::pair<DomainId, TopicName>, std::vector<EndpointId>> topics;
  std::map<std::pair<EndpointId, EndpointId>, std::deque<Delivery>> retries;
  std::vector<Incompatibility> incompatibilities;
  TraceSink trace;
  DropFilter drop;

  double now() const { return static_cast<double>(tick) * options.tick_len; }

  std::uint64_t discovery_delay() const {
    return options.mode == ClockMode::Concurrent ? 0 : options.discovery_ticks;
  }

  Endpoint add_endpoint(EndpointKind kind, const DomainId& domain, const TopicName& topic,
                        const SchemaId& schema, QosProfile qos, NodeId owner) {
    if (domains.count(domain) == 0) {
      throw DomainMissing("domain " + domain.name + " does not exist");
    }
    registry->get(schema);  // throws UnknownSchema
    Endpoint e{next_id++, kind, domain, topic, schema, qos, std::move(owner)};
    auto& ids = topics[{domain, topic}];
    for (EndpointId other : ids) {
      const auto& rec = endpoints.at(other);
      if (rec.alive() && rec.info.schema != schema) {
        incompatibilities.push_back(
            Incompatibility{domain, topic, other, e.id, rec.info.schema, schema});
        break;
      }
    }
    ids.push_back(e.id);
    EndpointRecord rec;
    rec.info = e;
    rec.created_tick = tick;
    endpoints.emplace(e.id, std::move(rec));
    return e;
  }

  void remove_endpoint(EndpointId id) {
    auto it = endpoints.find(id);
    if (it == endpoints.end() || !it->second.alive()) {
      return;
    }
    it->second.removed_tick = tick;
    it->second.queue.clear();
    it->second.queued_per_publisher.clear();
    for (auto r = retries.begin(); r != retries.end();) {
      if (r->first.first == id || r->first.second == id) {
        r = retries.erase(r);
      } else {
        ++r;
      }
    }
  }

  static bool reliable_link(const Endpoint& pub, const Endpoint& sub) {
    return pub.qos.reliability == Reliability::Reliable && sub.qos.reliability == Reliability::Reliable;
  }

  void enqueue(EndpointRecord& pub, EndpointRecord& sub, Delivery d) {
    const std::size_t depth = std::min(pub.info.qos.depth, sub.info.qos.depth);
    auto& count = sub.queued_per_publisher[pub.info.id];
    if (count >= depth) {
      auto oldest = std::find_if(sub.queue.begin(), sub.queue.end(),
                                 [&](const Delivery& q) { return q.publisher == pub.info.id; });
      sub.queue.erase(oldest);
      --count;
    }
    if (trace) {
      trace(TraceRecord{tick, now(), sub.info.domain, sub.info.topic, pub.info.owner, sub.info.owner,
                        encode(d.message)});
    }
    sub.queue.push_back(std::move(d));
    ++count;
  }

  void route(EndpointRecord& pub, const Delivery& d) {
    for (EndpointId sid : topics[{pub.info.domain, pub.info.topic}]) {
      auto& sub = endpoints.at(sid);
      if (sub.info.kind != EndpointKind::Subscriber || !sub.alive() || sub.info.schema != pub.info.schema) {
        continue;
      }
      const bool reliable = reliable_link(pub.info, sub.info);
      auto retry = retries.find({pub.info.id, sid});
      if (retry != retries.end() && !retry->second.empty()) {
        retry->second.push_back(d);
        continue;
      }
      if (drop && drop(pub.info, sub.info)) {
        if (reliable) {
          retries[{pub.info.id, sid}].push_back(d);
        }
        continue;
      }
      enqueue(pub, sub, d);
    }
  }

  void publish(EndpointId id, const Message& message, Provenance provenance, bool validate) {
    auto it = endpoints.find(id);
    if (it == endpoints.end() || !it->second.alive()) {
      throw EndpointClosed("publish on a closed endpoint");
    }
    auto& pub = it->second;
    if (validate) {
      if (auto err = registry->validate(pub.info.schema, message)) {
        throw ValidationFailed(*err);
      }
    }
    Delivery d{message, id, pub.info.owner, pub.next_sequence++, tick, std::move(provenance)};
    route(pub, d);
  }

  void retry_pending() {
    for (auto it = retries.begin(); it != retries.end();) {
      auto& pub = endpoints.at(it->first.first);
      auto& sub = endpoints.at(it->first.second);
      auto& q = it->second;
      while (!q.empty()) {
        if (drop && drop(pub.info, sub.info)) {
          break;
        }
        enqueue(pub, sub, std::move(q.front()));
        q.pop_front();
      }
      it = q.empty() ? retries.erase(it) : std::next(it);
    }
  }
};

}  // namespace detail

Bus::Bus(const SchemaRegistry& registry, BusOptions options)
    : state_(std::make_shared<detail::BusState>(registry, options)) {
  if (!(options.tick_len > 0.0)) {
    throw ConfigError("tick length must be positive");
  }
}

Bus::~Bus() = default;

DomainHandle Bus::create_domain(const DomainId& id) {
  std::lock_guard lock(state_->mutex);
  if (!state_->domains.insert(id).second) {
    throw DuplicateDomain("domain " + id.name + " already exists");
  }
  return DomainHandle(id);
}

bool Bus::has_domain(const DomainId& id) const {
  std::lock_guard lock(state_->mutex);
  return state_->domains.count(id) != 0;
}

DomainHandle Bus::domain(const DomainId& id) const {
  if (!has_domain(id)) {
    throw DomainMissing("domain " + id.name + " does not exist");
  }
  return DomainHandle(id);
}

Publisher Bus::advertise(const DomainHandle& domain, const TopicName& topic, const SchemaId& schema,
                         QosProfile qos, NodeId owner) {
  std::lock_guard lock(state_->mutex);
  return Publisher(state_, state_->add_endpoint(EndpointKind::Publisher, domain.id(), topic, schema, qos,
                                                std::move(owner)));
}

Subscriber Bus::subscribe(const DomainHandle& domain, const TopicName& topic, const SchemaId& schema,
                          QosProfile qos, NodeId owner) {
  std::lock_guard lock(state_->mutex);
  return Subscriber(state_, state_->add_endpoint(EndpointKind::Subscriber, domain.id(), topic, schema, qos,
                                                 std::move(owner)));
}

std::vector<Endpoint> Bus::discover(const DomainHandle& domain) const {
  std::lock_guard lock(state_->mutex);
  const auto d = state_->discovery_delay();
  const auto now = state_->tick;
  std::vector<Endpoint> out;
  for (const auto& [id, rec] : state_->endpoints) {
    if (rec.info.domain != domain.id() || rec.created_tick + d > now) {
      continue;
    }
    if (rec.removed_tick && *rec.removed_tick + d <= now) {
      continue;
    }
    out.push_back(rec.info);
  }
  return out;
}

std::vector<Incompatibility> Bus::incompatibilities() const {
  std::lock_guard lock(state_->mutex);
  return state_->incompatibilities;
}

void Bus::tick() {
  std::lock_guard lock(state_->mutex);
  ++state_->tick;
  state_->retry_pending();
}

std::uint64_t Bus::tick_count() const {
  std::lock_guard lock(state_->mutex);
  return state_->tick;
}

double Bus::now() const {
  std::lock_guard lock(state_->mutex);
  return state_->now();
}

const BusOptions& Bus::options() const { return state_->options; }
const SchemaRegistry& Bus::registry() const { return *state_->registry; }

void Bus::set_trace_sink(TraceSink sink) {
  std::lock_guard lock(state_->mutex);
  state_->trace = std::move(sink);
}

void Bus::set_drop_filter(DropFilter filter) {
  std::lock_guard lock(state_->mutex);
  state_->drop = std::move(filter);
}

Publisher::Publisher(std::shared_ptr<detail::BusState> state, Endpoint endpoint)
    : state_(std::move(state)), id_(endpoint.id), endpoint_(std::move(endpoint)) {}

Publisher& Publisher::operator=(Publisher&& other) noexcept {
  if (this != &other) {
    close();
    state_ = std::move(other.state_);
    id_ = other.id_;
    endpoint_ = std::move(other.endpoint_);
  }
  return *this;
}

Publisher::~Publisher() { close(); }

void Publisher::publish(const Message& message) {
  if (!state_) {
    throw EndpointClosed("publish on a closed publisher");
  }
  std::lock_guard lock(state_->mutex);
  state_->publish(id_, message, Provenance{}, true);
}

void Publisher::publish_forwarded(const Message& message, Provenance provenance) {
  if (!state_) {
    throw EndpointClosed("publish on a closed publisher");
  }
  std::lock_guard lock(state_->mutex);
  state_->publish(id_, message, std::move(provenance), true);
}

void Publisher::inject_unchecked(const Message& message) {
  if (!state_) {
    throw EndpointClosed("publish on a closed publisher");
  }
  std::lock_guard lock(state_->mutex);
  state_->publish(id_, message, Provenance{}, false);
}

std::size_t Publisher::matched() const {
  if (!state_) {
    return 0;
  }
  std::lock_guard lock(state_->mutex);
  std::size_t n = 0;
  for (EndpointId sid : state_->topics[{endpoint_.domain, endpoint_.topic}]) {
    const auto& rec = state_->endpoints.at(sid);
    n += rec.info.kind == EndpointKind::Subscriber && rec.alive() && rec.info.schema == endpoint_.schema;
  }
  return n;
}

void Publisher::close() {
  if (state_) {
    std::lock_guard lock(state_->mutex);
    state_->remove_endpoint(id_);
  }
  state_.reset();
}

Subscriber::Subscriber(std::shared_ptr<detail::BusState> state, Endpoint endpoint)
    : state_(std::move(state)), id_(endpoint.id), endpoint_(std::move(endpoint)) {}

Subscriber& Subscriber::operator=(Subscriber&& other) noexcept {
  if (this != &other) {
    close();
    state_ = std::move(other.state_);
    id_ = other.id_;
    endpoint_ = std::move(other.endpoint_);
  }
  return *this;
}

Subscriber::~Subscriber() { close(); }

std::vector<Delivery> Subscriber::poll_deliveries() {
  if (!state_) {
    throw EndpointClosed("poll on a closed subscriber");
  }
  std::lock_guard lock(state_->mutex);
  auto& rec = state_->endpoints.at(id_);
  std::vector<Delivery> out(std::make_move_iterator(rec.queue.begin()),
                            std::make_move_iterator(rec.queue.end()));
  rec.queue.clear();
  rec.queued_per_publisher.clear();
  return out;
}

std::vector<Message> Subscriber::poll() {
  std::vector<Message> out;
  for (auto& d : poll_deliveries()) {
    out.push_back(std::move(d.message));
  }
  return out;
}

std::size_t Subscriber::pending() const {
  if (!state_) {
    return 0;
  }
  std::lock_guard lock(state_->mutex);
  return state_->endpoints.at(id_).queue.size();
}

void Subscriber::close() {
  if (state_) {
    std::lock_guard lock(state_->mutex);
    state_->remove_endpoint(id_);
  }
  state_.reset();
}

}  // namespace cellbus
