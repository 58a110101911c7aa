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

#include "cellbus/bridge.hpp"

#include <algorithm>

#include "cellbus/errors.hpp"
#include "text_util.hpp"

namespace cellbus {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

bool contains(const std::vector<DomainId>& v, const DomainId& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

Provenance extend(Provenance p, const std::string& bridge, const DomainId& src) {
  if (!contains(p.visited, src)) {
    p.visited.push_back(src);
  }
  p.bridges.push_back(bridge);
  return p;
}

}  // namespace

StaticBridge::StaticBridge(Bus& bus, std::string id, const DomainId& src, const DomainId& dst,
                           const TopicName& topic, const SchemaId& schema, QosProfile qos)
    : id_(std::move(id)), src_(src), dst_(dst), topic_(topic), schema_(schema), registry_(&bus.registry()) {
  if (src == dst) {
    throw SelfBridge("bridge " + id_ + " has identical source and destination " + src.name);
  }
  auto src_handle = bus.domain(src);
  auto dst_handle = bus.domain(dst);
  in_ = bus.subscribe(src_handle, topic, schema, qos, NodeId{id_});
  out_ = bus.advertise(dst_handle, topic, schema, qos, NodeId{id_});
}

std::size_t StaticBridge::tick() {
  std::size_t forwarded = 0;
  for (auto& d : in_.poll_deliveries()) {
    if (!enabled_) {
      ++stats_.dropped_outage;
      continue;
    }
    if (contains(d.provenance.bridges, id_) || contains(d.provenance.visited, dst_)) {
      ++stats_.dropped_loop;
      continue;
    }
    if (registry_->validate(schema_, d.message)) {
      ++stats_.dropped_invalid;
      continue;
    }
    out_.publish_forwarded(d.message, extend(std::move(d.provenance), id_, src_));
    ++forwarded;
  }
  stats_.forwarded += forwarded;
  return forwarded;
}

DynamicBridge::DynamicBridge(Bus& bus, std::string id, const DomainId& src, const DomainId& dst)
    : bus_(&bus), id_(std::move(id)), src_(src), dst_(dst) {
  if (src == dst) {
    throw SelfBridge("bridge " + id_ + " has identical source and destination " + src.name);
  }
  bus.domain(src);
  bus.domain(dst);
}

std::vector<std::pair<TopicName, SchemaId>> DynamicBridge::open_lanes() const {
  std::vector<std::pair<TopicName, SchemaId>> out;
  for (const auto& [topic, lane] : lanes_) {
    out.emplace_back(topic, lane.schema);
  }
  return out;
}

void DynamicBridge::close(std::string reason) {
  state_ = DynamicBridgeState::Closed;
  close_reason_ = std::move(reason);
  lanes_.clear();
}

std::size_t DynamicBridge::tick() {
  if (state_ == DynamicBridgeState::Closed) {
    return 0;
  }
  const auto src_handle = bus_->domain(src_);
  const auto dst_handle = bus_->domain(dst_);
  for (const auto& ep : bus_->discover(src_handle)) {
    if (ep.kind != EndpointKind::Publisher || ep.owner.name == id_ || lanes_.count(ep.topic) != 0) {
      continue;
    }
    Lane lane{ep.schema, bus_->subscribe(src_handle, ep.topic, ep.schema, ep.qos, NodeId{id_}),
              bus_->advertise(dst_handle, ep.topic, ep.schema, ep.qos, NodeId{id_})};
    lanes_.emplace(ep.topic, std::move(lane));
  }
  std::size_t forwarded = 0;
  for (auto& [topic, lane] : lanes_) {
    for (auto& d : lane.in.poll_deliveries()) {
      if (contains(d.provenance.bridges, id_) || contains(d.provenance.visited, dst_)) {
        ++stats_.dropped_loop;
        continue;
      }
      if (bus_->registry().validate(lane.schema, d.message)) {
        ++stats_.dropped_invalid;
        stats_.forwarded += forwarded;
        close("inconsistent_message");
        return forwarded;
      }
      lane.out.publish_forwarded(d.message, extend(std::move(d.provenance), id_, src_));
      ++forwarded;
    }
  }
  stats_.forwarded += forwarded;
  return forwarded;
}

std::string_view to_string(BridgeDirection d) {
  return d == BridgeDirection::ToLegacy ? "to_legacy" : "to_modern";
}

BridgeManifest BridgeManifest::parse(std::string_view text, const std::string& filename) {
  BridgeManifest m;
  std::string hub;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++line_no;
    const auto t = detail::tokenize(detail::strip_comment(raw));
    if (t.empty()) {
      continue;
    }
    if (t[0] == "hub" && t.size() == 2) {
      hub = t[1];
      m.hubs[hub];
    } else if (t[0] == "bridge" && t.size() == 4) {
      if (hub.empty()) {
        throw ParseError(filename, line_no, "bridge entry before any hub line");
      }
      BridgeManifestEntry e;
      if (t[1] == "to_legacy") {
        e.direction = BridgeDirection::ToLegacy;
      } else if (t[1] == "to_modern") {
        e.direction = BridgeDirection::ToModern;
      } else {
        throw ParseError(filename, line_no, "direction must be to_legacy or to_modern");
      }
      if (!TopicName::is_valid(t[2])) {
        throw ParseError(filename, line_no, "invalid topic '" + t[2] + "'");
      }
      e.topic = TopicName::parse(t[2]);
      e.schema = SchemaId{t[3]};
      m.hubs[hub].push_back(std::move(e));
    } else {
      throw ParseError(filename, line_no, "expected 'hub <name>' or 'bridge <dir> <topic> <schema>'");
    }
  }
  return m;
}

std::string BridgeManifest::format() const {
  std::string out;
  for (const auto& [hub, entries] : hubs) {
    out += "hub " + hub + "\n";
    for (const auto& e : entries) {
      out += "bridge " + std::string(to_string(e.direction)) + " " + e.topic.str() + " " + e.schema.name + "\n";
    }
  }
  return out;
}

PeriodicWorker::PeriodicWorker(std::function<void()> step, std::chrono::microseconds period)
    : thread_([step = std::move(step), period](std::stop_token stop) {
        while (!stop.stop_requested()) {
          step();
          std::this_thread::sleep_for(period);
        }
      }) {}

PeriodicWorker::~PeriodicWorker() { stop(); }

void PeriodicWorker::stop() {
  if (thread_.joinable()) {
    thread_.request_stop();
    thread_.join();
  }
}

}  // namespace cellbus
