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

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "cellbus/bus.hpp"

namespace cellbus {

struct BridgeStats {
  std::uint64_t forwarded = 0;
  std::uint64_t dropped_invalid = 0;
  std::uint64_t dropped_loop = 0;
  std::uint64_t dropped_outage = 0;
};

/// Forwards one topic of one schema from `src` to `dst`, never the other way.
///
/// Messages that already passed through this bridge, or that originate in
/// `dst`, are dropped so a pair of opposite bridges on the same topic cannot
/// loop.
class StaticBridge {
 public:
  /// Throws DomainMissing or SelfBridge.
  StaticBridge(Bus& bus, std::string id, const DomainId& src, const DomainId& dst, const TopicName& topic,
               const SchemaId& schema, QosProfile qos = QosProfile::command());

  StaticBridge(StaticBridge&&) noexcept = default;
  StaticBridge& operator=(StaticBridge&&) noexcept = default;

  /// Drains the source side and republishes valid messages. Returns the
  /// number forwarded.
  std::size_t tick();

  /// While disabled the bridge process is considered down: pending messages
  /// are discarded instead of forwarded.
  void set_enabled(bool enabled) { enabled_ = enabled; }
  bool enabled() const { return enabled_; }

  const std::string& id() const { return id_; }
  const DomainId& src() const { return src_; }
  const DomainId& dst() const { return dst_; }
  const TopicName& topic() const { return topic_; }
  const SchemaId& schema() const { return schema_; }
  const BridgeStats& stats() const { return stats_; }

 private:
  std::string id_;
  DomainId src_;
  DomainId dst_;
  TopicName topic_;
  SchemaId schema_;
  const SchemaRegistry* registry_;
  Subscriber in_;
  Publisher out_;
  bool enabled_ = true;
  BridgeStats stats_;
};

enum class DynamicBridgeState { Running, Closed };

/// Auto-opening bridge: every topic advertised in `src` gets a lane to
/// `dst`. A single message that fails validation against the lane schema
/// closes the whole bridge.
class DynamicBridge {
 public:
  DynamicBridge(Bus& bus, std::string id, const DomainId& src, const DomainId& dst);

  std::size_t tick();

  DynamicBridgeState state() const { return state_; }
  /// "inconsistent_message" once closed.
  const std::string& close_reason() const { return close_reason_; }
  std::vector<std::pair<TopicName, SchemaId>> open_lanes() const;
  const BridgeStats& stats() const { return stats_; }

 private:
  struct Lane {
    SchemaId schema;
    Subscriber in;
    Publisher out;
  };

  void close(std::string reason);

  Bus* bus_;
  std::string id_;
  DomainId src_;
  DomainId dst_;
  std::map<TopicName, Lane> lanes_;
  DynamicBridgeState state_ = DynamicBridgeState::Running;
  std::string close_reason_;
  BridgeStats stats_;
};

enum class BridgeDirection { ToLegacy, ToModern };

std::string_view to_string(BridgeDirection d);

struct BridgeManifestEntry {
  BridgeDirection direction = BridgeDirection::ToLegacy;
  TopicName topic = TopicName::parse("/unset");
  SchemaId schema;

  bool operator==(const BridgeManifestEntry&) const = default;
};

/// Per-hub list of bridges. Text form, one entry per line:
///
///   hub tool_ecu
///   bridge to_legacy /cell/hub/tool_ecu/command HubCommandToolEcu
///   bridge to_modern /cell/hub/tool_ecu/state HubStateToolEcu
struct BridgeManifest {
  std::map<std::string, std::vector<BridgeManifestEntry>> hubs;

  static BridgeManifest parse(std::string_view text, const std::string& filename);
  std::string format() const;

  bool operator==(const BridgeManifest&) const = default;
};

/// Runs `step` every `period` on its own thread until destroyed. Used to
/// drive bridges in concurrent mode.
class PeriodicWorker {
 public:
  PeriodicWorker(std::function<void()> step, std::chrono::microseconds period);
  ~PeriodicWorker();

  PeriodicWorker(const PeriodicWorker&) = delete;
  PeriodicWorker& operator=(const PeriodicWorker&) = delete;

  void stop();

 private:
  std::jthread thread_;
};

}  // namespace cellbus
