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

#include "cellbus/message.hpp"

namespace cellbus::testing {

// Reference Command/State rows for the UR10 mover and its pose saver.

inline Message reference_move_command() {
  Message m;
  m.set("action", "MOVEJ")
      .set("robot_type", "UR10")
      .set("robot_name", "TARS")
      .set("pose_type", "JOINT")
      .set("pose_name", "HOME")
      .set("speed_scal", Value{0.1f})
      .set("acc_scal", Value{0.2f})
      .set("goal_toll", Value{0.01f});
  return m;
}

inline Message reference_mover_state() {
  Message m;
  m.set("robot_name", "TARS")
      .set("fresh_msg", Value{true})
      .set("t_plus", Value{0.8f})
      .set("got_reset", Value{false})
      .set("error_list", Value{StrList{}})
      .set("echo", reference_move_command())
      .set("moving", Value{false})
      .set("actual_pose", "POSE13");
  return m;
}

inline Message reference_update_command() {
  Message m;
  m.set("action", "UPDATE")
      .set("robot_type", "UR10")
      .set("robot_name", "TARS")
      .set("pose_type", "JOINT")
      .set("pose_name", "HOME");
  return m;
}

inline Message reference_pose_saver_state() {
  Message m;
  m.set("robot_name", "TARS")
      .set("fresh_msg", Value{false})
      .set("t_plus", Value{38.0f})
      .set("echo", reference_update_command())
      .set("done_action", "updated");
  return m;
}

}  // namespace cellbus::testing
