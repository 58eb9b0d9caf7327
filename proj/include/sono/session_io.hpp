#ifndef SONO_SESSION_IO_HPP
#define SONO_SESSION_IO_HPP

#include <string>

#include "sono/synthgen.hpp"

namespace sono {

// On-disk session layout (see FORMATS.md): a directory holding
//   meta.txt      key=value header (configuration, speed, seed, dims, counts)
//   frames.f32    little-endian float32, frame-major then row-major
//   angles.txt    one row per frame: timestamp, 4 flexion values, 4 saturation bits
//   mocap.txt     marker stream columnar text (kinematics format)
//   triggers.txt  one row per frame: timestamp, frame index

void save_session(const Session& session, const std::string& dir);
Session load_session(const std::string& dir);

std::string angles_to_text(const std::vector<TriggerEvent>& triggers,
                           const std::vector<McpAngles>& angles);

}  // namespace sono

#endif
