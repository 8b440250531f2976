#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hjreach {

enum class Activation { kSine, kRectifier, kAffine };

// Per-layer activation tags for a value network, e.g. "ssrsl" parses to
// [sine, sine, rectifier, sine, affine]. The trailing affine tag is the
// output layer.
struct ActivationSchedule {
  std::vector<Activation> layers;

  std::size_t size() const { return layers.size(); }
  Activation operator[](std::size_t i) const { return layers[i]; }
  bool operator==(const ActivationSchedule&) const = default;
};

struct ScheduleParseError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Parses a structure string: 's' sine, 'r' rectifier, 'l' affine.
// Exactly one 'l' is allowed and it must be the final character; the
// string must name at least two layers.
inline ActivationSchedule parse_structure(std::string_view spec) {
  if (spec.empty())
    throw ScheduleParseError("structure string is empty");
  if (spec.size() < 2)
    throw ScheduleParseError("structure '" + std::string(spec) +
                             "' names fewer than 2 layers");
  ActivationSchedule sched;
  sched.layers.reserve(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    switch (spec[i]) {
      case 's':
        sched.layers.push_back(Activation::kSine);
        break;
      case 'r':
        sched.layers.push_back(Activation::kRectifier);
        break;
      case 'l':
        if (i + 1 != spec.size())
          throw ScheduleParseError("structure '" + std::string(spec) +
                                   "': affine tag 'l' at position " +
                                   std::to_string(i) + " is not final");
        sched.layers.push_back(Activation::kAffine);
        break;
      default:
        throw ScheduleParseError("structure '" + std::string(spec) +
                                 "': illegal character '" +
                                 std::string(1, spec[i]) + "' at position " +
                                 std::to_string(i));
    }
  }
  if (sched.layers.back() != Activation::kAffine)
    throw ScheduleParseError("structure '" + std::string(spec) +
                             "' lacks the trailing affine tag 'l' (position " +
                             std::to_string(spec.size() - 1) + ")");
  return sched;
}

inline std::string render_structure(const ActivationSchedule& sched) {
  std::string out;
  out.reserve(sched.size());
  for (Activation a : sched.layers) {
    switch (a) {
      case Activation::kSine: out += 's'; break;
      case Activation::kRectifier: out += 'r'; break;
      case Activation::kAffine: out += 'l'; break;
    }
  }
  return out;
}

}  // namespace hjreach
