#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>

namespace dlsim {

  /// Opaque integer identifier tagged by the entity it names.
  template <typename Tag>
  struct StrongId {
    std::uint32_t value{std::numeric_limits<std::uint32_t>::max()};

    constexpr StrongId() = default;
    constexpr explicit StrongId(std::uint32_t v) : value{v} {}

    constexpr bool valid() const { return value != std::numeric_limits<std::uint32_t>::max(); }
    constexpr auto operator<=>(StrongId const&) const = default;
  };

  using NodeId = StrongId<struct NodeTag>;
  using EdgeId = StrongId<struct EdgeTag>;
  using VehicleId = StrongId<struct VehicleTag>;
  using BusLineId = StrongId<struct BusLineTag>;
  using StopId = StrongId<struct StopTag>;

  enum class Lane : std::uint8_t { Left = 0, Right = 1 };
  enum class VehicleClass : std::uint8_t { HDV = 0, CAV = 1, Bus = 2 };

  constexpr Lane other(Lane lane) { return lane == Lane::Left ? Lane::Right : Lane::Left; }

  constexpr std::string_view to_string(Lane lane) { return lane == Lane::Left ? "L" : "R"; }

  constexpr std::string_view to_string(VehicleClass c) {
    switch (c) {
      case VehicleClass::HDV:
        return "hdv";
      case VehicleClass::CAV:
        return "cav";
      case VehicleClass::Bus:
        return "bus";
    }
    return "?";
  }

}  // namespace dlsim

template <typename Tag>
struct std::hash<dlsim::StrongId<Tag>> {
  std::size_t operator()(dlsim::StrongId<Tag> id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
