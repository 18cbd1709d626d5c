#pragma once

#include <cstdint>
#include <initializer_list>

namespace glyco {

/// Deterministic child seed from a root seed and a path of tags (splitmix64 mixing).
/// Streams depend only on the tags, never on thread scheduling.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> tags);

// Stream tags used across the library.
namespace stream {
inline constexpr std::uint64_t kPatient = 1;
inline constexpr std::uint64_t kSchedule = 2;
inline constexpr std::uint64_t kPairing = 3;
inline constexpr std::uint64_t kMeasurementTimes = 4;
inline constexpr std::uint64_t kMeasurementNoise = 5;
inline constexpr std::uint64_t kFit = 6;
inline constexpr std::uint64_t kInitialState = 7;
}  // namespace stream

}  // namespace glyco
