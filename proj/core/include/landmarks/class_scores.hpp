#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace landmarks {

enum class LandmarkClass : int { kTree = 0, kBush = 1, kUnknown = 2 };

inline constexpr std::size_t kNumClasses = 2;             // k landmark classes
inline constexpr std::size_t kNumSlots = kNumClasses + 1;  // plus "unknown"
inline constexpr std::size_t kUnknownSlot = kNumClasses;

std::string_view class_name(LandmarkClass c);
std::optional<LandmarkClass> class_from_name(std::string_view name);

/// Normalized score vector over the k landmark classes plus "unknown".
class ClassScores {
 public:
  /// Uniform over all slots; the "no information" prior.
  ClassScores();
  /// Normalizes `values`; throws std::invalid_argument on negative or
  /// non-finite entries or an all-zero vector.
  explicit ClassScores(const std::array<double, kNumSlots>& values);
  static ClassScores from_span(std::span<const double> values);

  static ClassScores uniform() { return ClassScores(); }
  static ClassScores one_hot(LandmarkClass c);

  double operator[](std::size_t i) const { return values_[i]; }
  double operator[](LandmarkClass c) const { return values_[static_cast<std::size_t>(c)]; }
  const std::array<double, kNumSlots>& values() const { return values_; }

  /// Highest-scoring slot; ties resolve to "unknown", then to the lower class id.
  LandmarkClass argmax() const;

  bool operator==(const ClassScores&) const = default;

 private:
  std::array<double, kNumSlots> values_;
};

/// Exponential moving average s <- normalize((1 - weight) * current + weight * incoming).
ClassScores fuse_class(const ClassScores& current, const ClassScores& incoming, double weight);

}  // namespace landmarks
