#include "landmarks/class_scores.hpp"

#include <cmath>
#include <stdexcept>

namespace landmarks {

std::string_view class_name(LandmarkClass c) {
  switch (c) {
    case LandmarkClass::kTree:
      return "tree";
    case LandmarkClass::kBush:
      return "bush";
    case LandmarkClass::kUnknown:
      return "unknown";
  }
  return "unknown";
}

std::optional<LandmarkClass> class_from_name(std::string_view name) {
  if (name == "tree") return LandmarkClass::kTree;
  if (name == "bush") return LandmarkClass::kBush;
  if (name == "unknown") return LandmarkClass::kUnknown;
  return std::nullopt;
}

ClassScores::ClassScores() { values_.fill(1.0 / static_cast<double>(kNumSlots)); }

ClassScores::ClassScores(const std::array<double, kNumSlots>& values) : values_(values) {
  double sum = 0.0;
  for (const double v : values_) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("class scores must be finite and >= 0");
    sum += v;
  }
  if (sum <= 0.0) throw std::invalid_argument("class scores must not all be zero");
  for (double& v : values_) v /= sum;
}

ClassScores ClassScores::from_span(std::span<const double> values) {
  if (values.size() != kNumSlots) {
    throw std::invalid_argument("class scores: expected " + std::to_string(kNumSlots) + " entries");
  }
  std::array<double, kNumSlots> a{};
  for (std::size_t i = 0; i < kNumSlots; ++i) a[i] = values[i];
  return ClassScores(a);
}

ClassScores ClassScores::one_hot(LandmarkClass c) {
  std::array<double, kNumSlots> a{};
  a[static_cast<std::size_t>(c)] = 1.0;
  return ClassScores(a);
}

LandmarkClass ClassScores::argmax() const {
  std::size_t best = kUnknownSlot;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (values_[i] > values_[best]) best = i;
  }
  return static_cast<LandmarkClass>(best);
}

ClassScores fuse_class(const ClassScores& current, const ClassScores& incoming, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw std::invalid_argument("fusion weight must lie in [0, 1]");
  std::array<double, kNumSlots> mixed{};
  for (std::size_t i = 0; i < kNumSlots; ++i) mixed[i] = (1.0 - weight) * current[i] + weight * incoming[i];
  return ClassScores(mixed);
}

}  // namespace landmarks
