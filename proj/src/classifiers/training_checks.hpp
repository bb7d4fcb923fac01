#pragma once

#include <array>
#include <span>

#include "llmdetect/classifiers.hpp"

namespace llmdetect::detail {

/// Shape, finiteness and two-class checks shared by every trainer.
/// Returns the per-class counts.
std::array<std::size_t, 2> check_training_data(const FeatureMatrix& x, std::span<const Label> y);

}  // namespace llmdetect::detail
