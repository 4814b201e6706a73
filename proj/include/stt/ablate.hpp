#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stt/train.hpp"

namespace stt {

enum class AblationVariant { baseline, spatial_only, temporal_only, both };

std::string to_string(AblationVariant v);

struct AblationRow {
  AblationVariant variant;
  EvalReport report;
  double seconds = 0.0;
};

/// Geometry for one variant: disabled stages become the identity, and the
/// baseline (no attention at all) reads out by frame-mean pooling.
ModelGeometry ablation_geometry(ModelGeometry base, AblationVariant v);

using AblationProgress = std::function<void(AblationVariant, const EpochLog&)>;

/// Trains all four variants with the same seed and budget and evaluates each
/// on `test`. Rows come back in the order baseline, spatial-only,
/// temporal-only, both.
std::vector<AblationRow> ablate(const TrainConfig& base, const std::vector<LabeledClip>& train_data,
                                const std::vector<LabeledClip>& test_data,
                                const AblationProgress& progress = {});

/// CSV with header variant,uar,war,seconds.
std::string format_ablation(const std::vector<AblationRow>& rows);

}  // namespace stt
