#include "stt/ablate.hpp"

#include <chrono>
#include <iomanip>
#include <sstream>

namespace stt {

std::string to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::baseline:
      return "baseline";
    case AblationVariant::spatial_only:
      return "spatial-only";
    case AblationVariant::temporal_only:
      return "temporal-only";
    case AblationVariant::both:
      return "both";
  }
  return "?";
}

ModelGeometry ablation_geometry(ModelGeometry base, AblationVariant v) {
  base.spatial_attention = v == AblationVariant::spatial_only || v == AblationVariant::both;
  base.temporal_attention = v == AblationVariant::temporal_only || v == AblationVariant::both;
  if (v == AblationVariant::baseline) base.readout = Readout::mean;
  return base;
}

std::vector<AblationRow> ablate(const TrainConfig& base, const std::vector<LabeledClip>& train_data,
                                const std::vector<LabeledClip>& test_data,
                                const AblationProgress& progress) {
  std::vector<AblationRow> rows;
  for (auto v : {AblationVariant::baseline, AblationVariant::spatial_only,
                 AblationVariant::temporal_only, AblationVariant::both}) {
    auto cfg = base;
    cfg.model = ablation_geometry(base.model, v);
    const auto start = std::chrono::steady_clock::now();
    EpochCallback cb;
    if (progress) cb = [&](const EpochLog& e) { progress(v, e); };
    const auto result = train(cfg, train_data, nullptr, nullptr, cb);
    AblationRow row{v, evaluate(result.checkpoint, test_data, cfg.sampling), 0.0};
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(6) << "variant,uar,war,seconds\n";
  for (const auto& r : rows) {
    os << to_string(r.variant) << ',' << r.report.uar << ',' << r.report.war << ','
       << r.seconds << '\n';
  }
  return os.str();
}

}  // namespace stt
