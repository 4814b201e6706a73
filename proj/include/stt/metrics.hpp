#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stt {

/// C x C counts; row = true class, column = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  void add(std::size_t truth, std::size_t predicted);
  /// Element-wise sum; associative and order-independent.
  void merge(const ConfusionMatrix& other);

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const;
  std::uint64_t row_total(std::size_t truth) const;
  std::uint64_t total() const;
  std::uint64_t trace() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

struct EvalReport {
  ConfusionMatrix confusion{2};
  double uar = 0.0;
  double war = 0.0;
  /// Empty for classes with no true samples; those are left out of the UAR.
  std::vector<std::optional<double>> per_class_recall;

  static EvalReport from_confusion(const ConfusionMatrix& confusion);

  /// Human-readable block.
  std::string to_text() const;
  /// Confusion counts, one CSV row per true class.
  std::string confusion_csv() const;
  /// key=value lines: uar, war, total, recall_<c> (or "absent").
  std::string key_values() const;
};

/// WAR = overall accuracy; UAR = mean recall over classes present in labels.
/// Throws InputError on empty/mismatched lists or out-of-range classes.
EvalReport uar_war(const std::vector<std::size_t>& predictions,
                   const std::vector<std::size_t>& labels, std::size_t classes);

}  // namespace stt
