#include "stt/metrics.hpp"

#include <iomanip>
#include <numeric>
#include <sstream>

#include "stt/errors.hpp"

namespace stt {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
  if (classes < 1) throw InputError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= classes_ || predicted >= classes_) {
    throw InputError("class index outside [0, " + std::to_string(classes_) + ")");
  }
  ++counts_[truth * classes_ + predicted];
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw InputError("cannot merge confusion matrices of different size");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  return counts_.at(truth * classes_ + predicted);
}

std::uint64_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::uint64_t n = 0;
  for (std::size_t p = 0; p < classes_; ++p) n += at(truth, p);
  return n;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t n = 0;
  for (std::size_t c = 0; c < classes_; ++c) n += at(c, c);
  return n;
}

EvalReport EvalReport::from_confusion(const ConfusionMatrix& confusion) {
  if (confusion.total() == 0) throw InputError("no samples to evaluate");
  EvalReport r;
  r.confusion = confusion;
  r.war = static_cast<double>(confusion.trace()) / static_cast<double>(confusion.total());
  double recall_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < confusion.classes(); ++c) {
    const auto n = confusion.row_total(c);
    if (n == 0) {
      r.per_class_recall.emplace_back(std::nullopt);
      continue;
    }
    const double recall = static_cast<double>(confusion.at(c, c)) / static_cast<double>(n);
    r.per_class_recall.emplace_back(recall);
    recall_sum += recall;
    ++present;
  }
  r.uar = recall_sum / static_cast<double>(present);
  return r;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "UAR " << uar << "  WAR " << war << "  (" << confusion.total() << " samples)\n";
  for (std::size_t c = 0; c < per_class_recall.size(); ++c) {
    os << "  class " << c << ": ";
    if (per_class_recall[c]) {
      os << "recall " << *per_class_recall[c];
    } else {
      os << "absent from labels, excluded from UAR";
    }
    os << '\n';
  }
  os << "confusion (rows = true, cols = predicted):\n";
  for (std::size_t t = 0; t < confusion.classes(); ++t) {
    os << ' ';
    for (std::size_t p = 0; p < confusion.classes(); ++p) os << ' ' << std::setw(6) << confusion.at(t, p);
    os << '\n';
  }
  return os.str();
}

std::string EvalReport::confusion_csv() const {
  std::ostringstream os;
  for (std::size_t t = 0; t < confusion.classes(); ++t) {
    for (std::size_t p = 0; p < confusion.classes(); ++p) {
      if (p) os << ',';
      os << confusion.at(t, p);
    }
    os << '\n';
  }
  return os.str();
}

std::string EvalReport::key_values() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "uar=" << uar << '\n' << "war=" << war << '\n' << "total=" << confusion.total() << '\n';
  for (std::size_t c = 0; c < per_class_recall.size(); ++c) {
    os << "recall_" << c << '=';
    if (per_class_recall[c]) {
      os << *per_class_recall[c];
    } else {
      os << "absent";
    }
    os << '\n';
  }
  return os.str();
}

EvalReport uar_war(const std::vector<std::size_t>& predictions,
                   const std::vector<std::size_t>& labels, std::size_t classes) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw InputError("uar_war needs equal-length, non-empty prediction and label lists");
  }
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) m.add(labels[i], predictions[i]);
  return EvalReport::from_confusion(m);
}

}  // namespace stt
