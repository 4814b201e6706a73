#pragma once

// Run configuration file: line-oriented `key = value` text.
//
//   # comment
//   seed = 7
//   [model]
//   preset = desk            # applied before the other model keys
//   dim = 64
//   [optimizer]
//   lr = 0.01
//
// Sections: model, sampling, loss, optimizer, data, output. Keys before the
// first section are top-level (only `seed`). Unknown sections or keys, bad
// values and duplicate keys are ConfigErrors carrying the line number.

#include <cstdint>
#include <string>

#include "stt/synthetic.hpp"
#include "stt/train.hpp"

namespace stt {

struct DataConfig {
  SyntheticSpec synthetic;
  /// Directory of clip files written by gen-data. Empty: generate in memory.
  std::string dir;
};

struct OutputConfig {
  std::string dir = ".";
  std::string checkpoint = "model.sttc";
  std::string results = "results.txt";      // key=value lines
  std::string confusion = "confusion.csv";  // CSV confusion matrix
  std::string log = "train_log.csv";        // per-epoch CSV
  std::string ablation = "ablation.csv";

  /// `dir`/`name` unless `name` is absolute.
  std::string path(const std::string& name) const;
};

struct RunConfig {
  TrainConfig train;
  DataConfig data;
  OutputConfig output;

  /// Applies one seed to training and data generation.
  void set_seed(std::uint64_t seed);
  void validate() const;

  /// Desk-scale defaults: desk geometry, 4x2 sampling, compact loss,
  /// SGD lr 0.1 (divided by 10 every 40 epochs), 60 epochs, batch 16,
  /// motion-direction data.
  static RunConfig desk();
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);

}  // namespace stt
