#pragma once

// On-disk dataset: one feature file per clip plus a `labels.csv` index with
// header split,file,label (file paths relative to the directory).

#include <string>

#include "stt/synthetic.hpp"

namespace stt {

void write_dataset(const std::string& dir, const Dataset& data);
/// Throws InputError on a missing or malformed index, CorruptFileError on a
/// bad clip file.
Dataset read_dataset(const std::string& dir);

}  // namespace stt
