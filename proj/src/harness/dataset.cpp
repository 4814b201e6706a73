#include "stt/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stt/embed.hpp"

namespace stt {

namespace fs = std::filesystem;

void write_dataset(const std::string& dir, const Dataset& data) {
  fs::create_directories(fs::path(dir) / "train");
  fs::create_directories(fs::path(dir) / "test");
  std::ofstream index(fs::path(dir) / "labels.csv");
  if (!index) throw InputError("cannot write " + (fs::path(dir) / "labels.csv").string());
  index << "split,file,label\n";
  auto emit = [&](const char* split, const std::vector<LabeledClip>& clips) {
    for (std::size_t i = 0; i < clips.size(); ++i) {
      const auto& c = clips[i];
      char name[32];
      std::snprintf(name, sizeof name, "clip_%05zu.sttf", i);
      const auto rel = std::string(split) + "/" + name;
      write_feature_file((fs::path(dir) / rel).string(),
                         FeatureGrid{static_cast<std::uint32_t>(c.frames),
                                     static_cast<std::uint32_t>(c.height),
                                     static_cast<std::uint32_t>(c.width),
                                     static_cast<std::uint32_t>(c.channels), c.pixels});
      index << split << ',' << rel << ',' << c.label << '\n';
    }
  };
  emit("train", data.train);
  emit("test", data.test);
}

Dataset read_dataset(const std::string& dir) {
  const auto index_path = fs::path(dir) / "labels.csv";
  std::ifstream index(index_path);
  if (!index) throw InputError("cannot read dataset index " + index_path.string());
  std::string line;
  if (!std::getline(index, line) || line != "split,file,label") {
    throw InputError("bad dataset index header in " + index_path.string());
  }
  Dataset data;
  for (std::size_t n = 2; std::getline(index, line); ++n) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string split, file, label;
    if (!std::getline(row, split, ',') || !std::getline(row, file, ',') ||
        !std::getline(row, label)) {
      throw InputError("bad dataset index line " + std::to_string(n));
    }
    const auto grid = read_feature_file((fs::path(dir) / file).string());
    LabeledClip clip{grid.frames, grid.height, grid.width, grid.channels, grid.values, 0};
    try {
      clip.label = std::stoul(label);
    } catch (const std::exception&) {
      throw InputError("bad label on dataset index line " + std::to_string(n));
    }
    if (split == "train") {
      data.train.push_back(std::move(clip));
    } else if (split == "test") {
      data.test.push_back(std::move(clip));
    } else {
      throw InputError("unknown split '" + split + "' on dataset index line " +
                       std::to_string(n));
    }
  }
  return data;
}

}  // namespace stt
