#include "stt/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace stt {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad number '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("bad boolean '" + v + "'");
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  Setter set;
  Getter get;
};

#define STT_SIZE(expr)                                                                  \
  Key {                                                                                 \
    [](RunConfig& c, const std::string& v) { c.expr = parse_number<std::size_t>(v); }, \
        [](const RunConfig& c) { return std::to_string(c.expr); }                       \
  }
#define STT_REAL(expr)                                                             \
  Key {                                                                            \
    [](RunConfig& c, const std::string& v) { c.expr = parse_number<double>(v); }, \
        [](const RunConfig& c) { return fmt(c.expr); }                             \
  }
#define STT_BOOL(expr)                                                    \
  Key {                                                                   \
    [](RunConfig& c, const std::string& v) { c.expr = parse_bool(v); }, \
        [](const RunConfig& c) { return std::string(c.expr ? "true" : "false"); } \
  }
#define STT_TEXT(expr)                                          \
  Key {                                                         \
    [](RunConfig& c, const std::string& v) { c.expr = v; },   \
        [](const RunConfig& c) { return c.expr; }               \
  }

// Section -> ordered key table. "model.preset" is handled separately.
const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Key>>>>& schema() {
  static const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Key>>>> s = {
      {"",
       {{"seed", Key{[](RunConfig& c, const std::string& v) {
                       c.set_seed(parse_number<std::uint64_t>(v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.train.seed); }}}}},
      {"model",
       {{"stem", Key{[](RunConfig& c, const std::string& v) {
                       c.train.model.stem.kind = stem_kind_from_string(v);
                     },
                     [](const RunConfig& c) { return to_string(c.train.model.stem.kind); }}},
        {"in_height", STT_SIZE(train.model.stem.in_height)},
        {"in_width", STT_SIZE(train.model.stem.in_width)},
        {"in_channels", STT_SIZE(train.model.stem.in_channels)},
        {"patch", STT_SIZE(train.model.stem.patch)},
        {"stem_channels", STT_SIZE(train.model.stem.channels)},
        {"frames", STT_SIZE(train.model.frames)},
        {"dim", STT_SIZE(train.model.dim)},
        {"heads", STT_SIZE(train.model.heads)},
        {"blocks", STT_SIZE(train.model.blocks)},
        {"mlp_dim", STT_SIZE(train.model.mlp_dim)},
        {"classes", STT_SIZE(train.model.classes)},
        {"spatial_attention", STT_BOOL(train.model.spatial_attention)},
        {"temporal_attention", STT_BOOL(train.model.temporal_attention)},
        {"readout", Key{[](RunConfig& c, const std::string& v) {
                          c.train.model.readout = readout_from_string(v);
                        },
                        [](const RunConfig& c) { return to_string(c.train.model.readout); }}}}},
      {"sampling",
       {{"segments", STT_SIZE(train.sampling.segments)},
        {"frames_per_segment", STT_SIZE(train.sampling.frames_per_segment)}}},
      {"loss",
       {{"kind", Key{[](RunConfig& c, const std::string& v) {
                       c.train.loss.kind = loss_kind_from_string(v);
                     },
                     [](const RunConfig& c) { return to_string(c.train.loss.kind); }}},
        {"lambda", STT_REAL(train.loss.lambda)},
        {"beta", STT_REAL(train.loss.beta)},
        {"kl_variant", Key{[](RunConfig& c, const std::string& v) {
                             c.train.loss.kl_variant = kl_variant_from_string(v);
                           },
                           [](const RunConfig& c) { return to_string(c.train.loss.kl_variant); }}}}},
      {"optimizer",
       {{"lr", STT_REAL(train.optimizer.lr)},
        {"decay_period", STT_SIZE(train.optimizer.decay_period)},
        {"epochs", STT_SIZE(train.optimizer.epochs)},
        {"batch_size", STT_SIZE(train.optimizer.batch_size)},
        {"momentum", STT_REAL(train.optimizer.momentum)},
        {"weight_decay", STT_REAL(train.optimizer.weight_decay)},
        {"grad_clip", STT_REAL(train.optimizer.grad_clip)},
        {"eval_every", STT_SIZE(train.eval_every)}}},
      {"data",
       {{"task", Key{[](RunConfig& c, const std::string& v) {
                       c.data.synthetic.task = synthetic_task_from_string(v);
                     },
                     [](const RunConfig& c) { return to_string(c.data.synthetic.task); }}},
        {"frames", STT_SIZE(data.synthetic.frames)},
        {"noise", STT_REAL(data.synthetic.noise)},
        {"train_size", STT_SIZE(data.synthetic.train_size)},
        {"test_size", STT_SIZE(data.synthetic.test_size)},
        {"blob_spacing", STT_SIZE(data.synthetic.blob_spacing)},
        {"blob_sigma", STT_REAL(data.synthetic.blob_sigma)},
        {"dir", STT_TEXT(data.dir)}}},
      {"output",
       {{"dir", STT_TEXT(output.dir)},
        {"checkpoint", STT_TEXT(output.checkpoint)},
        {"results", STT_TEXT(output.results)},
        {"confusion", STT_TEXT(output.confusion)},
        {"log", STT_TEXT(output.log)},
        {"ablation", STT_TEXT(output.ablation)}}},
  };
  return s;
}

const Key* find_key(const std::string& section, const std::string& key) {
  for (const auto& [name, keys] : schema()) {
    if (name != section) continue;
    for (const auto& [k, entry] : keys) {
      if (k == key) return &entry;
    }
    return nullptr;
  }
  return nullptr;
}

bool known_section(const std::string& section) {
  for (const auto& [name, keys] : schema()) {
    if (name == section) return true;
  }
  return false;
}

ModelGeometry preset_geometry(const std::string& name) {
  if (name == "desk") return ModelGeometry::desk();
  if (name == "full") return ModelGeometry::full();
  if (name == "tiny") return ModelGeometry::tiny();
  throw ConfigError("unknown model preset '" + name + "'");
}

// Data geometry follows the model's stem.
void sync_data(RunConfig& c) {
  auto& s = c.data.synthetic;
  s.classes = c.train.model.classes;
  s.height = c.train.model.stem.in_height;
  s.width = c.train.model.stem.in_width;
  s.channels = c.train.model.stem.in_channels;
}

}  // namespace

std::string OutputConfig::path(const std::string& name) const {
  if (name.empty() || name.front() == '/' || dir.empty()) return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void RunConfig::set_seed(std::uint64_t seed) {
  train.seed = seed;
  data.synthetic.seed = seed;
}

void RunConfig::validate() const {
  train.validate();
  data.synthetic.validate();
  const auto& s = data.synthetic;
  const auto& g = train.model.stem;
  if (s.classes != train.model.classes || s.height != g.in_height || s.width != g.in_width ||
      s.channels != g.in_channels) {
    throw ConfigError("data geometry does not match the model");
  }
}

RunConfig RunConfig::desk() {
  RunConfig c;
  c.train.model = ModelGeometry::desk();
  c.train.optimizer.lr = 0.05;
  sync_data(c);
  return c;
}

RunConfig parse_config(const std::string& text) {
  struct Entry {
    std::size_t line;
    std::string section, key, value;
  };
  std::vector<Entry> entries;
  std::string preset;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    const auto where = "config line " + std::to_string(line) + ": ";
    auto s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty() || !known_section(section)) {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const auto key = trim(s.substr(0, eq));
    const auto value = trim(s.substr(eq + 1));
    const auto full = section.empty() ? key : section + "." + key;
    if (!seen.insert(full).second) throw ConfigError(where + "duplicate key " + full);
    if (value.empty()) throw ConfigError(where + "empty value for " + full);
    if (full == "model.preset") {
      preset = value;
      continue;
    }
    if (!find_key(section, key)) throw ConfigError(where + "unknown key " + full);
    entries.push_back({line, section, key, value});
  }

  auto cfg = RunConfig::desk();
  if (!preset.empty()) {
    try {
      cfg.train.model = preset_geometry(preset);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  for (const auto& e : entries) {
    try {
      find_key(e.section, e.key)->set(cfg, e.value);
    } catch (const Error& err) {
      throw ConfigError("config line " + std::to_string(e.line) + ": " + err.what());
    }
  }
  sync_data(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& [section, keys] : schema()) {
    if (!section.empty()) os << "\n[" << section << "]\n";
    for (const auto& [k, entry] : keys) {
      const auto v = entry.get(cfg);
      if (v.empty()) continue;
      os << k << " = " << v << '\n';
    }
  }
  return os.str();
}

}  // namespace stt
