#include "dmn/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "dmn/architectures.hpp"

namespace dmn {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& value, const std::string& key, const std::string& where) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw ConfigError(where + ": invalid value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& value, const std::string& key, const std::string& where) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(where + ": invalid value '" + value + "' for " + key +
                    " (expected true or false)");
}

std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Entry {
  std::string where;
  std::string key;
  std::string value;
};

std::vector<Entry> read_entries(std::string_view text, const std::string& source) {
  std::vector<Entry> out;
  std::map<std::string, std::size_t> seen;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key=value");
    Entry e{where, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1)))};
    if (e.key.empty()) throw ConfigError(where + ": empty key");
    if (!seen.emplace(e.key, lineno).second) {
      throw ConfigError(where + ": duplicate key " + e.key + " (first set on line " +
                        std::to_string(seen[e.key]) + ")");
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    const std::string& source) {
  std::map<std::string, std::string> out;
  for (auto& e : read_entries(text, source)) out.emplace(std::move(e.key), std::move(e.value));
  return out;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.weight_decay = weight_decay;
  t.momentum = momentum;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.seed = seed;
  return t;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << "architecture=" << architecture << '\n'
     << "dataset=" << dataset << '\n'
     << "output_dir=" << output_dir << '\n'
     << "seed=" << seed << '\n'
     << "learning_rate=" << format_real(learning_rate) << '\n'
     << "weight_decay=" << format_real(weight_decay) << '\n'
     << "momentum=" << format_real(momentum) << '\n'
     << "epochs=" << epochs << '\n'
     << "batch_size=" << batch_size << '\n'
     << "input_size=" << input_size << '\n'
     << "channels=" << channels << '\n'
     << "reconstruction_dilate_se=" << (reconstruction_dilate_se ? "true" : "false") << '\n';
  return os.str();
}

void apply_config_key(ExperimentConfig& c, const std::string& key, const std::string& value,
                      const std::string& where) {
  if (key == "architecture") {
    c.architecture = value;
  } else if (key == "dataset") {
    c.dataset = value;
  } else if (key == "output_dir") {
    c.output_dir = value;
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(value, key, where);
  } else if (key == "learning_rate") {
    c.learning_rate = parse_number<double>(value, key, where);
  } else if (key == "weight_decay") {
    c.weight_decay = parse_number<double>(value, key, where);
  } else if (key == "momentum") {
    c.momentum = parse_number<double>(value, key, where);
  } else if (key == "epochs") {
    c.epochs = parse_number<std::size_t>(value, key, where);
  } else if (key == "batch_size") {
    c.batch_size = parse_number<std::size_t>(value, key, where);
  } else if (key == "input_size") {
    c.input_size = parse_number<std::size_t>(value, key, where);
  } else if (key == "channels") {
    c.channels = parse_number<std::size_t>(value, key, where);
  } else if (key == "reconstruction_dilate_se") {
    c.reconstruction_dilate_se = parse_bool(value, key, where);
  } else {
    throw ConfigError(where + ": unknown key " + key);
  }
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  ExperimentConfig c;
  for (const auto& e : read_entries(text, source)) apply_config_key(c, e.key, e.value, e.where);
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void validate_config(const ExperimentConfig& c) {
  if (!is_architecture(c.architecture)) {
    throw ConfigError("unknown architecture '" + c.architecture + "'");
  }
  if (c.dataset.empty()) throw ConfigError("dataset must not be empty");
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (c.input_size == 0) throw ConfigError("input_size must be positive");
  if (c.channels != 0 && c.channels != 1 && c.channels != 3) {
    throw ConfigError("channels must be 0 (auto), 1 or 3");
  }
  try {
    c.train_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace dmn
