#include "oto/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace oto {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int out;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer for " + key + ": '" + v + "'");
  }
  if (used != v.size())
    throw std::runtime_error("config: bad integer for " + key + ": '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for " + key + ": '" + v + "'");
  }
  if (used != v.size())
    throw std::runtime_error("config: bad number for " + key + ": '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace

std::string serialize_configs(const OtoConfig& m, const TrainConfig& t) {
  std::ostringstream out;
  out << "model.branch_kinds=" << m.branch_kinds << "\n"
      << "model.fusion=" << fusion_to_string(m.fusion) << "\n"
      << "model.channels=" << m.channels << "\n"
      << "model.units_per_branch=" << m.units_per_branch << "\n"
      << "model.tail_resunits=" << m.tail_resunits << "\n"
      << "model.alpha_init=" << m.alpha_init << "\n"
      << "model.fusion_convs=" << m.fusion_convs << "\n"
      << "model.fusion_relu=" << (m.fusion_relu ? "true" : "false") << "\n"
      << "model.single_branch=" << single_branch_to_string(m.single_branch) << "\n"
      << "train.lr0=" << t.lr0 << "\n"
      << "train.momentum=" << t.momentum << "\n"
      << "train.weight_decay=" << t.weight_decay << "\n"
      << "train.decay_factor=" << t.decay_factor << "\n"
      << "train.decay_every=" << t.decay_every << "\n"
      << "train.max_iters=" << t.max_iters << "\n"
      << "train.batch_size=" << t.batch_size << "\n"
      << "train.seed=" << t.seed << "\n"
      << "train.desk_scale=" << (t.desk_scale ? "true" : "false") << "\n"
      << "train.log_every=" << t.log_every << "\n"
      << "train.alpha_log_every=" << t.alpha_log_every << "\n";
  return out.str();
}

void parse_configs(const std::string& text, OtoConfig& m, TrainConfig& t) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " is not key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "model.branch_kinds") m.branch_kinds = val;
    else if (key == "model.fusion") m.fusion = fusion_from_string(val);
    else if (key == "model.channels") m.channels = to_int(key, val);
    else if (key == "model.units_per_branch") m.units_per_branch = to_int(key, val);
    else if (key == "model.tail_resunits") m.tail_resunits = to_int(key, val);
    else if (key == "model.alpha_init") m.alpha_init = static_cast<float>(to_double(key, val));
    else if (key == "model.fusion_convs") m.fusion_convs = to_int(key, val);
    else if (key == "model.fusion_relu") m.fusion_relu = to_bool(key, val);
    else if (key == "model.single_branch") m.single_branch = single_branch_from_string(val);
    else if (key == "train.lr0") t.lr0 = to_double(key, val);
    else if (key == "train.momentum") t.momentum = to_double(key, val);
    else if (key == "train.weight_decay") t.weight_decay = to_double(key, val);
    else if (key == "train.decay_factor") t.decay_factor = to_double(key, val);
    else if (key == "train.decay_every") t.decay_every = to_int(key, val);
    else if (key == "train.max_iters") t.max_iters = to_int(key, val);
    else if (key == "train.batch_size") t.batch_size = to_int(key, val);
    else if (key == "train.seed") t.seed = static_cast<std::uint32_t>(to_int(key, val));
    else if (key == "train.desk_scale") t.desk_scale = to_bool(key, val);
    else if (key == "train.log_every") t.log_every = to_int(key, val);
    else if (key == "train.alpha_log_every") t.alpha_log_every = to_int(key, val);
    else throw std::runtime_error("config: unknown key '" + key + "'");
  }
}

void save_config_file(const std::string& path, const OtoConfig& m,
                      const TrainConfig& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_configs(m, t);
  if (!out) throw std::runtime_error("write failed for " + path);
}

void load_config_file(const std::string& path, OtoConfig& m, TrainConfig& t) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  parse_configs(buf.str(), m, t);
}

}  // namespace oto
