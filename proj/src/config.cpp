#include "bfscl/config.hpp"

#include <charconv>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "bfscl/binary_io.hpp"
#include "bfscl/error.hpp"

namespace bfscl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_uint(key, trim(item)));
  if (out.empty()) throw ConfigError("config: '" + key + "' expects a comma-separated list");
  return out;
}

std::string list_text(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset", [](auto& c, auto&, auto& v) { c.dataset = v; }},
      {"bundle", [](auto& c, auto&, auto& v) { c.bundle = v; }},
      {"out", [](auto& c, auto&, auto& v) { c.out = v; }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = to_uint(k, v); }},
      {"base_classes", [](auto& c, auto& k, auto& v) { c.split.base_classes = to_uint(k, v); }},
      {"n_way", [](auto& c, auto& k, auto& v) { c.split.n_way = to_uint(k, v); }},
      {"k_shot", [](auto& c, auto& k, auto& v) { c.split.k_shot = to_uint(k, v); }},
      {"n_incremental", [](auto& c, auto& k, auto& v) { c.split.n_incremental = to_uint(k, v); }},
      {"student.channels", [](auto& c, auto& k, auto& v) { c.channels = to_list(k, v); }},
      {"student.kernel", [](auto& c, auto& k, auto& v) { c.kernel = to_uint(k, v); }},
      {"student.embed_dim", [](auto& c, auto& k, auto& v) { c.embed_dim = to_uint(k, v); }},
      {"mine.d_common", [](auto& c, auto& k, auto& v) { c.d_common = to_uint(k, v); }},
      {"mine.channels", [](auto& c, auto& k, auto& v) { c.mine_channels = to_uint(k, v); }},
      {"mine.clamp", [](auto& c, auto& k, auto& v) { c.clamp = to_double(k, v); }},
      {"alpha.hidden", [](auto& c, auto& k, auto& v) { c.alpha_hidden = to_list(k, v); }},
      {"train.epochs_base", [](auto& c, auto& k, auto& v) { c.train.epochs_base = to_uint(k, v); }},
      {"train.epochs_incremental", [](auto& c, auto& k, auto& v) { c.train.epochs_incremental = to_uint(k, v); }},
      {"train.batch", [](auto& c, auto& k, auto& v) { c.train.batch_size = to_uint(k, v); }},
      {"train.lr", [](auto& c, auto& k, auto& v) { c.train.lr = to_double(k, v); }},
      {"train.incremental_lr_scale", [](auto& c, auto& k, auto& v) { c.train.incremental_lr_scale = to_double(k, v); }},
      {"train.lambda_bet", [](auto& c, auto& k, auto& v) { c.train.lambda_bet = to_double(k, v); }},
      {"train.beta1", [](auto& c, auto& k, auto& v) { c.train.beta1 = to_double(k, v); }},
      {"train.beta2", [](auto& c, auto& k, auto& v) { c.train.beta2 = to_double(k, v); }},
      {"train.adam_eps", [](auto& c, auto& k, auto& v) { c.train.adam_eps = to_double(k, v); }},
      {"eval.batch", [](auto& c, auto& k, auto& v) { c.eval_batch = to_uint(k, v); }},
      {"enable_bet", [](auto& c, auto& k, auto& v) { c.train.enable_bet = to_bool(k, v); }},
      {"enable_iad", [](auto& c, auto& k, auto& v) { c.train.enable_iad = to_bool(k, v); }},
      {"teacher.scale_dims", [](auto& c, auto& k, auto& v) { c.teacher_scale_dims = to_list(k, v); }},
      {"teacher.embed_dim", [](auto& c, auto& k, auto& v) { c.teacher_embed_dim = to_uint(k, v); }},
      {"reference_final", [](auto& c, auto& k, auto& v) { c.reference_final = to_double(k, v); }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
  cfg.split.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  try {
    return parse_config(io::read_file(path));
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "dataset = " << c.dataset << '\n'
     << "bundle = " << c.bundle << '\n'
     << "out = " << c.out << '\n'
     << "seed = " << c.seed << '\n'
     << "base_classes = " << c.split.base_classes << '\n'
     << "n_way = " << c.split.n_way << '\n'
     << "k_shot = " << c.split.k_shot << '\n'
     << "n_incremental = " << c.split.n_incremental << '\n'
     << "student.channels = " << list_text(c.channels) << '\n'
     << "student.kernel = " << c.kernel << '\n'
     << "student.embed_dim = " << c.embed_dim << '\n'
     << "mine.d_common = " << c.d_common << '\n'
     << "mine.channels = " << c.mine_channels << '\n'
     << "mine.clamp = " << num(c.clamp) << '\n'
     << "alpha.hidden = " << list_text(c.alpha_hidden) << '\n'
     << "train.epochs_base = " << c.train.epochs_base << '\n'
     << "train.epochs_incremental = " << c.train.epochs_incremental << '\n'
     << "train.batch = " << c.train.batch_size << '\n'
     << "train.lr = " << num(c.train.lr) << '\n'
     << "train.incremental_lr_scale = " << num(c.train.incremental_lr_scale) << '\n'
     << "train.lambda_bet = " << num(c.train.lambda_bet) << '\n'
     << "train.beta1 = " << num(c.train.beta1) << '\n'
     << "train.beta2 = " << num(c.train.beta2) << '\n'
     << "train.adam_eps = " << num(c.train.adam_eps) << '\n'
     << "eval.batch = " << c.eval_batch << '\n'
     << "enable_bet = " << (c.train.enable_bet ? "true" : "false") << '\n'
     << "enable_iad = " << (c.train.enable_iad ? "true" : "false") << '\n';
  if (!c.teacher_scale_dims.empty()) os << "teacher.scale_dims = " << list_text(c.teacher_scale_dims) << '\n';
  if (c.teacher_embed_dim) os << "teacher.embed_dim = " << *c.teacher_embed_dim << '\n';
  if (c.reference_final) os << "reference_final = " << num(*c.reference_final) << '\n';
  return os.str();
}

void validate_config(const ExperimentConfig& c) {
  namespace fs = std::filesystem;
  if (c.dataset.empty()) throw ConfigError("config: 'dataset' is required");
  if (!fs::exists(fs::path(c.dataset) / "index.bin")) {
    throw ConfigError("config: dataset '" + c.dataset + "' has no index.bin");
  }
  const bool needs_teacher = c.train.enable_bet || c.train.enable_iad;
  if (needs_teacher && c.bundle.empty()) {
    throw ConfigError("config: 'bundle' is required when enable_bet or enable_iad is true");
  }
  if (!c.bundle.empty() && !fs::exists(c.bundle)) throw ConfigError("config: bundle '" + c.bundle + "' does not exist");
  if (c.out.empty()) throw ConfigError("config: 'out' must not be empty");
  if (c.channels.empty()) throw ConfigError("config: student.channels must list at least one stage");
  if (c.kernel % 2 == 0) throw ConfigError("config: student.kernel must be odd");
  if (c.alpha_hidden.size() != 2) throw ConfigError("config: alpha.hidden needs exactly two widths");
  if (c.train.batch_size == 0 || c.eval_batch == 0) throw ConfigError("config: batch sizes must be positive");
  if (!(c.train.lr > 0.0) || !(c.train.incremental_lr_scale > 0.0)) throw ConfigError("config: learning rates must be positive");
  if (!(c.train.beta1 > 0.0 && c.train.beta1 < 1.0) || !(c.train.beta2 > 0.0 && c.train.beta2 < 1.0) ||
      !(c.train.adam_eps > 0.0)) {
    throw ConfigError("config: Adam hyperparameters out of range");
  }
  if (!(c.train.lambda_bet >= 0.0)) throw ConfigError("config: train.lambda_bet must be non-negative");
  if (!(c.clamp > 0.0)) throw ConfigError("config: mine.clamp must be positive");
}

}  // namespace bfscl
