#pragma once

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "topm/errors.hpp"
#include "topm/instances.hpp"

// Instance files: `<name>.csv` holds `arm_id,f1,...,fN[,mu]`, one row per
// arm; `<name>.json` holds sigma, theta, reward_law, param_bound and an
// optional path to a long-format `arm_id,reward` table.

namespace topm {

namespace io_detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": not a number: '" + s + "'");
  }
}

inline long parse_long(const std::string& s, const std::string& where) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(where + ": not an integer: '" + s + "'");
  return v;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  return p.replace_extension(".json");
}

}  // namespace io_detail

inline std::vector<std::vector<double>> load_reward_table(const std::filesystem::path& path, int arms) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open reward table " + path.string());
  std::string line;
  if (!std::getline(in, line) || io_detail::split(line) != std::vector<std::string>{"arm_id", "reward"})
    throw ParseError(path.string() + ": expected header 'arm_id,reward'");
  std::vector<std::vector<double>> table(arms);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = io_detail::split(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 2) throw ParseError(where + ": expected 2 fields");
    const long arm = io_detail::parse_long(f[0], where);
    if (arm < 0 || arm >= arms) throw ParseError(where + ": arm id out of range");
    table[arm].push_back(io_detail::parse_double(f[1], where));
  }
  return table;
}

inline Instance load_instance(const std::filesystem::path& csv_path) {
  using io_detail::split;
  std::ifstream in(csv_path);
  if (!in) throw ParseError("cannot open instance file " + csv_path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(csv_path.string() + ": empty file");
  const auto header = split(line);
  if (header.size() < 2 || header[0] != "arm_id")
    throw ParseError(csv_path.string() + ": header must start with 'arm_id'");
  const bool has_mu = header.back() == "mu";
  const int n = static_cast<int>(header.size()) - 1 - (has_mu ? 1 : 0);
  if (n < 1) throw ParseError(csv_path.string() + ": no feature columns");
  for (int i = 0; i < n; ++i)
    if (header[i + 1] != "f" + std::to_string(i + 1))
      throw ParseError(csv_path.string() + ": malformed header column '" + header[i + 1] + "'");

  std::vector<std::vector<double>> rows;
  std::vector<double> mus;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    const std::string where = csv_path.string() + ":" + std::to_string(lineno);
    if (f.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(f.size()));
    if (io_detail::parse_long(f[0], where) != static_cast<long>(rows.size()))
      throw ParseError(where + ": arm ids must be 0..K-1 in order");
    std::vector<double> feat(n);
    for (int i = 0; i < n; ++i) feat[i] = io_detail::parse_double(f[i + 1], where);
    rows.push_back(std::move(feat));
    if (has_mu) mus.push_back(io_detail::parse_double(f.back(), where));
  }
  const int k = static_cast<int>(rows.size());
  if (k < 2) throw ParseError(csv_path.string() + ": need at least two arms");
  Matrix x(n, k);
  for (int a = 0; a < k; ++a)
    for (int i = 0; i < n; ++i) x(i, a) = rows[a][i];

  const auto side = io_detail::sidecar_path(csv_path);
  std::ifstream sin(side);
  if (!sin) throw ParseError("cannot open sidecar " + side.string());
  nlohmann::json meta;
  try {
    sin >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(side.string() + ": " + e.what());
  }
  if (!meta.contains("sigma") || !meta["sigma"].is_number())
    throw ParseError(side.string() + ": missing numeric 'sigma'");
  const double sigma = meta["sigma"].get<double>();
  const RewardLaw law = parse_reward_law(meta.value("reward_law", std::string("gaussian-linear")));
  std::optional<double> param_bound;
  if (meta.contains("param_bound")) param_bound = meta["param_bound"].get<double>();

  std::optional<Vector> theta;
  if (meta.contains("theta") && !meta["theta"].is_null()) {
    const auto t = meta["theta"].get<std::vector<double>>();
    if (static_cast<int>(t.size()) != n)
      throw ParseError(side.string() + ": theta has length " + std::to_string(t.size()) +
                       ", features have N = " + std::to_string(n));
    theta = Eigen::Map<const Vector>(t.data(), n);
  }
  if (!theta && !has_mu) throw ParseError(csv_path.string() + ": neither theta nor a mu column given");

  try {
    if (law == RewardLaw::empirical_table) {
      if (!meta.contains("reward_table"))
        throw ParseError(side.string() + ": empirical-table law requires 'reward_table'");
      std::filesystem::path table_path = meta["reward_table"].get<std::string>();
      if (table_path.is_relative()) table_path = side.parent_path() / table_path;
      Instance inst = make_table_instance(std::move(x), load_reward_table(table_path, k), sigma, param_bound);
      inst.theta = theta;
      if (has_mu) inst.means = Eigen::Map<const Vector>(mus.data(), k);
      inst.validate();
      return inst;
    }
    Instance inst;
    if (theta) {
      inst = make_linear_instance(std::move(x), *theta, sigma);
      if (param_bound) inst.param_bound = param_bound;
    } else {
      inst.means = Eigen::Map<const Vector>(mus.data(), k);
      inst.feature_bound = max_column_norm(x);
      inst.features = std::move(x);
      inst.sigma = sigma;
      inst.param_bound = param_bound;
    }
    inst.validate();
    return inst;
  } catch (const ContractViolation& e) {
    throw ParseError(csv_path.string() + ": " + e.what());
  }
}

/// Writes `<stem>.csv`, `<stem>.json` and, for table instances, `<stem>_rewards.csv`.
inline void save_instance(const Instance& inst, const std::filesystem::path& csv_path) {
  using io_detail::format_double;
  const bool write_mu = !inst.theta || inst.reward_law == RewardLaw::empirical_table;
  {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path.string());
    out << "arm_id";
    for (int i = 0; i < inst.dim(); ++i) out << ",f" << i + 1;
    if (write_mu) out << ",mu";
    out << '\n';
    for (int a = 0; a < inst.arms(); ++a) {
      out << a;
      for (int i = 0; i < inst.dim(); ++i) out << ',' << format_double(inst.features(i, a));
      if (write_mu) out << ',' << format_double(inst.means[a]);
      out << '\n';
    }
  }
  nlohmann::json meta;
  meta["sigma"] = inst.sigma;
  meta["reward_law"] = to_string(inst.reward_law);
  if (inst.theta) meta["theta"] = std::vector<double>(inst.theta->data(), inst.theta->data() + inst.theta->size());
  if (inst.param_bound) meta["param_bound"] = *inst.param_bound;
  if (inst.reward_law == RewardLaw::empirical_table) {
    auto table_path = csv_path;
    table_path.replace_filename(csv_path.stem().string() + "_rewards.csv");
    std::ofstream out(table_path);
    if (!out) throw std::runtime_error("cannot write " + table_path.string());
    out << "arm_id,reward\n";
    for (int a = 0; a < inst.arms(); ++a)
      for (double r : inst.reward_table[a]) out << a << ',' << format_double(r) << '\n';
    meta["reward_table"] = table_path.filename().string();
  }
  std::ofstream side(io_detail::sidecar_path(csv_path));
  if (!side) throw std::runtime_error("cannot write sidecar for " + csv_path.string());
  // nlohmann emits doubles with round-trip precision
  side << meta.dump(2) << '\n';
}

}  // namespace topm
