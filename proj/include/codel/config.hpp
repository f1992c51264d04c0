#pragma once

#include <charconv>
#include <cstdint>
#include <type_traits>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codel/codel.hpp"
#include "codel/error.hpp"
#include "codel/io.hpp"
#include "codel/local_search.hpp"
#include "codel/signal.hpp"

namespace codel {

/// Fully resolved parameters of one CLI run.
struct RunConfig {
  std::optional<std::uint64_t> seed;

  // paths
  std::string input;     // comma-separated signal/RR files (extract)
  std::string features;  // feature matrix (train, evaluate)
  std::string means;     // reference means table (compare-tables)
  std::string out_dir = ".";
  int label = 0;

  // preprocessing
  double fs = 100.0;
  double cutoff_hz = 25.0;
  int butterworth_order = 4;
  double hampel_sigmas = 3.0;

  // network; inputs = 0 takes the width of the feature matrix
  std::size_t inputs = 0;
  std::vector<std::size_t> hidden{10};

  CodelConfig codel{};
  LocalSearchConfig local{};

  std::size_t k = 10;
  double base_init_scale = 1.0;
};

namespace detail {

struct ConfigKey {
  std::string_view name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  const std::string t = io::trim(v);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
    throw FormatError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    return io::parse_double(v, "config key '" + key + "'");
  } catch (const FormatError&) {
    throw FormatError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

template <class Get>
ConfigKey real_key(std::string_view name, Get ref) {
  return {name, [ref, name](RunConfig& c, const std::string& v) { ref(c) = parse_real(std::string(name), v); },
          [ref](const RunConfig& c) { return io::format_double(ref(c)); }};
}

template <class Get>
ConfigKey size_key(std::string_view name, Get ref) {
  return {name,
          [ref, name](RunConfig& c, const std::string& v) {
            ref(c) = static_cast<std::remove_cvref_t<decltype(ref(c))>>(parse_uint(std::string(name), v));
          },
          [ref](const RunConfig& c) { return std::to_string(ref(c)); }};
}

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    k.push_back({"seed",
                 [](RunConfig& c, const std::string& v) { c.seed = parse_uint("seed", v); },
                 [](const RunConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }});
    k.push_back({"input", [](RunConfig& c, const std::string& v) { c.input = v; },
                 [](const RunConfig& c) { return c.input; }});
    k.push_back({"features", [](RunConfig& c, const std::string& v) { c.features = v; },
                 [](const RunConfig& c) { return c.features; }});
    k.push_back({"means", [](RunConfig& c, const std::string& v) { c.means = v; },
                 [](const RunConfig& c) { return c.means; }});
    k.push_back({"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
                 [](const RunConfig& c) { return c.out_dir; }});
    k.push_back({"label",
                 [](RunConfig& c, const std::string& v) {
                   const auto l = parse_uint("label", v);
                   if (l > 1) throw FormatError("config key 'label' must be 0 or 1, got '" + v + "'");
                   c.label = static_cast<int>(l);
                 },
                 [](const RunConfig& c) { return std::to_string(c.label); }});
    k.push_back(real_key("fs", [](auto& c) -> auto& { return c.fs; }));
    k.push_back(real_key("cutoff_hz", [](auto& c) -> auto& { return c.cutoff_hz; }));
    k.push_back(size_key("butterworth_order", [](auto& c) -> auto& { return c.butterworth_order; }));
    k.push_back(real_key("hampel_sigmas", [](auto& c) -> auto& { return c.hampel_sigmas; }));
    k.push_back(size_key("inputs", [](auto& c) -> auto& { return c.inputs; }));
    k.push_back({"hidden",
                 [](RunConfig& c, const std::string& v) {
                   c.hidden.clear();
                   for (const auto& part : io::split(v)) {
                     const auto n = parse_uint("hidden", part);
                     if (n == 0) throw FormatError("config key 'hidden' needs positive layer widths");
                     c.hidden.push_back(static_cast<std::size_t>(n));
                   }
                   if (c.hidden.empty()) throw FormatError("config key 'hidden' needs at least one layer");
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.hidden.size(); ++i) s += (i ? "," : "") + std::to_string(c.hidden[i]);
                   return s;
                 }});
    k.push_back(size_key("np", [](auto& c) -> auto& { return c.codel.np; }));
    k.push_back(size_key("nfe", [](auto& c) -> auto& { return c.codel.nfe_max; }));
    k.push_back(real_key("f", [](auto& c) -> auto& { return c.codel.f; }));
    k.push_back(real_key("cr", [](auto& c) -> auto& { return c.codel.cr; }));
    k.push_back(real_key("jr", [](auto& c) -> auto& { return c.codel.jr; }));
    k.push_back(size_key("cp", [](auto& c) -> auto& { return c.codel.cp; }));
    k.push_back(real_key("lower", [](auto& c) -> auto& { return c.codel.lower; }));
    k.push_back(real_key("upper", [](auto& c) -> auto& { return c.codel.upper; }));
    k.push_back({"method", [](RunConfig& c, const std::string& v) { c.local.method = parse_method(io::trim(v)); },
                 [](const RunConfig& c) { return std::string(method_name(c.local.method)); }});
    k.push_back(size_key("epochs", [](auto& c) -> auto& { return c.local.epochs; }));
    k.push_back(real_key("lr", [](auto& c) -> auto& { return c.local.lr; }));
    k.push_back(real_key("momentum", [](auto& c) -> auto& { return c.local.momentum; }));
    k.push_back(real_key("rp_eta_plus", [](auto& c) -> auto& { return c.local.rp.eta_plus; }));
    k.push_back(real_key("rp_eta_minus", [](auto& c) -> auto& { return c.local.rp.eta_minus; }));
    k.push_back(real_key("rp_delta0", [](auto& c) -> auto& { return c.local.rp.delta0; }));
    k.push_back(real_key("rp_delta_min", [](auto& c) -> auto& { return c.local.rp.delta_min; }));
    k.push_back(real_key("rp_delta_max", [](auto& c) -> auto& { return c.local.rp.delta_max; }));
    k.push_back(real_key("gda_inc", [](auto& c) -> auto& { return c.local.gda.inc; }));
    k.push_back(real_key("gda_dec", [](auto& c) -> auto& { return c.local.gda.dec; }));
    k.push_back(real_key("gda_max_perf_inc", [](auto& c) -> auto& { return c.local.gda.max_perf_inc; }));
    k.push_back(real_key("ls_c1", [](auto& c) -> auto& { return c.local.line_search.c1; }));
    k.push_back(real_key("ls_shrink", [](auto& c) -> auto& { return c.local.line_search.shrink; }));
    k.push_back(size_key("ls_max_backtracks",
                         [](auto& c) -> auto& { return c.local.line_search.max_backtracks; }));
    k.push_back(size_key("patience", [](auto& c) -> auto& { return c.local.patience; }));
    k.push_back(size_key("k", [](auto& c) -> auto& { return c.k; }));
    k.push_back(real_key("base_init_scale", [](auto& c) -> auto& { return c.base_init_scale; }));
    return k;
  }();
  return keys;
}

}  // namespace detail

/// Names of every accepted configuration key, in canonical order.
inline std::vector<std::string> config_key_names() {
  std::vector<std::string> out;
  for (const auto& k : detail::config_keys()) out.emplace_back(k.name);
  return out;
}

/// Parses `key = value` lines. Blank lines and `#` comments are ignored; keys
/// must be known.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                          const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = io::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw FormatError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    out.emplace_back(io::trim(std::string_view(s).substr(0, eq)), io::trim(std::string_view(s).substr(eq + 1)));
  }
  return out;
}

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : detail::config_keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw FormatError("unknown config key '" + key + "'");
}

/// Defaults, then file settings, then overrides. The seed is mandatory.
inline RunConfig parse_config(const std::optional<std::string>& file_text,
                              const std::vector<std::pair<std::string, std::string>>& overrides,
                              const std::string& origin = "config") {
  RunConfig cfg;
  if (file_text)
    for (const auto& [k, v] : parse_config_text(*file_text, origin)) apply_setting(cfg, k, v);
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
  if (!cfg.seed) throw FormatError("a seed is required (set 'seed' in the config or pass --seed)");
  return cfg;
}

/// Canonical `key = value` rendering, reparseable by parse_config.
inline std::string config_text(const RunConfig& cfg) {
  std::string s;
  for (const auto& k : detail::config_keys()) {
    s += std::string(k.name) + " = " + k.get(cfg) + "\n";
  }
  return s;
}

}  // namespace codel
