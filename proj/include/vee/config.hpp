#ifndef VEE_CONFIG_HPP
#define VEE_CONFIG_HPP

// Resolved search configuration and its flat `key=value` text form.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "vee/error.hpp"
#include "vee/fingerprint.hpp"
#include "vee/voting.hpp"

namespace vee {

struct SearchConfig {
  std::size_t window_half = 100;     // nt
  std::size_t feature_dim = 48;      // nf
  std::size_t num_centroids = 4000;  // nc
  std::size_t n_nn = 200;            // nnn
  std::int64_t tol_err = 2;
  std::int64_t n_conf = 200;
  std::int64_t tol_delete = 250;
  int tau_sc = 0;
  std::size_t min_separation = 3;
  std::uint64_t seed = 1;
  std::size_t kmeans_iters = 50;

  FingerprintParams fingerprint() const { return {window_half, feature_dim, min_separation}; }

  SearchParams search() const {
    SearchParams p;
    p.n_nn = n_nn;
    p.tau_sc = tau_sc;
    p.voting.tol_err = tol_err;
    p.voting.tol_delete = tol_delete;
    p.voting.n_conf = n_conf;
    return p;
  }

  void validate() const {
    fingerprint().validate();
    if (n_nn < 1) throw InvalidInput("nnn must be >= 1");
    if (num_centroids < 1) throw InvalidInput("nc must be >= 1");
    if (tau_sc < 0) throw InvalidInput("tau_sc must be >= 0");
    search().voting.validate();
  }

  /// Applies one `key=value` setting; unknown keys are an error.
  void set(std::string_view key, std::string_view value) {
    auto parse_u = [&](auto& out) {
      using T = std::remove_reference_t<decltype(out)>;
      T v{};
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc{} || p != value.data() + value.size()) {
        throw InvalidInput("invalid value \"" + std::string(value) + "\" for " + std::string(key));
      }
      out = v;
    };
    if (key == "nt") parse_u(window_half);
    else if (key == "nf") parse_u(feature_dim);
    else if (key == "nc") parse_u(num_centroids);
    else if (key == "nnn") parse_u(n_nn);
    else if (key == "tol_err") parse_u(tol_err);
    else if (key == "n_conf") parse_u(n_conf);
    else if (key == "tol_delete") {
      if (value == "inf") tol_delete = kNeverPurge;
      else parse_u(tol_delete);
    } else if (key == "tau_sc") parse_u(tau_sc);
    else if (key == "min_sep") parse_u(min_separation);
    else if (key == "seed") parse_u(seed);
    else if (key == "kmeans_iters") parse_u(kmeans_iters);
    else throw InvalidInput("unknown configuration key \"" + std::string(key) + "\"");
  }

  std::string to_string() const {
    std::ostringstream os;
    os << "nt=" << window_half << '\n'
       << "nf=" << feature_dim << '\n'
       << "nc=" << num_centroids << '\n'
       << "nnn=" << n_nn << '\n'
       << "tol_err=" << tol_err << '\n'
       << "n_conf=" << n_conf << '\n';
    if (tol_delete == kNeverPurge) os << "tol_delete=inf\n";
    else os << "tol_delete=" << tol_delete << '\n';
    os << "tau_sc=" << tau_sc << '\n'
       << "min_sep=" << min_separation << '\n'
       << "seed=" << seed << '\n'
       << "kmeans_iters=" << kmeans_iters << '\n';
    return os.str();
  }
};

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

/// Reads `key=value` lines into `cfg`. Blank lines and `#` comments are skipped.
inline void apply_config_text(SearchConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidInput("config line " + std::to_string(line_no) + ": expected key=value");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline void apply_config_file(SearchConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

}  // namespace vee

#endif  // VEE_CONFIG_HPP
