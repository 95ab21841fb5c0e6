#pragma once

// Versioned text format for fitted models. Every real is written as the
// shortest decimal that parses back to the same double, so save/load is
// bit-exact.

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>

#include "agbmap/regression/forest.hpp"
#include "agbmap/regression/linear.hpp"
#include "agbmap/text.hpp"

namespace agb::regression {

inline constexpr const char* kModelTag = "agbmap-model";
inline constexpr int kModelVersion = 1;

using Model = std::variant<LinearModel, Forest>;

namespace detail {

inline void check_token(const std::string& s) {
  require(!s.empty() && s.find_first_of(" \t\r\n") == std::string::npos, Errc::InvalidArgument,
          "feature name '" + s + "' cannot be stored (empty or contains whitespace)");
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string s;
    if (!(in_ >> s)) fail(Errc::ParseError, "model file truncated");
    return s;
  }
  void expect(const std::string& key) {
    const auto s = word();
    if (s != key) fail(Errc::ParseError, "model file: expected '" + key + "', found '" + s + "'");
  }
  double real() { return text::parse_double(word()); }
  long long integer() { return text::parse_int(word()); }
  std::uint64_t u64() {
    const auto s = word();
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) fail(Errc::ParseError, "not an unsigned: '" + s + "'");
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace detail

inline void save_model(std::ostream& out, const LinearModel& m) {
  using text::format_exact;
  out << kModelTag << ' ' << kModelVersion << "\nkind linear\n";
  out << "intercept " << format_exact(m.intercept) << '\n';
  out << "n " << m.n << "\nrss " << format_exact(m.rss) << "\nbic " << format_exact(m.bic) << '\n';
  out << "features " << m.selected_features.size() << '\n';
  for (std::size_t k = 0; k < m.selected_features.size(); ++k) {
    detail::check_token(m.selected_features[k]);
    out << m.selected_features[k] << ' ' << format_exact(m.coefficients[k]) << '\n';
  }
}

inline void save_model(std::ostream& out, const Forest& f) {
  using text::format_exact;
  out << kModelTag << ' ' << kModelVersion << "\nkind forest\n";
  out << "features " << f.names.size() << '\n';
  for (std::size_t j = 0; j < f.names.size(); ++j) {
    detail::check_token(f.names[j]);
    const bool cat = !f.kinds.empty() && f.kinds[j] == FeatureKind::Categorical;
    out << f.names[j] << ' ' << (cat ? "categorical" : "continuous") << '\n';
  }
  out << "params " << f.params.n_trees << ' ' << f.params.mtry << ' ' << f.params.min_leaf << '\n';
  out << "seed " << f.seed << '\n';
  out << "oob_error " << format_exact(f.oob_error) << '\n';
  out << "trees " << f.trees.size() << '\n';
  for (const auto& t : f.trees) {
    out << "tree " << t.nodes.size() << '\n';
    for (const auto& n : t.nodes)
      out << n.feature << ' ' << (n.categorical ? 1 : 0) << ' ' << format_exact(n.threshold) << ' ' << n.left_mask
          << ' ' << n.left << ' ' << n.right << ' ' << format_exact(n.value) << '\n';
  }
}

inline void save_model(std::ostream& out, const Model& m) {
  std::visit([&](const auto& v) { save_model(out, v); }, m);
}

inline Model load_model(std::istream& in) {
  detail::TokenReader r(in);
  r.expect(kModelTag);
  const auto version = r.integer();
  if (version != kModelVersion) fail(Errc::ParseError, "unsupported model version " + std::to_string(version));
  r.expect("kind");
  const auto kind = r.word();
  if (kind == "linear") {
    LinearModel m;
    r.expect("intercept");
    m.intercept = r.real();
    r.expect("n");
    m.n = static_cast<std::size_t>(r.integer());
    r.expect("rss");
    m.rss = r.real();
    r.expect("bic");
    m.bic = r.real();
    r.expect("features");
    const auto k = r.integer();
    for (long long i = 0; i < k; ++i) {
      m.selected_features.push_back(r.word());
      m.coefficients.push_back(r.real());
    }
    return m;
  }
  if (kind != "forest") fail(Errc::ParseError, "unknown model kind '" + kind + "'");
  Forest f;
  r.expect("features");
  const auto p = r.integer();
  for (long long j = 0; j < p; ++j) {
    f.names.push_back(r.word());
    const auto k = r.word();
    if (k != "continuous" && k != "categorical") fail(Errc::ParseError, "unknown feature kind '" + k + "'");
    f.kinds.push_back(k == "categorical" ? FeatureKind::Categorical : FeatureKind::Continuous);
  }
  r.expect("params");
  f.params.n_trees = static_cast<int>(r.integer());
  f.params.mtry = static_cast<int>(r.integer());
  f.params.min_leaf = static_cast<int>(r.integer());
  r.expect("seed");
  f.seed = r.u64();
  r.expect("oob_error");
  f.oob_error = r.real();
  r.expect("trees");
  const auto nt = r.integer();
  f.trees.resize(static_cast<std::size_t>(nt));
  for (auto& t : f.trees) {
    r.expect("tree");
    const auto nn = r.integer();
    t.nodes.resize(static_cast<std::size_t>(nn));
    for (auto& n : t.nodes) {
      n.feature = static_cast<int>(r.integer());
      n.categorical = r.integer() != 0;
      n.threshold = r.real();
      n.left_mask = r.u64();
      n.left = static_cast<int>(r.integer());
      n.right = static_cast<int>(r.integer());
      n.value = r.real();
      const bool bad = n.feature >= p || (n.feature >= 0 && (n.left < 0 || n.right < 0 || n.left >= nn || n.right >= nn));
      if (bad) fail(Errc::ParseError, "model file: malformed tree node");
    }
  }
  return f;
}

inline void save_model(const std::filesystem::path& path, const Model& m) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write " + path.string());
  save_model(out, m);
}

inline Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot read " + path.string());
  return load_model(in);
}

}  // namespace agb::regression
