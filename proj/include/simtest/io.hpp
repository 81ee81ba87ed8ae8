#pragma once

// Text artifact formats: BFN, RFN, DST, CIR, PRT, CCT, and template-set directories.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "simtest/circuits.hpp"
#include "simtest/constructions.hpp"
#include "simtest/core.hpp"

namespace simtest {

/// A malformed artifact, located by 1-based line and column.
class parse_error : public std::runtime_error {
 public:
  parse_error(std::string what, std::size_t line, std::size_t column)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Whitespace-separated tokens with their positions.
class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  struct Token {
    std::string_view text;
    std::size_t line;
    std::size_t column;
  };

  bool at_end() {
    skip();
    return pos_ >= text_.size();
  }

  std::size_t line() const { return line_; }

  Token next(std::string_view what) {
    skip();
    if (pos_ >= text_.size()) throw parse_error("expected " + std::string(what) + ", found end of file", line_, col_);
    const std::size_t start = pos_, l = line_, c = col_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
      ++col_;
    }
    return {text_.substr(start, pos_ - start), l, c};
  }

  /// The next token, which must sit on the current line.
  Token same_line(std::string_view what) {
    const auto l = line_;
    skip_inline();
    if (pos_ >= text_.size() || text_[pos_] == '\n') throw parse_error("expected " + std::string(what), l, col_);
    return next(what);
  }

  void expect(std::string_view word) {
    const auto t = next(word);
    if (t.text != word)
      throw parse_error("expected '" + std::string(word) + "', found '" + std::string(t.text) + "'", t.line, t.column);
  }

  template <class Int>
  Int integer(std::string_view what) {
    const auto t = next(what);
    return to_int<Int>(t, what);
  }

  template <class Int>
  static Int to_int(const Token& t, std::string_view what) {
    Int v{};
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size())
      throw parse_error("expected " + std::string(what) + ", found '" + std::string(t.text) + "'", t.line, t.column);
    return v;
  }

  double real(std::string_view what) {
    const auto t = next(what);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size())
      throw parse_error("expected " + std::string(what) + ", found '" + std::string(t.text) + "'", t.line, t.column);
    return v;
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }
  void skip_inline() {
    while (pos_ < text_.size() && text_[pos_] != '\n' && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

inline std::string shortest(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline int read_bits_header(Scanner& s, std::string_view magic) {
  s.expect(magic);
  s.expect("1");
  const auto t = s.next("n");
  const int n = Scanner::to_int<int>(t, "n");
  if (n < 0 || n > max_table_bits) throw parse_error("n out of range", t.line, t.column);
  return n;
}

inline BooleanFunction read_bfn_body(Scanner& s, int n) {
  const auto t = s.next("truth table");
  const std::size_t want = std::size_t{1} << n;
  if (t.text.size() != want)
    throw parse_error("truth table has " + std::to_string(t.text.size()) + " characters, expected " + std::to_string(want),
                      t.line, t.column);
  std::vector<std::uint8_t> v(want);
  for (std::size_t i = 0; i < want; ++i) {
    if (t.text[i] != '0' && t.text[i] != '1') throw parse_error("truth table characters must be 0 or 1", t.line, t.column + i);
    v[i] = t.text[i] == '1';
  }
  return {Domain(n), std::move(v)};
}

inline std::vector<double> read_values(Scanner& s, int n) {
  std::vector<double> v(std::size_t{1} << n);
  for (auto& x : v) x = s.real("value");
  return v;
}

inline void expect_end(Scanner& s) {
  if (!s.at_end()) {
    const auto t = s.next("end of file");
    throw parse_error("unexpected trailing token '" + std::string(t.text) + "'", t.line, t.column);
  }
}

/// Wraps library validation failures with the position where the object ended.
template <class F>
auto validated(Scanner& s, F&& build) {
  const auto l = s.line();
  try {
    return build();
  } catch (const std::invalid_argument& e) {
    throw parse_error(e.what(), l, 1);
  }
}

}  // namespace detail

inline std::string save_bfn(const BooleanFunction& f) {
  return "BFN 1\n" + std::to_string(f.domain().bits()) + "\n" + f.to_string() + "\n";
}
inline BooleanFunction load_bfn(std::string_view text) {
  detail::Scanner s(text);
  const int n = detail::read_bits_header(s, "BFN");
  auto f = detail::read_bfn_body(s, n);
  detail::expect_end(s);
  return f;
}

inline std::string save_rfn(const RealTable& t) {
  std::string out = "RFN 1\n" + std::to_string(t.domain().bits()) + "\n";
  for (double v : t.values()) out += detail::shortest(v) + "\n";
  return out;
}
inline RealTable load_rfn(std::string_view text) {
  detail::Scanner s(text);
  const int n = detail::read_bits_header(s, "RFN");
  auto v = detail::read_values(s, n);
  detail::expect_end(s);
  return detail::validated(s, [&] { return RealTable(Domain(n), std::move(v)); });
}

inline std::string save_dst(const Distribution& d) {
  std::string out = "DST 1\n" + std::to_string(d.domain().bits()) + "\n";
  for (double v : d.weights()) out += detail::shortest(v) + "\n";
  return out;
}
inline Distribution load_dst(std::string_view text) {
  detail::Scanner s(text);
  const int n = detail::read_bits_header(s, "DST");
  auto v = detail::read_values(s, n);
  detail::expect_end(s);
  return detail::validated(s, [&] { return Distribution(Domain(n), std::move(v)); });
}

/// `CIR 1 <inputs>`, then `idx OP a b` per gate, then `OUT w…`.
inline std::string save_cir(const Circuit& c) {
  std::string out = "CIR 1 " + std::to_string(c.n_inputs()) + "\n";
  for (std::size_t g = 0; g < c.gates().size(); ++g) {
    const auto& gt = c.gates()[g];
    out += std::to_string(c.n_inputs() + g) + " " + std::string(gate_op_name(gt.op));
    const int ar = gate_arity(gt.op);
    if (ar >= 1) out += " " + std::to_string(gt.a);
    if (ar >= 2) out += " " + std::to_string(gt.b);
    out += "\n";
  }
  out += "OUT";
  for (auto w : c.outputs()) out += " " + std::to_string(w);
  return out + "\n";
}
inline Circuit load_cir(std::string_view text) {
  detail::Scanner s(text);
  s.expect("CIR");
  s.expect("1");
  const auto inputs = s.integer<std::uint32_t>("input count");
  std::vector<Gate> gates;
  std::vector<std::uint32_t> outs;
  for (;;) {
    const auto t = s.next("gate or OUT");
    if (t.text == "OUT") {
      while (!s.at_end()) outs.push_back(s.integer<std::uint32_t>("output wire"));
      break;
    }
    const auto idx = detail::Scanner::to_int<std::uint64_t>(t, "gate index");
    if (idx != inputs + gates.size())
      throw parse_error("gate index " + std::to_string(idx) + " out of order, expected " +
                            std::to_string(inputs + gates.size()),
                        t.line, t.column);
    const auto opt = s.same_line("gate op");
    GateOp op;
    try {
      op = parse_gate_op(opt.text);
    } catch (const std::invalid_argument& e) {
      throw parse_error(e.what(), opt.line, opt.column);
    }
    Gate g{op, 0, 0};
    const int ar = gate_arity(op);
    for (int k = 0; k < ar; ++k) {
      const auto w = s.same_line("operand");
      const auto v = detail::Scanner::to_int<std::uint32_t>(w, "operand");
      if (v >= idx) throw parse_error("operand " + std::to_string(v) + " is not an earlier wire", w.line, w.column);
      (k == 0 ? g.a : g.b) = v;
    }
    gates.push_back(g);
  }
  return detail::validated(s, [&] { return Circuit(inputs, std::move(gates), std::move(outs)); });
}

/// n, k, then 2^n part indices.
inline std::string save_prt(const Partition& p) {
  std::string out = "PRT 1\n" + std::to_string(p.domain().bits()) + "\n" + std::to_string(p.size()) + "\n";
  for (std::size_t x = 0; x < p.map().size(); ++x) out += (x ? " " : "") + std::to_string(p.map()[x]);
  return out + "\n";
}
inline Partition load_prt(std::string_view text) {
  detail::Scanner s(text);
  const int n = detail::read_bits_header(s, "PRT");
  const auto kt = s.next("part count");
  const auto k = detail::Scanner::to_int<std::uint32_t>(kt, "part count");
  if (k == 0) throw parse_error("part count must be positive", kt.line, kt.column);
  std::vector<std::uint32_t> map(std::size_t{1} << n);
  std::vector<char> used(k, 0);
  for (auto& v : map) {
    const auto t = s.next("part index");
    v = detail::Scanner::to_int<std::uint32_t>(t, "part index");
    if (v >= k) throw parse_error("part index " + std::to_string(v) + " is not below k=" + std::to_string(k), t.line, t.column);
    used[v] = 1;
  }
  detail::expect_end(s);
  for (std::uint32_t j = 0; j < k; ++j)
    if (!used[j]) throw parse_error("part " + std::to_string(j) + " is empty; the map does not cover k parts", s.line(), 1);
  return detail::validated(s, [&] { return Partition(Domain(n), std::move(map)); });
}

/// m, then `PLUS c` and `MINUS c` each followed by c BFN blocks.
inline std::string save_cct(const ConsistencyCounter& c) {
  std::string out = "CCT 1\n" + std::to_string(c.arity) + "\n" + std::to_string(c.n) + "\n";
  out += "PLUS " + std::to_string(c.plus.size()) + "\n";
  for (const auto& f : c.plus) out += save_bfn(f);
  out += "MINUS " + std::to_string(c.minus.size()) + "\n";
  for (const auto& f : c.minus) out += save_bfn(f);
  return out;
}
inline ConsistencyCounter load_cct(std::string_view text) {
  detail::Scanner s(text);
  s.expect("CCT");
  s.expect("1");
  ConsistencyCounter c;
  const auto mt = s.next("m");
  c.arity = detail::Scanner::to_int<int>(mt, "m");
  if (c.arity < 1) throw parse_error("m must be positive", mt.line, mt.column);
  const auto nt = s.next("n");
  c.n = detail::Scanner::to_int<int>(nt, "n");
  if (c.n < 1 || c.n > max_table_bits) throw parse_error("n out of range", nt.line, nt.column);
  for (auto [word, list] : {std::pair{"PLUS", &c.plus}, std::pair{"MINUS", &c.minus}}) {
    s.expect(word);
    const auto count = s.integer<std::size_t>("block count");
    for (std::size_t i = 0; i < count; ++i) {
      const auto pos = s.line();
      const int n = detail::read_bits_header(s, "BFN");
      if (n != c.n) throw parse_error("BFN block width differs from the counter's n", pos, 1);
      list->push_back(detail::read_bfn_body(s, n));
    }
  }
  detail::expect_end(s);
  return c;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw io_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, std::string_view text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw io_error("cannot write " + p.string());
  out << text;
  if (!out) throw io_error("write failed for " + p.string());
}

/// template_<i>.rfn per template plus manifest.json.
inline void save_template_set(const TemplateSet& ts, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json files = json::array();
  for (std::size_t i = 0; i < ts.templates.size(); ++i) {
    const std::string name = "template_" + std::to_string(i) + ".rfn";
    write_text(dir / name, save_rfn(ts.templates[i]));
    files.push_back(name);
  }
  json manifest = {{"delta", ts.delta},       {"m", ts.m},           {"family", ts.family.descriptor()},
                   {"templates", files},      {"source", ts.source}, {"terms", ts.terms},
                   {"assignment", ts.assignment}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

/// Templates and δ from a directory; the family must be supplied again.
inline TemplateSet load_template_set(const std::filesystem::path& dir, DistinguisherFamily family,
                                     Distribution d) {
  json manifest;
  try {
    manifest = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::parse_error& e) {
    throw parse_error(e.what(), 1, e.byte);
  }
  TemplateSet ts{{}, {}, {}, std::move(family), manifest.at("delta").get<double>(), manifest.at("m").get<int>(),
                 std::move(d)};
  for (const auto& f : manifest.at("templates")) ts.templates.push_back(load_rfn(read_text(dir / f.get<std::string>())));
  ts.source = manifest.at("source").get<std::vector<std::size_t>>();
  ts.terms = manifest.at("terms").get<std::vector<std::size_t>>();
  ts.assignment = manifest.at("assignment").get<std::vector<std::size_t>>();
  return ts;
}

}  // namespace simtest
