#pragma once

// Parser for the canonical term rendering produced by render().

#include <akalab/term.hpp>

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>

namespace akalab {

namespace detail {

class TermParser {
 public:
  explicit TermParser(std::string_view src) : src_(src) {}

  Term parse_all() {
    Term t = parse_term();
    if (pos_ != src_.size()) fail("trailing input");
    return t;
  }

 private:
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == ':' ||
           c == '-';
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Errc::TermParse, why + " at offset " + std::to_string(pos_) + " in '" +
                                     std::string(src_) + "'");
  }

  bool peek(char c) const { return pos_ < src_.size() && src_[pos_] == c; }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string_view ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
    if (start == pos_) fail("expected identifier");
    return src_.substr(start, pos_ - start);
  }

  std::uint64_t number() {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
    if (ec != std::errc{}) fail("expected number");
    pos_ = static_cast<std::size_t>(p - src_.data());
    return v;
  }

  Term parse_term() {
    std::string_view name = ident();
    if (name == "xor" && peek('{')) {
      ++pos_;
      std::vector<Term> elems;
      elems.push_back(parse_term());
      while (peek(',')) {
        ++pos_;
        elems.push_back(parse_term());
      }
      expect('}');
      return Term::raw_xor(std::move(elems));
    }
    if (name == "sqn" && peek('(')) {
      ++pos_;
      std::string sub(ident());
      expect(',');
      expect('+');
      std::uint64_t off = number();
      expect(')');
      return Term::nat(BaseId{std::move(sub)}, off);
    }
    if (peek('(')) {
      auto sym = sym_from_name(name);
      if (!sym) fail("unknown function symbol '" + std::string(name) + "'");
      ++pos_;
      std::vector<Term> args;
      args.push_back(parse_term());
      while (peek(',')) {
        ++pos_;
        args.push_back(parse_term());
      }
      expect(')');
      if (args.size() != arity(*sym)) fail("arity mismatch for " + std::string(name));
      return Term::raw_apply(*sym, std::move(args));
    }
    if (peek('~')) {
      ++pos_;
      return Term::fresh(number(), std::string(name));
    }
    return Term::constant(std::string(name));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a rendered term and returns its normal form.
inline Term parse_term(std::string_view text) {
  return normalize(detail::TermParser(text).parse_all());
}

}  // namespace akalab
