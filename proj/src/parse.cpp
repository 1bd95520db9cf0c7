#include "fractal/parse.hpp"

#include <cctype>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "fractal/errors.hpp"
#include "fractal/string_expr.hpp"

namespace fractal {

namespace {

CoefficientFamily family_from_name(const std::string& name, std::size_t pos) {
  if (name == "exp") return CoefficientFamily::exp();
  if (name == "expm1") return CoefficientFamily::exp_minus_one();
  if (name == "cosh") return CoefficientFamily::cosh();
  if (name == "sinh") return CoefficientFamily::sinh();
  if (name == "geometric") return CoefficientFamily::geometric();
  if (name == "log") return CoefficientFamily::log();
  throw ValidationError("parse error at position " + std::to_string(pos) +
                        ": unknown coefficient family '" + name + "'");
}

struct Parser {
  const std::string& text;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError("parse error at position " + std::to_string(pos) +
                          ": " + msg);
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  std::string ident() {
    skip_ws();
    const std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_'))
      ++pos;
    if (pos == start) fail("expected a name");
    return text.substr(start, pos - start);
  }

  double number() {
    skip_ws();
    const char* begin = text.c_str() + pos;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    pos += static_cast<std::size_t>(end - begin);
    return v;
  }

  std::int64_t integer() {
    skip_ws();
    const char* begin = text.c_str() + pos;
    char* end = nullptr;
    const long long v = std::strtoll(begin, &end, 10);
    if (end == begin) fail("expected an integer");
    pos += static_cast<std::size_t>(end - begin);
    return v;
  }

  std::vector<double> number_list() {
    std::vector<double> out;
    out.push_back(number());
    while (eat(',')) out.push_back(number());
    return out;
  }

  StringExpr expr() {
    const std::string op = ident();
    if (op == "cantor") return make_cantor_string();
    if (op == "gencantor") {
      expect(':');
      const std::int64_t m = integer();
      expect(',');
      return make_gen_cantor(m, number());
    }
    if (op == "selfsim") {
      expect(':');
      return make_self_similar(number_list());
    }
    if (op == "inforder") {
      expect(':');
      const std::int64_t m = integer();
      expect(',');
      return make_infinite_order(m, number());
    }
    if (op == "explicit") {
      expect(':');
      return make_explicit(number_list());
    }
    if (op == "scale") {
      expect(':');
      const double gamma = number();
      expect('(');
      StringExpr inner = expr();
      expect(')');
      return scale(gamma, std::move(inner));
    }
    if (op == "power") {
      expect(':');
      const std::int64_t n = integer();
      expect('(');
      StringExpr base = expr();
      expect(')');
      return make_power(std::move(base), n);
    }
    if (op == "union") {
      expect('(');
      std::vector<StringExpr> parts;
      parts.push_back(expr());
      while (eat(';')) parts.push_back(expr());
      expect(')');
      return make_union(std::move(parts));
    }
    if (op == "lift") {
      expect(':');
      const std::size_t familyPos = pos;
      const std::string family = ident();
      expect('(');
      StringExpr inner = expr();
      expect(')');
      return lift(family_from_name(family, familyPos), std::move(inner));
    }
    fail("unknown expression op '" + op + "'");
  }

  GeometricSet set() {
    const std::string tag = ident();
    if (tag == "realization") {
      expect(':');
      return make_realization(expr());
    }
    if (tag == "gencantorset") {
      expect(':');
      const std::int64_t m = integer();
      expect(',');
      return make_gen_cantor_set(m, number());
    }
    if (tag == "grill") {
      expect(':');
      const std::int64_t q = integer();
      expect('(');
      GeometricSet base = set();
      expect(')');
      return make_grill(std::move(base), static_cast<int>(q));
    }
    if (tag == "flat") {
      expect(':');
      const std::int64_t q = integer();
      expect('(');
      GeometricSet base = set();
      expect(')');
      return make_embedded_flat(std::move(base), static_cast<int>(q));
    }
    if (tag == "unionset") {
      expect('(');
      std::vector<GeometricSet> parts;
      parts.push_back(set());
      while (eat(';')) parts.push_back(set());
      expect(')');
      return make_union_set(std::move(parts));
    }
    if (tag == "constructed") {
      expect(':');
      const double dInfinity = number();
      expect(',');
      const double d1 = number();
      expect(',');
      const double d = number();
      expect(',');
      const std::int64_t n = integer();
      return std::move(
          construct_set(dInfinity, d1, d, static_cast<int>(n)).set);
    }
    fail("unknown set tag '" + tag + "'");
  }

  void finish() {
    skip_ws();
    if (pos != text.size()) fail("unexpected trailing characters");
  }
};

}  // namespace

StringExpr parse_string_expr(const std::string& text) {
  Parser p{text};
  StringExpr e = p.expr();
  p.finish();
  return e;
}

GeometricSet parse_geometric_set(const std::string& text) {
  Parser p{text};
  GeometricSet s = p.set();
  p.finish();
  return s;
}

std::complex<double> parse_complex(const std::string& text) {
  // Accepted forms: "a", "bi", "a+bi", "a-bi", with "i"/"+i"/"-i" for b = 1.
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw ValidationError("parse_complex: empty input");

  auto parse_real = [](const std::string& t) {
    if (t.empty()) throw ValidationError("parse_complex: missing number");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
      throw ValidationError("parse_complex: malformed number '" + t + "'");
    return v;
  };

  if (s.back() != 'i') return {parse_real(s), 0.0};

  const std::string body = s.substr(0, s.size() - 1);
  // Split at the sign that separates the real part from the imaginary part:
  // the last '+'/'-' that is neither leading nor an exponent sign.
  std::size_t split = std::string::npos;
  for (std::size_t i = body.size(); i-- > 1;) {
    if ((body[i] == '+' || body[i] == '-') &&
        body[i - 1] != 'e' && body[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  auto imag_of = [&](const std::string& t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return parse_real(t);
  };
  if (split == std::string::npos) return {0.0, imag_of(body)};
  return {parse_real(body.substr(0, split)), imag_of(body.substr(split))};
}

}  // namespace fractal
