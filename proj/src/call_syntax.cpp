#include "lorentzflow/call_syntax.hpp"

#include <cctype>
#include <cstdlib>
#include <stdexcept>

namespace lorentzflow {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

CallSyntax parse_call(const std::string& text) {
  CallSyntax out;
  const std::string t = trim(text);
  const auto open = t.find('(');
  if (open == std::string::npos) {
    out.name = t;
    return out;
  }
  if (t.back() != ')') throw std::invalid_argument("unbalanced parentheses in '" + t + "'");
  out.name = trim(t.substr(0, open));
  const std::string inner = t.substr(open + 1, t.size() - open - 2);
  if (trim(inner).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = inner.find(',', start);
    out.args.push_back(trim(inner.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double CallSyntax::number(std::size_t i) const {
  if (i >= args.size())
    throw std::invalid_argument(name + ": missing argument " + std::to_string(i + 1));
  const std::string& a = args[i];
  char* end = nullptr;
  const double v = std::strtod(a.c_str(), &end);
  if (a.empty() || end != a.c_str() + a.size())
    throw std::invalid_argument(name + ": argument '" + a + "' is not a number");
  return v;
}

double CallSyntax::number_or(std::size_t i, double fallback) const {
  return i < args.size() ? number(i) : fallback;
}

}  // namespace lorentzflow
