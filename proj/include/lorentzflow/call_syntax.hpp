#pragma once

#include <string>
#include <vector>

namespace lorentzflow {

/// `name(a, b, ...)` or bare `name`. Arguments are kept as trimmed strings.
struct CallSyntax {
  std::string name;
  std::vector<std::string> args;

  double number(std::size_t i) const;
  double number_or(std::size_t i, double fallback) const;
};

CallSyntax parse_call(const std::string& text);

std::string trim(const std::string& s);

}  // namespace lorentzflow
