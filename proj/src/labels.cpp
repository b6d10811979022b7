#include "greater/labels.hpp"

#include <algorithm>
#include <cstdlib>

#include "greater/table.hpp"

namespace greater {

std::vector<std::string> ordered_support(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  const bool numeric = !labels.empty() && std::all_of(labels.begin(), labels.end(), [](const std::string& s) {
    return is_decimal_number(s);
  });
  if (numeric) {
    std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return std::strtod(a.c_str(), nullptr) < std::strtod(b.c_str(), nullptr);
    });
  }
  return labels;
}

}  // namespace greater
