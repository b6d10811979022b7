#pragma once

#include <string>
#include <vector>

namespace greater {

// Sorts and deduplicates labels. If every label is a decimal number the order
// is numeric (ties between spellings of one value broken lexicographically);
// otherwise it is plain byte-wise lexicographic.
std::vector<std::string> ordered_support(std::vector<std::string> labels);

}  // namespace greater
