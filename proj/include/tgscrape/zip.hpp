#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

// Minimal ZIP container support for OOXML packages.
namespace tgscrape::zip {

struct Entry {
  std::string name;
  std::string data;
};

// Deflate-compressed archive image.
std::string write_archive(const std::vector<Entry>& entries);

// Entry name -> contents. Supports stored and deflated members. Throws
// FormatError.
std::map<std::string, std::string> read_archive(std::string_view image);

}  // namespace tgscrape::zip
