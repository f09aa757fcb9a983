#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "lexprop/error.hpp"

namespace lexprop {

// Writes to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace lexprop
