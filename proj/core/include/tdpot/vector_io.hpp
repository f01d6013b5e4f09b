#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace tdpot {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat little-endian array files: raw element bytes, no header. The element
// count is implied by the file size.
template <class T>
void save_vector(const std::filesystem::path& file, const std::vector<T>& v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  if (!out) throw IoError("write failed: " + file.string());
}

template <class T>
std::vector<T> load_vector(const std::filesystem::path& file) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  in.seekg(0, std::ios::end);
  auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(T) != 0) throw IoError("size of " + file.string() + " is not a multiple of the element size");
  in.seekg(0);
  std::vector<T> v(bytes / sizeof(T));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw IoError("read failed: " + file.string());
  return v;
}

}  // namespace tdpot
