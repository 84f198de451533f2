#include "pedcross/jsonl.hpp"

#include <fstream>
#include <sstream>

namespace pedcross {

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::vector<json> records;
  for_each_jsonl(path, [&](std::size_t, const json& j) { records.push_back(j); });
  return records;
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw InputError(path.filename().string() + ": line " + std::to_string(line_no) +
                       ": malformed JSON record");
    fn(line_no, j);
  }
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw InputError("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records) {
  std::ostringstream os;
  for (const auto& r : records) os << r.dump() << "\n";
  atomic_write(path, os.str());
}

namespace {

std::uint64_t fnv1a(const char* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace

std::string checksum_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0)
    h = fnv1a(buffer, static_cast<std::size_t>(in.gcount()), h);
  return hex64(h);
}

std::string checksum_string(const std::string& data) {
  return hex64(fnv1a(data.data(), data.size()));
}

}  // namespace pedcross
