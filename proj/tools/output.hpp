#pragma once

#include "scenario.hpp"

#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>

namespace asterhop::cli {

// CSV file with a fixed header. Doubles are written with 17 significant
// digits so every value round-trips.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string_view header) : path_(path) {
    f_ = std::fopen(path.string().c_str(), "wb");
    if (!f_) throw ConfigError("cannot write " + path.string());
    line_.assign(header);
    flush_line();
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }

  template <class... Ts>
  void row(const Ts&... values) {
    line_.clear();
    (append(values), ...);
    line_.pop_back();  // trailing comma
    flush_line();
  }

 private:
  void append(double v) { line_ += fmt::format("{:.17g},", v); }
  void append(int v) { line_ += fmt::format("{},", v); }
  void append(std::size_t v) { line_ += fmt::format("{},", v); }
  void append(bool v) { line_ += v ? "1," : "0,"; }
  void append(const Vec3& v) { line_ += fmt::format("{:.17g},{:.17g},{:.17g},", v.x(), v.y(), v.z()); }

  void flush_line() {
    line_ += '\n';
    if (std::fwrite(line_.data(), 1, line_.size(), f_) != line_.size()) {
      throw ConfigError("write failed: " + path_.string());
    }
  }

  std::filesystem::path path_;
  std::FILE* f_ = nullptr;
  std::string line_;
};

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

// NaN and infinity become null.
inline Json num_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline void write_json(const std::filesystem::path& path, const Json& doc) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw ConfigError("cannot write " + path.string());
  const std::string text = doc.dump(2) + "\n";
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  std::fclose(f);
  if (!ok) throw ConfigError("write failed: " + path.string());
}

}  // namespace asterhop::cli
