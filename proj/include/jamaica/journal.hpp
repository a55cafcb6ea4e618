#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string_view>

#include <nlohmann/json.hpp>

namespace jamaica {

/// Append-only JSON-lines journal, one `{"op": ..., "data": {...}}` record
/// per mutation. Replayed at startup to rebuild in-memory state. Appends are
/// flushed line-by-line so a hard-killed process loses nothing that was
/// acknowledged.
class Journal {
 public:
  Journal() = default;  // disabled; all appends are no-ops (in-memory mode)
  explicit Journal(const std::filesystem::path& data_dir);

  bool enabled() const { return enabled_; }
  const std::filesystem::path& path() const { return path_; }

  // Reads every record in write order. Throws Errc::journal_corrupt with the
  // offending 1-based line number on parse failure. Must be called before the
  // first append.
  void replay(const std::function<void(const std::string& op, const nlohmann::json& data)>& apply);

  // Throws Errc::journal_error if the write cannot be completed; the journal
  // is then marked unhealthy.
  void append(std::string_view op, nlohmann::json data);

  // Stops accepting appends: later appends raise journal_error and the
  // journal reports unwritable. Lets an operator hand the file over safely.
  void close();

  // Health probe: disabled journals are always healthy.
  bool writable() const;

 private:
  bool enabled_ = false;
  std::filesystem::path path_;
  std::ofstream out_;
  mutable std::mutex mu_;
  bool failed_ = false;
  bool closed_ = false;
};

}  // namespace jamaica
