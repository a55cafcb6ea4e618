#include "jamaica/journal.hpp"

#include <unistd.h>

#include <string>

#include "jamaica/errors.hpp"

namespace jamaica {

Journal::Journal(const std::filesystem::path& data_dir) : enabled_(true) {
  std::error_code ec;
  std::filesystem::create_directories(data_dir, ec);
  if (ec) raise(Errc::journal_error, "cannot create data dir " + data_dir.string() + ": " + ec.message());
  path_ = data_dir / "journal.jsonl";
}

void Journal::replay(const std::function<void(const std::string&, const nlohmann::json&)>& apply) {
  if (!enabled_) return;
  {
    std::ifstream in(path_);
    if (in.is_open()) {
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        // A final line without its newline is a torn append from a crash;
        // drop it. Unparseable content anywhere else is real corruption.
        if (record.is_discarded() && in.eof()) break;
        if (record.is_discarded() || !record.is_object() || !record.contains("op") ||
            !record["op"].is_string() || !record.contains("data")) {
          raise(Errc::journal_corrupt,
                "journal line " + std::to_string(lineno) + " is not a valid record");
        }
        try {
          apply(record["op"].get<std::string>(), record["data"]);
        } catch (const std::exception& e) {
          raise(Errc::journal_corrupt,
                "journal line " + std::to_string(lineno) + ": " + e.what());
        }
      }
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_.is_open()) raise(Errc::journal_error, "cannot open journal for append: " + path_.string());
}

void Journal::append(std::string_view op, nlohmann::json data) {
  if (!enabled_) return;
  nlohmann::json record{{"op", std::string(op)}, {"data", std::move(data)}};
  std::lock_guard lock(mu_);
  if (!out_.is_open()) raise(Errc::journal_error, "journal not open; replay before appending");
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_.good()) {
    failed_ = true;
    raise(Errc::journal_error, "journal append failed: " + path_.string());
  }
}

void Journal::close() {
  if (!enabled_) return;
  std::lock_guard lock(mu_);
  if (out_.is_open()) out_.close();
  closed_ = true;
}

bool Journal::writable() const {
  if (!enabled_) return true;
  std::lock_guard lock(mu_);
  if (failed_ || closed_) return false;
  return ::access(path_.c_str(), W_OK) == 0;
}

}  // namespace jamaica
