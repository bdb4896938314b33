#pragma once

// Line-oriented run records: a header line with the config and its hash,
// then one JSON object per realization ending in "end": true.

#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef ANDERSON_VERSION
#define ANDERSON_VERSION "0.0.0"
#endif

namespace anderson::harness {

using nlohmann::json;

struct Record {
  std::size_t index = 0;
  json payload;
  double elapsed_ms = 0.0;
  std::string version = ANDERSON_VERSION;
};

struct RecordSet {
  json config;
  std::string hash;
  std::vector<Record> records;  // sorted by index

  void sort() {
    std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) { return a.index < b.index; });
  }
};

struct RecordError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string header_line(const json& config, const std::string& hash) {
  return json{{"type", "header"}, {"config", config}, {"config_hash", hash}}.dump();
}

inline std::string record_line(const Record& r) {
  return json{{"type", "record"},
              {"index", r.index},
              {"payload", r.payload},
              {"elapsed_ms", r.elapsed_ms},
              {"version", r.version},
              {"end", true}}
      .dump();
}

/// Reads a record file. A trailing line that does not parse or lacks the
/// end marker is a partial write; with `truncate` the file is cut back to
/// the last complete line, otherwise the partial tail is ignored.
inline RecordSet read_records(const std::string& path, bool truncate = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RecordError(path + ": cannot open record file");
  RecordSet set;
  std::string line;
  std::size_t good_bytes = 0;
  std::size_t offset = 0;
  bool header = false, partial = false;
  while (std::getline(in, line)) {
    const bool terminated = !in.eof();
    const std::size_t next = offset + line.size() + (terminated ? 1 : 0);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      partial = true;
      break;
    }
    if (!header) {
      if (j.value("type", "") != "header") throw RecordError(path + ": first line is not a header");
      set.config = j.at("config");
      set.hash = j.at("config_hash").get<std::string>();
      header = true;
    } else {
      if (j.value("type", "") != "record" || !j.value("end", false) || !terminated) {
        partial = true;
        break;
      }
      Record r;
      r.index = j.at("index").get<std::size_t>();
      r.payload = j.at("payload");
      r.elapsed_ms = j.value("elapsed_ms", 0.0);
      r.version = j.value("version", "");
      set.records.push_back(std::move(r));
    }
    good_bytes = next;
    offset = next;
  }
  if (!header) throw RecordError(path + ": missing header");
  in.close();
  if (partial && truncate) std::filesystem::resize_file(path, good_bytes);
  set.sort();
  return set;
}

/// Single writer; every record is flushed before the call returns.
class RecordWriter {
 public:
  /// Starts a new file, or appends to `path` when it already holds records
  /// of the same config hash.
  RecordWriter(const std::string& path, const json& config, const std::string& hash, bool append) {
    if (append) {
      out_.open(path, std::ios::app | std::ios::binary);
    } else {
      out_.open(path, std::ios::trunc | std::ios::binary);
      if (out_) out_ << header_line(config, hash) << '\n' << std::flush;
    }
    if (!out_) throw RecordError(path + ": cannot open for writing");
  }

  void write(const Record& r) {
    const std::string line = record_line(r);
    std::lock_guard lock(mutex_);
    out_ << line << '\n' << std::flush;
    if (!out_) throw RecordError("record write failed");
  }

 private:
  std::ofstream out_;
  std::mutex mutex_;
};

inline void write_records(const std::string& path, const RecordSet& set) {
  RecordWriter w(path, set.config, set.hash, false);
  for (const auto& r : set.records) w.write(r);
}

/// Disjoint union of record sets with one config hash.
inline RecordSet merge_records(const std::vector<RecordSet>& parts) {
  if (parts.empty()) throw RecordError("merge: no inputs");
  RecordSet out;
  out.config = parts.front().config;
  out.hash = parts.front().hash;
  std::set<std::size_t> seen;
  for (const auto& p : parts) {
    if (p.hash != out.hash) throw RecordError("merge: config hash mismatch (" + p.hash + " vs " + out.hash + ")");
    for (const auto& r : p.records) {
      if (!seen.insert(r.index).second) {
        throw RecordError("merge: realization index " + std::to_string(r.index) + " appears twice");
      }
      out.records.push_back(r);
    }
  }
  out.sort();
  return out;
}

}  // namespace anderson::harness
