#pragma once

// On-disk cache of level quotients. One file per (definition hash, level):
//
//   <dir>/<hash>-L<level>.bsgs
//
//   wreath-cache v1
//   hash <content hash>
//   level <n>
//   checksum <sha256 of the body>
//   <body: serialize(PermGroup)>
//
// Unreadable or mismatching entries are reported through the warning sink and
// treated as misses.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "wreath/dsl.hpp"
#include "wreath/filtration.hpp"
#include "wreath/perm_group.hpp"

namespace wreath {

class QuotientCache : public QuotientStore {
 public:
  using WarningSink = std::function<void(const std::string&)>;

  explicit QuotientCache(std::filesystem::path dir, WarningSink warn = {})
      : dir_(std::move(dir)), warn_(std::move(warn)) {
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path path_for(const std::string& hash, std::size_t level) const {
    return dir_ / (hash + "-L" + std::to_string(level) + ".bsgs");
  }

  std::optional<PermGroup> load(const std::string& hash, std::size_t level) override {
    const auto path = path_for(hash, level);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      ++misses_;
      return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      PermGroup g = decode(buf.str(), hash, level);
      ++hits_;
      return g;
    } catch (const std::exception& e) {
      warn("ignoring corrupt cache entry " + path.string() + ": " + e.what());
      ++misses_;
      return std::nullopt;
    }
  }

  void store(const std::string& hash, std::size_t level, const PermGroup& g) override {
    const std::string body = serialize(g);
    std::ostringstream out;
    out << "wreath-cache v1\nhash " << hash << "\nlevel " << level << "\nchecksum " << sha256_hex(body)
        << "\n"
        << body;
    const auto path = path_for(hash, level);
    std::lock_guard<std::mutex> lock(write_mutex_);
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) {
        warn("cannot write cache entry " + path.string());
        return;
      }
      f << out.str();
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
      warn("cannot write cache entry " + path.string() + ": " + ec.message());
      std::filesystem::remove(tmp, ec);
      return;
    }
    ++stores_;
  }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  std::size_t stores() const { return stores_; }

  static PermGroup decode(const std::string& text, const std::string& hash, std::size_t level) {
    std::istringstream in(text);
    std::string line;
    auto expect = [&](const std::string& want) {
      if (!std::getline(in, line) || line != want) {
        throw Error("expected '" + want + "'");
      }
    };
    expect("wreath-cache v1");
    expect("hash " + hash);
    expect("level " + std::to_string(level));
    if (!std::getline(in, line) || line.rfind("checksum ", 0) != 0) {
      throw Error("missing checksum");
    }
    const std::string checksum = line.substr(9);
    const auto pos = in.tellg();
    if (pos < 0) {
      throw Error("missing body");
    }
    const std::string body = text.substr(static_cast<std::size_t>(pos));
    if (sha256_hex(body) != checksum) {
      throw Error("checksum mismatch");
    }
    return deserialize_group(body);
  }

 private:
  void warn(const std::string& msg) const {
    if (warn_) {
      warn_(msg);
    }
  }

  std::filesystem::path dir_;
  WarningSink warn_;
  std::mutex write_mutex_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> stores_{0};
};

}  // namespace wreath
