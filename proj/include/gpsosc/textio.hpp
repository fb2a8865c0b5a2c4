// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <string_view>

namespace gpsosc {

/// Reads text lines from a plain or gzip-compressed file. Compression is
/// detected from the stream itself, so a `.gz` extension is not required.
class LineReader {
 public:
  explicit LineReader(const std::string& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;
  LineReader(LineReader&&) noexcept;
  LineReader& operator=(LineReader&&) noexcept;

  /// Next line without its terminator ("\n" or "\r\n"). False at EOF.
  bool next(std::string& line);
  const std::string& path() const noexcept { return path_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string path_;
};

/// Writes text to a file; gzip-compressed when the path ends in ".gz".
class LineWriter {
 public:
  explicit LineWriter(const std::string& path);
  ~LineWriter();
  LineWriter(const LineWriter&) = delete;
  LineWriter& operator=(const LineWriter&) = delete;

  void write_line(std::string_view line);
  void write(std::string_view text);
  /// Flushes and closes; throws IoError if the data could not be written.
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string path_;
};

bool has_gzip_extension(std::string_view path);

}  // namespace gpsosc
