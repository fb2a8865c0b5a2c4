// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpsosc/textio.hpp"

#include <zlib.h>

#include <cctype>
#include <cstring>
#include <vector>

#include "gpsosc/error.hpp"

namespace gpsosc {

bool has_gzip_extension(std::string_view path) {
  if (path.size() < 3) return false;
  const auto ext = path.substr(path.size() - 3);
  return ext[0] == '.' && std::tolower(static_cast<unsigned char>(ext[1])) == 'g' &&
         std::tolower(static_cast<unsigned char>(ext[2])) == 'z';
}

struct LineReader::Impl {
  gzFile file = nullptr;
  std::vector<char> buf = std::vector<char>(1 << 16);
};

LineReader::LineReader(const std::string& path) : impl_(std::make_unique<Impl>()), path_(path) {
  impl_->file = gzopen(path.c_str(), "rb");
  if (impl_->file == nullptr) throw IoError("cannot open '" + path + "' for reading");
  gzbuffer(impl_->file, 1 << 17);
}

LineReader::~LineReader() {
  if (impl_ && impl_->file != nullptr) gzclose(impl_->file);
}

LineReader::LineReader(LineReader&&) noexcept = default;
LineReader& LineReader::operator=(LineReader&&) noexcept = default;

bool LineReader::next(std::string& line) {
  line.clear();
  bool got_any = false;
  while (true) {
    char* r = gzgets(impl_->file, impl_->buf.data(), static_cast<int>(impl_->buf.size()));
    if (r == nullptr) {
      int err = Z_OK;
      const char* msg = gzerror(impl_->file, &err);
      if (err != Z_OK && err != Z_STREAM_END) throw IoError("read error in '" + path_ + "': " + msg);
      break;
    }
    got_any = true;
    const std::size_t n = std::strlen(r);
    line.append(r, n);
    if (n > 0 && r[n - 1] == '\n') break;
  }
  if (!got_any) return false;
  if (!line.empty() && line.back() == '\n') line.pop_back();
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

struct LineWriter::Impl {
  std::FILE* plain = nullptr;
  gzFile gz = nullptr;
};

LineWriter::LineWriter(const std::string& path) : impl_(std::make_unique<Impl>()), path_(path) {
  if (has_gzip_extension(path)) {
    impl_->gz = gzopen(path.c_str(), "wb6");
    if (impl_->gz == nullptr) throw IoError("cannot open '" + path + "' for writing");
  } else {
    impl_->plain = std::fopen(path.c_str(), "wb");
    if (impl_->plain == nullptr) throw IoError("cannot open '" + path + "' for writing");
  }
}

LineWriter::~LineWriter() {
  try {
    close();
  } catch (...) {
  }
}

void LineWriter::write(std::string_view text) {
  if (text.empty()) return;
  if (impl_->gz != nullptr) {
    if (gzwrite(impl_->gz, text.data(), static_cast<unsigned>(text.size())) == 0) {
      throw IoError("write error on '" + path_ + "'");
    }
  } else if (impl_->plain != nullptr) {
    if (std::fwrite(text.data(), 1, text.size(), impl_->plain) != text.size()) {
      throw IoError("write error on '" + path_ + "'");
    }
  } else {
    throw IoError("write to closed file '" + path_ + "'");
  }
}

void LineWriter::write_line(std::string_view line) {
  write(line);
  write("\n");
}

void LineWriter::close() {
  if (impl_->gz != nullptr) {
    const int rc = gzclose(impl_->gz);
    impl_->gz = nullptr;
    if (rc != Z_OK) throw IoError("error closing '" + path_ + "'");
  }
  if (impl_->plain != nullptr) {
    const int rc = std::fclose(impl_->plain);
    impl_->plain = nullptr;
    if (rc != 0) throw IoError("error closing '" + path_ + "'");
  }
}

}  // namespace gpsosc
