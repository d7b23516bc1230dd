#pragma once

#include <cstddef>
#include <string>

namespace drpipe {

/// Child process with piped stdin/stdout. Runs `command` through /bin/sh.
/// The child inherits stderr so runner diagnostics reach the terminal.
class Subprocess {
 public:
  explicit Subprocess(const std::string& command);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  void write_all(const void* data, std::size_t len);
  void write_line(const std::string& line);
  void read_all(void* data, std::size_t len);  // throws on EOF
  std::string read_line();                     // up to '\n', which is consumed

  /// Closes the child's stdin and waits; returns the exit status.
  int close();

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

}  // namespace drpipe
