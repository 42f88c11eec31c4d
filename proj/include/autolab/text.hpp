#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace autolab::text {

/// One parsed line or block of the plain-text configuration format.
///
/// The format is line oriented: the first token of a line is the key, the
/// remaining tokens are arguments.  A line ending in '{' opens a named block
/// whose children are the lines up to the matching '}'.  '#' starts a comment.
/// Double quotes group tokens containing whitespace.
struct Node {
  std::string key;
  std::vector<std::string> args;
  std::vector<Node> children;
  bool is_block = false;
  int line = 0;

  const std::string& arg(std::size_t i) const;
  double num(std::size_t i) const;
  long integer(std::size_t i) const;
  const Node* find(const std::string& key) const;
  std::vector<const Node*> find_all(const std::string& key) const;
};

std::vector<Node> parse_string(const std::string& src, const std::string& origin);
std::vector<Node> parse_file(const std::filesystem::path& path);

/// Formats a double with up to six significant decimals, no trailing zeros.
std::string format_number(double v);

/// Formats a tick count (tenths of minutes) as minutes with one decimal.
std::string format_minutes(std::int64_t ticks);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace autolab::text
