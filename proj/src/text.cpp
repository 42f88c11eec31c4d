#include "autolab/text.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "autolab/errors.hpp"

namespace autolab::text {

namespace {

std::vector<std::string> tokenize(const std::string& line, const std::string& origin,
                                  int lineno) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '#') break;
    if (c == '"') {
      std::size_t end = line.find('"', i + 1);
      if (end == std::string::npos)
        throw ParseError(origin + ":" + std::to_string(lineno) + ": unterminated quote");
      out.push_back(line.substr(i + 1, end - i - 1));
      i = end + 1;
      continue;
    }
    std::size_t end = i;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' &&
           line[end] != '\r' && line[end] != '#')
      ++end;
    out.push_back(line.substr(i, end - i));
    i = end;
  }
  return out;
}

}  // namespace

const std::string& Node::arg(std::size_t i) const {
  if (i >= args.size())
    throw ParseError("line " + std::to_string(line) + ": '" + key + "' needs at least " +
                     std::to_string(i + 1) + " argument(s)");
  return args[i];
}

double Node::num(std::size_t i) const {
  const std::string& s = arg(i);
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

long Node::integer(std::size_t i) const {
  const std::string& s = arg(i);
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": '" + s + "' is not an integer");
  }
}

const Node* Node::find(const std::string& k) const {
  for (const auto& c : children)
    if (c.key == k) return &c;
  return nullptr;
}

std::vector<const Node*> Node::find_all(const std::string& k) const {
  std::vector<const Node*> out;
  for (const auto& c : children)
    if (c.key == k) out.push_back(&c);
  return out;
}

std::vector<Node> parse_string(const std::string& src, const std::string& origin) {
  std::vector<Node> root;
  std::vector<Node*> stack;
  std::istringstream in(src);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tokens = tokenize(line, origin, lineno);
    if (tokens.empty()) continue;
    if (tokens.size() == 1 && tokens[0] == "}") {
      if (stack.empty())
        throw ParseError(origin + ":" + std::to_string(lineno) + ": unmatched '}'");
      stack.pop_back();
      continue;
    }
    Node node;
    node.line = lineno;
    bool opens = tokens.back() == "{";
    if (opens) tokens.pop_back();
    if (tokens.empty())
      throw ParseError(origin + ":" + std::to_string(lineno) + ": block needs a name");
    node.key = tokens[0];
    node.args.assign(tokens.begin() + 1, tokens.end());
    node.is_block = opens;
    auto& dest = stack.empty() ? root : stack.back()->children;
    dest.push_back(std::move(node));
    if (opens) stack.push_back(&dest.back());
  }
  if (!stack.empty())
    throw ParseError(origin + ": unclosed block '" + stack.back()->key + "' at line " +
                     std::to_string(stack.back()->line));
  return root;
}

std::vector<Node> parse_file(const std::filesystem::path& path) {
  return parse_string(read_text_file(path), path.string());
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string format_minutes(std::int64_t ticks) {
  std::int64_t whole = ticks / 10;
  std::int64_t frac = ticks % 10;
  if (frac < 0) {
    frac += 10;
    whole -= 1;
  }
  return std::to_string(whole) + "." + std::to_string(frac);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

}  // namespace autolab::text
