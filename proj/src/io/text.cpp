#include "mmk/io/text.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mmk::io {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> splitWs(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<double> parseNums(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : splitWs(s)) out.push_back(std::stod(tok));
  return out;
}

std::string fmtNum(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmtVec(const Eigen::VectorXd& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmtNum(v[i]);
  }
  return out;
}

const std::string& Section::get(const std::string& key) const {
  auto it = kv.find(key);
  if (it == kv.end())
    throw std::runtime_error("missing key '" + key + "' in section [" + name + "]");
  return it->second;
}

std::string Section::get(const std::string& key, const std::string& fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double Section::num(const std::string& key) const { return std::stod(get(key)); }

double Section::num(const std::string& key, double fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : std::stod(it->second);
}

Eigen::Vector3d Section::vec3(const std::string& key) const {
  const auto v = parseNums(get(key));
  if (v.size() != 3) throw std::runtime_error("key '" + key + "' is not a 3-vector");
  return {v[0], v[1], v[2]};
}

std::vector<double> Section::nums(const std::string& key) const { return parseNums(get(key)); }

const Section* Document::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

const Section& Document::require(const std::string& name) const {
  const Section* s = find(name);
  if (!s) throw std::runtime_error("missing section [" + name + "]");
  return *s;
}

std::vector<const Section*> Document::all(const std::string& name) const {
  std::vector<const Section*> out;
  for (const auto& s : sections)
    if (s.name == name || s.name.rfind(name + " ", 0) == 0) out.push_back(&s);
  return out;
}

Document parseDocument(const std::string& text, const std::string& expected_magic) {
  Document doc;
  std::istringstream is(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      const auto toks = splitWs(line);
      if (toks.size() != 2) throw std::runtime_error("bad header line: " + line);
      doc.magic = toks[0];
      doc.version = std::stoi(toks[1]);
      if (!expected_magic.empty() && doc.magic != expected_magic)
        throw std::runtime_error("expected '" + expected_magic + "' document, got '" + doc.magic + "'");
      header_seen = true;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw std::runtime_error("bad section line: " + line);
      doc.sections.push_back(Section{trim(line.substr(1, line.size() - 2)), {}, {}});
      continue;
    }
    if (doc.sections.empty()) throw std::runtime_error("content before first section: " + line);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      doc.sections.back().rows.push_back(line);
    } else {
      doc.sections.back().kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  }
  if (!header_seen) throw std::runtime_error("empty document");
  return doc;
}

Document loadDocument(const std::string& path, const std::string& expected_magic) {
  return parseDocument(readFile(path), expected_magic);
}

void writeFile(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << content;
}

std::string readFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace mmk::io
