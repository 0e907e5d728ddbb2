#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace mmk::io {

// Sectioned key/value text document:
//   <magic> <version>
//   [section name]
//   key = value ...
//   bare data rows
// '#' starts a comment. Sections may repeat and keep file order.
struct Section {
  std::string name;
  std::map<std::string, std::string> kv;
  std::vector<std::string> rows;  // non key=value lines, in order

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key) const;
  double num(const std::string& key, double fallback) const;
  Eigen::Vector3d vec3(const std::string& key) const;
  std::vector<double> nums(const std::string& key) const;
};

struct Document {
  std::string magic;
  int version = 0;
  std::vector<Section> sections;

  const Section* find(const std::string& name) const;
  const Section& require(const std::string& name) const;
  std::vector<const Section*> all(const std::string& name) const;
};

Document parseDocument(const std::string& text, const std::string& expected_magic);
Document loadDocument(const std::string& path, const std::string& expected_magic);

std::string trim(const std::string& s);
std::vector<std::string> splitWs(const std::string& s);
std::vector<double> parseNums(const std::string& s);

// full-precision number formatting so round trips are bit-exact
std::string fmtNum(double v);
std::string fmtVec(const Eigen::VectorXd& v);

void writeFile(const std::string& path, const std::string& content);
std::string readFile(const std::string& path);

}  // namespace mmk::io
