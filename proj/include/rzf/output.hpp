// Copyright 2026 The rzf-coop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RZF_OUTPUT_HPP
#define RZF_OUTPUT_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "rzf/common.hpp"

namespace rzf {

/// "%g" with `digits` significant digits and a '.' decimal separator.
inline std::string fmt(double x, int digits = 12) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  std::string s(buf);
  for (char& c : s) {
    if (c == ',') c = '.';  // guard against a non-C numeric locale
  }
  return s;
}

/// 17 significant digits; round-trips doubles such as alpha.
inline std::string fmt_exact(double x) { return fmt(x, 17); }

inline std::string fmt(std::int64_t x) { return std::to_string(x); }
inline std::string fmt(int x) { return std::to_string(x); }
inline std::string fmt(std::size_t x) { return std::to_string(x); }

/// Bit matrix as "b11/b12;b21/b22" (users separated by ';').
template <typename Matrix>
std::string fmt_bits(const Matrix& bits) {
  std::ostringstream os;
  for (Eigen::Index k = 0; k < bits.rows(); ++k) {
    if (k) os << ';';
    for (Eigen::Index i = 0; i < bits.cols(); ++i) {
      if (i) os << '/';
      os << bits(k, i);
    }
  }
  return os.str();
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != header.size()) throw Error("row width does not match the header");
    rows.push_back(std::move(row));
  }

  /// RFC 4180 CSV with a header row and '\n' line endings.
  std::string to_csv() const {
    std::ostringstream os;
    auto put = [&os](const std::vector<std::string>& r) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (c) os << ',';
        const std::string& v = r[c];
        if (v.find_first_of(",\"\n") != std::string::npos) {
          os << '"';
          for (char ch : v) {
            if (ch == '"') os << '"';
            os << ch;
          }
          os << '"';
        } else {
          os << v;
        }
      }
      os << '\n';
    };
    put(header);
    for (const auto& r : rows) put(r);
    return os.str();
  }
};

}  // namespace rzf

#endif  // RZF_OUTPUT_HPP
