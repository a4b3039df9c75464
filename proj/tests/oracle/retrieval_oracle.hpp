#pragma once

// Dense brute-force tf-idf cosine: builds the full vocabulary, materializes
// every vector, and scans all records.

#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace opinion::oracle {

inline std::vector<std::string> terms(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<double> cosine_all(const std::vector<std::string>& docs, const std::string& query) {
  std::map<std::string, int> df;
  std::vector<std::map<std::string, int>> tf(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& t : terms(docs[i])) tf[i][t]++;
    for (const auto& [t, _] : tf[i]) df[t]++;
  }
  std::map<std::string, int> qtf;
  for (const auto& t : terms(query)) qtf[t]++;
  for (const auto& [t, _] : qtf) df.try_emplace(t, 0);

  const double n = static_cast<double>(docs.size());
  std::vector<std::string> vocab;
  for (const auto& [t, _] : df) vocab.push_back(t);
  auto idf = [&](const std::string& t) { return std::log((1.0 + n) / (1.0 + df[t])) + 1.0; };

  auto dense = [&](const std::map<std::string, int>& counts) {
    std::vector<double> v;
    for (const auto& t : vocab) {
      auto it = counts.find(t);
      v.push_back(it == counts.end() ? 0.0 : it->second * idf(t));
    }
    return v;
  };
  auto q = dense(qtf);
  std::vector<double> out;
  for (const auto& d : tf) {
    auto v = dense(d);
    double dot = 0, a = 0, b = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      dot += v[k] * q[k];
      a += v[k] * v[k];
      b += q[k] * q[k];
    }
    out.push_back(a == 0 || b == 0 ? 0.0 : dot / (std::sqrt(a) * std::sqrt(b)));
  }
  return out;
}

inline std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace opinion::oracle
