#pragma once

// Reference computations written independently of the library: plain loops,
// long double accumulation, no shared helpers beyond the data types.

#include <cmath>
#include <cstdint>
#include <functional>
#include <regex>
#include <string>
#include <vector>

#include "moebius/types.hpp"

namespace oracle {

using moebius::Vector;

inline long double mean(const std::vector<double>& xs) {
  long double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<long double>(xs.size());
}

inline long double population_std(const std::vector<double>& xs) {
  const long double mu = mean(xs);
  long double s = 0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<long double>(xs.size()));
}

inline std::vector<double> advantages(const std::vector<double>& rewards, double eps) {
  const long double mu = mean(rewards);
  const long double sd = population_std(rewards);
  std::vector<double> out;
  for (double r : rewards) out.push_back(sd == 0 ? 0.0 : static_cast<double>((r - mu) / (sd + eps)));
  return out;
}

// log p_k for logits z, via a direct log-sum-exp.
inline std::vector<long double> log_probs(const std::vector<long double>& z) {
  long double peak = z[0];
  for (long double v : z) peak = std::max(peak, v);
  long double s = 0;
  for (long double v : z) s += std::exp(v - peak);
  std::vector<long double> out;
  for (long double v : z) out.push_back(v - peak - std::log(s));
  return out;
}

inline long double kl(const std::vector<long double>& zp, const std::vector<long double>& zq) {
  const auto lp = log_probs(zp), lq = log_probs(zq);
  long double s = 0;
  for (std::size_t k = 0; k < lp.size(); ++k) s += std::exp(lp[k]) * (lp[k] - lq[k]);
  return s;
}

inline long double entropy(const std::vector<long double>& z) {
  long double h = 0;
  for (long double l : log_probs(z)) h -= std::exp(l) * l;
  return h;
}

// Operands recovered from the rendered prompt "compute (a + b + ...) mod K".
struct ParsedTask {
  std::vector<int> operands;
  int answers = 0;
  int truth() const {
    int s = 0;
    for (int a : operands) s += a;
    return s % answers;
  }
};

inline ParsedTask parse_prompt(const std::string& prompt) {
  ParsedTask t;
  static const std::regex number(R"(\d+)");
  std::vector<int> all;
  for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), number); it != std::sregex_iterator(); ++it) {
    all.push_back(std::stoi(it->str()));
  }
  t.answers = all.back();
  all.pop_back();
  t.operands = all;
  return t;
}

// Skill-ladder player logits over answers 0..K-1.
inline std::vector<long double> player_logits(const ParsedTask& task, const Vector& theta, int levels,
                                              double temperature) {
  const int d = static_cast<int>(task.operands.size());
  std::vector<long double> z;
  for (int y = 0; y < task.answers; ++y) {
    long double s = 0;
    s += theta(0) * ((y == task.truth()) ? 1.0L / d : 0.0L);
    s += theta(1) * ((y % 2 == task.operands[0] % 2) ? 1.0L : 0.0L);
    s += theta(2);
    for (int l = 0; l < levels; ++l) s += theta(3 + l) * (l == d - 1 ? 1.0L : 0.0L);
    z.push_back(s / temperature);
  }
  return z;
}

// Central differences with step h on every coordinate.
inline Vector central_difference(const std::function<long double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector up = x, down = x;
    up(i) += h;
    down(i) -= h;
    g(i) = static_cast<double>((f(up) - f(down)) / (2.0L * h));
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, floor).
inline double relative_error(const Vector& a, const Vector& b, double floor = 1e-8) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

}  // namespace oracle
