#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddm.hpp"

namespace ddm::cli {

enum Exit { ok = 0, check_failed = 1, usage = 2, resource = 3 };

// Flat `key = value` text, one per line, '#' starts a comment.
struct Config {
  std::map<std::string, std::string> kv;

  std::string get(const std::string &k) const;
  double num(const std::string &k) const;
  std::int64_t integer(const std::string &k) const;
  std::uint64_t u64(const std::string &k) const;
  std::vector<double> list(const std::string &k) const;
};

Config parse_config(std::istream &in);
Config load_config(const std::string &path);
// Fills defaults and rejects unknown keys.
Config complete(Config c);
std::string config_hash(const Config &c);

struct Experiment {
  Model model;
  DiscreteDistribution mu_star;
  TimeGrid grid;
  ScoreMode score;
  ClockMode clock = ClockMode::AlgorithmLiteral;
  std::uint64_t seed = 0;
  std::uint64_t num_samples = 0;
};

Experiment build(const Config &c);

struct Report {
  std::string csv;
  bool pass = true;
  std::string summary;
};

Report run(const std::string &subcommand, const Config &c, int threads = 1);

std::string fmt(double v);

int main(int argc, char **argv);

} // namespace ddm::cli
