#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmc/core_fields.hpp"
#include "pmc/estimate_engine.hpp"
#include "pmc/radial_oracle.hpp"

namespace pmc {

// "file:line: [section] key: message"
struct ConfigError : std::runtime_error {
  int line = 0;
  std::string field;
  ConfigError(const std::string& where, int ln, const std::string& fld, const std::string& msg);
};

// Flat INI-style text: [section] headers, key = value, '#' or ';' comments.
struct KeyValueFile {
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::string name;
  std::map<std::string, std::map<std::string, Entry>> sections;

  static KeyValueFile parse(const std::string& text, const std::string& name = "<config>");
  static KeyValueFile load(const std::string& path);
};

struct DensitySpec {
  std::string kind = "bump";  // zero | bump | constant | power | toy
  double amplitude = 5.0;
  double exponent = 0.0;
  double radius = 1.0;
  RadialDensity build(int N) const;
};

struct GridSpec {
  int nodes = 65;
  double half_width = 0.0;  // 0: four times the support radius
  std::string boundary = "zero";  // zero | oracle
  double tol = 1e-8;
  int max_iter = 5000;
};

struct RadialSpec {
  double r_min = 1e-6;
  double r_max = 1e4;
  int per_decade = 400;
};

struct SweepSpec {
  int gronwall_sets = 200;
  int sprofile_cases = 100;
  int jets_per_N = 100000;
  int geometry_jets = 1000;
  int theorem1_instances = 50;
  int haarala_instances = 30;
  int nu_instances = 20;
  int moser_cases = 50;
  int riesz_instances = 40;
};

struct PipelineSpec {
  int nodes = 97;
  double half_width = 1.0;
  double amplitude = 8.0;
  double radius = 0.6;
  std::vector<int> n_list{4, 8, 16, 32};
  double Rbar = 0.5;
  double window = 0.5;
};

struct RunConfig {
  std::string source = "<defaults>";
  ParamSet params = ParamSet::defaults(3);
  DerivedConstants constants = DerivedConstants::shipped(3);
  DensitySpec density;
  GridSpec grid;
  RadialSpec radial;
  SweepSpec sweep;
  PipelineSpec pipeline;
  std::uint64_t seed = 20240611ULL;
  int workers = 1;

  static RunConfig from(const KeyValueFile& kv);
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;
};

}  // namespace pmc
