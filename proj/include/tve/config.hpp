#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "tve/studies.hpp"

namespace tve {

// Minimal TOML subset: [table] headers, key = value with numbers, booleans,
// double-quoted strings and single-line arrays of numbers or strings.
struct TomlValue {
  std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>> v;
  int line = 0;
};
using TomlTable = std::map<std::string, TomlValue>;
using TomlDoc = std::map<std::string, TomlTable>;

TomlDoc parse_toml(const std::string& text, const std::string& source);

// A vector load: amplitude times a time profile (preset or CSV table).
struct VectorLoadSpec {
  Vec2 amplitude = Vec2::Zero();
  std::string profile = "zero";
  double duration = 1.0;
  std::string table;  // CSV path, overrides profile when set
};

struct RunConfig {
  std::string source = "<memory>";
  MaterialParams material;

  int nx = 16, ny = 16;
  double Lx = 1.0, Ly = 1.0;
  std::vector<std::string> dirichlet_edges{"left"};

  SchemeConfig scheme;

  VectorLoadSpec body_force;
  std::string body_force_shape = "uniform";  // uniform | moving
  double moving_width = 0.15;
  double moving_speed = 1.0;
  VectorLoadSpec traction;
  std::vector<std::string> traction_edges;  // empty: all Neumann edges
  double theta_flat = 0.0;
  std::string theta_flat_profile = "zero";
  double theta_flat_duration = 1.0;
  std::string theta_flat_table;
  std::vector<std::string> theta_flat_edges;  // empty: whole boundary

  std::string u0 = "zero";  // zero | stretch | bend | shear | snapshot path
  double u0_amplitude = 0.0;
  std::string mu0 = "zero";  // zero | constant | bump | snapshot path
  double mu0_amplitude = 0.0;

  std::vector<double> tau_ladder{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  std::vector<double> eps_ladder{0.2, 0.1, 0.05, 0.025};
  NormSpec norms;

  std::string output_dir = "out";
  int snapshot_every = 0;  // 0: no snapshots

  bool linear = false;  // [linear] enabled selects the linear solver by default

  // throws ConfigParseError with source:line context
  static RunConfig parse(const std::string& text, const std::string& source = "<memory>");
  static RunConfig load(const std::string& path);

  LoadingProgram loading_program() const;
  ProblemSetup build() const;
  std::string resolved_toml() const;
};

}  // namespace tve
