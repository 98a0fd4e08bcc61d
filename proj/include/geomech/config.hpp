#pragma once

#include <geomech/aks.hpp>
#include <geomech/expr.hpp>
#include <geomech/symmetry.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace geomech::cli {

/// Symmetry block of a run configuration (trivial bundle Q = S x G).
struct SymmetryConfig {
    std::vector<int> group_coords;  // 1-based in the file, stored 0-based
    std::vector<std::vector<std::string>> generators;  // expression vectors; empty = translations
    std::vector<double> structure_constants;           // flattened m^3, defaults to zero
    std::vector<std::vector<std::string>> A;           // connection coefficients, m x (n-m)
    std::vector<double> mu;
};

/// Parsed and defaulted run configuration.
struct RunConfig {
    std::string mode = "simulate";
    std::string builtin;  // one of the shipped systems, or empty for expression-defined
    int dim = 0;
    std::string lagrangian;
    std::vector<std::string> force;
    std::map<std::string, double> params;
    std::optional<SymmetryConfig> symmetry;

    double t0 = 0.0, t1 = 10.0, dt = 1e-3;
    std::vector<double> q0, v0;

    std::string csv;  // trajectory output path, empty for none
    std::vector<std::string> diagnostics;
    std::map<std::string, double> tolerances;
};

/// Load a JSON run configuration; throws ConfigError on malformed or
/// inconsistent input (dimension mismatches, dt <= 0, t1 <= t0, ...).
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

/// Serialize the effective configuration (all defaults applied); feeding the
/// result back through parse_config reproduces the run bit-identically.
std::string effective_config(const RunConfig& cfg);

/// Everything the runner needs for one configured system.
struct BuiltSystem {
    mech::LagrangianSystem sys;
    std::optional<symmetry::GroupAction> action;
    std::optional<symmetry::PrincipalConnection> conn;
    Vec mu;
    Vec q0, v0;
    std::optional<aks::AKSParams> aks_params;
    bool is_aks = false;
};

/// Instantiate the configured system (builtin or expression-defined).
BuiltSystem build_system(const RunConfig& cfg);

/// Default tolerance for a named check, overridable from the config.
double tolerance(const RunConfig& cfg, const std::string& name, double fallback);

}  // namespace geomech::cli
