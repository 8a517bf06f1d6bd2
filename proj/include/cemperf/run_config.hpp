#pragma once

#include "cemperf/cem_basis.hpp"
#include "cemperf/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cemperf {

inline constexpr const char* kCodeVersion = "0.1.0";

/// Axis-aligned rectangle on which the source takes a constant value.
struct SourceRect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;
    double value = 0.0;

    bool contains(double x, double y) const {
        return x >= x0 && x <= x1 && y >= y0 && y <= y1;
    }
};

/// The four-square benchmark source: value 1 on [0.1,0.3]² and its three
/// mirror images, 0 elsewhere.
std::vector<SourceRect> case1_source();

/// Per-triangle source samples: the value of the first rectangle containing
/// the centroid, 0 outside all rectangles.
std::vector<double> source_field(const TriMesh& mesh,
                                 const std::vector<SourceRect>& rects);

/// Oversampling-layer rule. `Uniform` is a fixed m, `Log` follows the theory
/// (m = ceil(log2(1/H))), `List` is either paired with the H schedule or a
/// per-block assignment, depending on the command.
struct LayersRule {
    enum class Kind { Uniform, Log, List };
    Kind kind = Kind::Log;
    int uniform = 0;
    std::vector<int> list;

    int for_bps(int bps) const;
    std::vector<int> for_schedule(const std::vector<int>& bps_list) const;

    static LayersRule uniform_rule(int m);
    static LayersRule log_rule();
    static LayersRule list_rule(std::vector<int> values);
};

/// Parameters for run-time perforation generation (deterministic in the
/// seed, so a manifest replay reproduces the domain exactly).
struct GenerateParams {
    int count = 0;
    double r_min = 0.01;
    double r_max = 0.04;
    double min_gap = 0.005;
    std::uint64_t seed = 0;
};

/// Full description of a run. A domain comes from exactly one of: an inline
/// spec, a generation request, a spec JSON path, or a pre-built MSH path
/// (none of them means the unperforated square).
struct RunConfig {
    std::optional<DomainSpec> domain;
    std::optional<GenerateParams> generate;
    std::string domain_path;
    std::string mesh_path;

    int fine_n = 128;
    std::vector<SourceRect> source;   // empty means f ≡ 0
    std::vector<int> bps_list = {8};  // coarse sizes, H = 1/bps
    LayersRule layers;
    int eigs = 3;
    std::vector<Variant> variants = {Variant::Constraint};
    std::string out = "out";
    int threads = 1;
    double fine_tol = 1e-10;

    void validate() const;
    std::string to_json() const;
    static RunConfig from_json_text(const std::string& text);
};

std::vector<Variant> parse_variants(const std::string& word);
std::string variants_to_string(const std::vector<Variant>& variants);

/// manifest.json payload: tool id + code version + the resolved config and,
/// once the run finished, the measured per-row timings. Feeding a manifest
/// back through --config replays the run with the recorded timings so the
/// CSV outputs come out byte-identical.
struct Manifest {
    std::string command;
    RunConfig config;
    std::vector<double> wall_ms;

    std::string to_json() const;
    static Manifest from_json_text(const std::string& text);
};

struct LoadedConfig {
    RunConfig config;
    std::vector<double> wall_ms; // recorded timings when loaded from a manifest
    bool from_manifest = false;
};

/// Reads either a bare config or a manifest from an earlier run.
LoadedConfig load_config_file(const std::string& path);

/// Whole-file text IO; throws ParseError naming the path on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Materializes the mesh described by the config (triangulation of the
/// inline/generated/loaded spec, or MSH import). The spec actually used is
/// written to `spec_out` when given (empty for MSH imports).
TriMesh realize_mesh(const RunConfig& cfg, DomainSpec* spec_out = nullptr);

} // namespace cemperf
