#include "cemperf/run_config.hpp"

#include "cemperf/errors.hpp"
#include "cemperf/msh_io.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cemperf {

namespace {

using njson = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& message) { throw ParseError("config: " + message); }

double as_number(const njson& j, const char* what) {
    if (!j.is_number())
        bad(std::string(what) + " must be a number");
    return j.get<double>();
}

int as_int(const njson& j, const char* what) {
    if (!j.is_number_integer())
        bad(std::string(what) + " must be an integer");
    return j.get<int>();
}

SourceRect rect_from_json(const njson& j) {
    if (!j.is_object())
        bad("source entries must be objects");
    SourceRect r;
    r.x0 = as_number(j.at("x0"), "source.x0");
    r.y0 = as_number(j.at("y0"), "source.y0");
    r.x1 = as_number(j.at("x1"), "source.x1");
    r.y1 = as_number(j.at("y1"), "source.y1");
    r.value = as_number(j.at("value"), "source.value");
    return r;
}

njson rect_to_json(const SourceRect& r) {
    njson j;
    j["x0"] = r.x0;
    j["y0"] = r.y0;
    j["x1"] = r.x1;
    j["y1"] = r.y1;
    j["value"] = r.value;
    return j;
}

/// Accepts H as a fraction of 1 (0.125) or directly as blocks-per-side (8).
int bps_from_entry(const njson& j) {
    const double v = as_number(j, "H");
    if (!(v > 0.0))
        bad("H entries must be positive");
    if (v > 1.0) {
        const int bps = int(std::lround(v));
        if (std::abs(v - bps) > 1e-9)
            bad("H entries above 1 must be whole block counts");
        return bps;
    }
    const double inv = 1.0 / v;
    const int bps = int(std::lround(inv));
    if (bps < 1 || std::abs(inv - bps) > 1e-9 * inv)
        bad("H must equal 1/k for a positive integer k");
    return bps;
}

njson layers_to_json(const LayersRule& rule) {
    switch (rule.kind) {
    case LayersRule::Kind::Uniform:
        return njson(rule.uniform);
    case LayersRule::Kind::Log:
        return njson("log");
    case LayersRule::Kind::List:
        return njson(rule.list);
    }
    return njson();
}

LayersRule layers_from_json(const njson& j) {
    if (j.is_string()) {
        if (j.get<std::string>() != "log")
            bad("layers string must be \"log\"");
        return LayersRule::log_rule();
    }
    if (j.is_number_integer())
        return LayersRule::uniform_rule(j.get<int>());
    if (j.is_array()) {
        std::vector<int> values;
        for (const auto& e : j)
            values.push_back(as_int(e, "layers entry"));
        return LayersRule::list_rule(std::move(values));
    }
    bad("layers must be an integer, \"log\", or a list of integers");
}

njson config_to_json_object(const RunConfig& cfg) {
    njson j;
    if (cfg.domain) {
        j["domain"] = njson::parse(cfg.domain->to_json());
    } else if (cfg.generate) {
        njson g;
        g["count"] = cfg.generate->count;
        g["radius"] = njson::array({cfg.generate->r_min, cfg.generate->r_max});
        g["min_gap"] = cfg.generate->min_gap;
        g["seed"] = cfg.generate->seed;
        j["domain"] = njson{{"generate", g}};
    } else if (!cfg.domain_path.empty()) {
        j["domain"] = cfg.domain_path;
    }
    if (!cfg.mesh_path.empty())
        j["mesh"] = cfg.mesh_path;
    j["fine_n"] = cfg.fine_n;
    njson src = njson::array();
    for (const auto& r : cfg.source)
        src.push_back(rect_to_json(r));
    j["source"] = src;
    njson hs = njson::array();
    for (int bps : cfg.bps_list)
        hs.push_back(1.0 / bps);
    j["H"] = hs;
    j["layers"] = layers_to_json(cfg.layers);
    j["eigs"] = cfg.eigs;
    j["variant"] = variants_to_string(cfg.variants);
    j["out"] = cfg.out;
    j["threads"] = cfg.threads;
    j["fine_tol"] = cfg.fine_tol;
    return j;
}

RunConfig config_from_json_object(const njson& j) {
    if (!j.is_object())
        bad("top level must be an object");
    RunConfig cfg;
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const njson& v = item.value();
        if (key == "domain") {
            if (v.is_string()) {
                cfg.domain_path = v.get<std::string>();
            } else if (v.is_object() && v.contains("generate")) {
                const njson& g = v.at("generate");
                GenerateParams p;
                p.count = as_int(g.at("count"), "generate.count");
                if (g.contains("radius")) {
                    const njson& rad = g.at("radius");
                    if (!rad.is_array() || rad.size() != 2)
                        bad("generate.radius must be [min, max]");
                    p.r_min = as_number(rad[0], "generate.radius[0]");
                    p.r_max = as_number(rad[1], "generate.radius[1]");
                }
                if (g.contains("min_gap"))
                    p.min_gap = as_number(g.at("min_gap"), "generate.min_gap");
                if (g.contains("seed"))
                    p.seed = g.at("seed").get<std::uint64_t>();
                cfg.generate = p;
            } else if (v.is_object()) {
                cfg.domain = DomainSpec::from_json(v.dump());
            } else {
                bad("domain must be an object or a path string");
            }
        } else if (key == "mesh") {
            if (!v.is_string())
                bad("mesh must be a path string");
            cfg.mesh_path = v.get<std::string>();
        } else if (key == "fine_n") {
            cfg.fine_n = as_int(v, "fine_n");
        } else if (key == "source") {
            cfg.source.clear();
            if (v.is_string()) {
                if (v.get<std::string>() != "case1")
                    bad("source string must be \"case1\"");
                cfg.source = case1_source();
            } else if (v.is_array()) {
                for (const auto& e : v)
                    cfg.source.push_back(rect_from_json(e));
            } else {
                bad("source must be \"case1\" or a list of rectangles");
            }
        } else if (key == "H") {
            cfg.bps_list.clear();
            if (v.is_array()) {
                for (const auto& e : v)
                    cfg.bps_list.push_back(bps_from_entry(e));
            } else {
                cfg.bps_list.push_back(bps_from_entry(v));
            }
            if (cfg.bps_list.empty())
                bad("H list must not be empty");
        } else if (key == "layers") {
            cfg.layers = layers_from_json(v);
        } else if (key == "eigs") {
            cfg.eigs = as_int(v, "eigs");
        } else if (key == "variant") {
            if (!v.is_string())
                bad("variant must be a string");
            cfg.variants = parse_variants(v.get<std::string>());
        } else if (key == "out") {
            if (!v.is_string())
                bad("out must be a path string");
            cfg.out = v.get<std::string>();
        } else if (key == "threads") {
            cfg.threads = as_int(v, "threads");
        } else if (key == "fine_tol") {
            cfg.fine_tol = as_number(v, "fine_tol");
        } else if (key == "seed") {
            // Convenience override mirrored from the --seed flag.
            if (cfg.generate)
                cfg.generate->seed = v.get<std::uint64_t>();
            else if (cfg.domain)
                cfg.domain->seed = v.get<std::uint64_t>();
        } else {
            bad("unknown key \"" + key + "\"");
        }
    }
    return cfg;
}

} // namespace

std::vector<SourceRect> case1_source() {
    return {
        {0.1, 0.1, 0.3, 0.3, 1.0},
        {0.7, 0.1, 0.9, 0.3, 1.0},
        {0.1, 0.7, 0.3, 0.9, 1.0},
        {0.7, 0.7, 0.9, 0.9, 1.0},
    };
}

std::vector<double> source_field(const TriMesh& mesh,
                                 const std::vector<SourceRect>& rects) {
    std::vector<double> f(mesh.triangles.size(), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 c = mesh.triangle_centroid(int(t));
        for (const auto& r : rects) {
            if (r.contains(c.x, c.y)) {
                f[t] = r.value;
                break;
            }
        }
    }
    return f;
}

int LayersRule::for_bps(int bps) const {
    switch (kind) {
    case Kind::Uniform:
        return uniform;
    case Kind::Log:
        return std::max(0, int(std::ceil(std::log2(double(bps)))));
    case Kind::List:
        if (list.size() == 1)
            return list.front();
        throw InvalidArgument("layer list cannot be reduced to a single m here");
    }
    return 0;
}

std::vector<int> LayersRule::for_schedule(const std::vector<int>& bps_list) const {
    std::vector<int> out;
    out.reserve(bps_list.size());
    if (kind == Kind::List) {
        if (list.size() != bps_list.size())
            throw InvalidArgument("layer list length must match the H list");
        return list;
    }
    for (int bps : bps_list)
        out.push_back(for_bps(bps));
    return out;
}

LayersRule LayersRule::uniform_rule(int m) {
    LayersRule r;
    r.kind = Kind::Uniform;
    r.uniform = m;
    return r;
}

LayersRule LayersRule::log_rule() {
    LayersRule r;
    r.kind = Kind::Log;
    return r;
}

LayersRule LayersRule::list_rule(std::vector<int> values) {
    LayersRule r;
    r.kind = Kind::List;
    r.list = std::move(values);
    return r;
}

void RunConfig::validate() const {
    int sources = 0;
    sources += domain.has_value();
    sources += generate.has_value();
    sources += !domain_path.empty();
    sources += !mesh_path.empty();
    if (sources > 1)
        throw InvalidArgument("config: give at most one of inline domain, "
                              "generate block, domain path, mesh path");
    if (fine_n < 2)
        throw InvalidArgument("config: fine_n must be at least 2");
    if (bps_list.empty())
        throw InvalidArgument("config: H list must not be empty");
    for (int bps : bps_list) {
        if (bps < 1)
            throw InvalidArgument("config: blocks per side must be positive");
        if (mesh_path.empty() && fine_n % bps != 0)
            throw InvalidArgument("config: fine_n must be divisible by every "
                                  "blocks-per-side in the H list");
    }
    if (eigs < 1)
        throw InvalidArgument("config: eigs must be at least 1");
    if (threads < 1)
        throw InvalidArgument("config: threads must be at least 1");
    if (!(fine_tol > 0.0))
        throw InvalidArgument("config: fine_tol must be positive");
    if (variants.empty())
        throw InvalidArgument("config: at least one variant is required");
    if (layers.kind == LayersRule::Kind::Uniform && layers.uniform < 0)
        throw InvalidArgument("config: layers must be non-negative");
    for (int m : layers.list)
        if (m < 0)
            throw InvalidArgument("config: layers must be non-negative");
    for (const auto& r : source) {
        if (!std::isfinite(r.value) || !std::isfinite(r.x0) || !std::isfinite(r.y0) ||
            !std::isfinite(r.x1) || !std::isfinite(r.y1))
            throw InvalidArgument("config: source rectangles must be finite");
        if (r.x1 < r.x0 || r.y1 < r.y0)
            throw InvalidArgument("config: source rectangle is inverted");
    }
    if (generate) {
        if (generate->count < 0)
            throw InvalidArgument("config: generate.count must be non-negative");
        if (!(generate->r_min > 0.0) || generate->r_max < generate->r_min)
            throw InvalidArgument("config: generate.radius must satisfy 0 < min <= max");
        if (generate->min_gap < 0.0)
            throw InvalidArgument("config: generate.min_gap must be non-negative");
    }
}

std::string RunConfig::to_json() const {
    return config_to_json_object(*this).dump(2) + "\n";
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    njson j;
    try {
        j = njson::parse(text);
    } catch (const njson::parse_error& e) {
        throw ParseError(std::string("config: invalid JSON: ") + e.what());
    }
    return config_from_json_object(j);
}

std::vector<Variant> parse_variants(const std::string& word) {
    if (word == "constraint")
        return {Variant::Constraint};
    if (word == "relaxed")
        return {Variant::Relaxed};
    if (word == "both")
        return {Variant::Constraint, Variant::Relaxed};
    throw InvalidArgument("variant must be constraint, relaxed, or both");
}

std::string variants_to_string(const std::vector<Variant>& variants) {
    bool constraint = false;
    bool relaxed = false;
    for (Variant v : variants) {
        if (global_of(v) == Variant::GlobalConstraint)
            constraint = true;
        else
            relaxed = true;
    }
    if (constraint && relaxed)
        return "both";
    return constraint ? "constraint" : "relaxed";
}

std::string Manifest::to_json() const {
    njson j;
    j["tool"] = "cemperf";
    j["version"] = kCodeVersion;
    j["command"] = command;
    j["config"] = config_to_json_object(config);
    if (!wall_ms.empty())
        j["timings"] = njson{{"wall_ms", wall_ms}};
    return j.dump(2) + "\n";
}

Manifest Manifest::from_json_text(const std::string& text) {
    njson j;
    try {
        j = njson::parse(text);
    } catch (const njson::parse_error& e) {
        throw ParseError(std::string("manifest: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("config"))
        throw ParseError("manifest: missing config object");
    Manifest m;
    if (j.contains("command") && j.at("command").is_string())
        m.command = j.at("command").get<std::string>();
    m.config = config_from_json_object(j.at("config"));
    if (j.contains("timings") && j.at("timings").is_object() &&
        j.at("timings").contains("wall_ms")) {
        for (const auto& e : j.at("timings").at("wall_ms"))
            m.wall_ms.push_back(as_number(e, "timings.wall_ms entry"));
    }
    return m;
}

LoadedConfig load_config_file(const std::string& path) {
    const std::string text = read_text_file(path);
    njson j;
    try {
        j = njson::parse(text);
    } catch (const njson::parse_error& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
    LoadedConfig loaded;
    if (j.is_object() && j.contains("config")) {
        Manifest m = Manifest::from_json_text(text);
        loaded.config = std::move(m.config);
        loaded.wall_ms = std::move(m.wall_ms);
        loaded.from_manifest = true;
    } else {
        loaded.config = config_from_json_object(j);
    }
    return loaded;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad())
        throw ParseError("cannot read " + path);
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out)
        throw ParseError("cannot write " + path);
}

TriMesh realize_mesh(const RunConfig& cfg, DomainSpec* spec_out) {
    DomainSpec spec;
    if (!cfg.mesh_path.empty()) {
        if (spec_out)
            *spec_out = DomainSpec{};
        return import_msh(read_text_file(cfg.mesh_path));
    }
    if (cfg.domain) {
        spec = *cfg.domain;
    } else if (cfg.generate) {
        spec = generate_perforations(cfg.generate->count, cfg.generate->r_min,
                                     cfg.generate->r_max, cfg.generate->min_gap,
                                     cfg.generate->seed);
    } else if (!cfg.domain_path.empty()) {
        spec = DomainSpec::from_json(read_text_file(cfg.domain_path));
    }
    if (spec_out)
        *spec_out = spec;
    return triangulate(spec, cfg.fine_n);
}

} // namespace cemperf
