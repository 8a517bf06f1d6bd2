#include "cemperf/aux_space.hpp"
#include "cemperf/cem_basis.hpp"
#include "cemperf/coarse.hpp"
#include "cemperf/errors.hpp"
#include "cemperf/fem.hpp"
#include "cemperf/geometry.hpp"
#include "cemperf/ms_solver.hpp"
#include "cemperf/msh_io.hpp"
#include "cemperf/run_config.hpp"
#include "cemperf/vtk_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using cemperf::Error;
using cemperf::RunConfig;
using cemperf::Variant;
using njson = nlohmann::ordered_json;

const char* error_kind(const Error& e) {
    if (dynamic_cast<const cemperf::InvalidArgument*>(&e)) return "InvalidArgument";
    if (dynamic_cast<const cemperf::PlacementFailure*>(&e)) return "PlacementFailure";
    if (dynamic_cast<const cemperf::DomainEmpty*>(&e)) return "DomainEmpty";
    if (dynamic_cast<const cemperf::DomainDisconnected*>(&e)) return "DomainDisconnected";
    if (dynamic_cast<const cemperf::InconsistentGeometry*>(&e)) return "InconsistentGeometry";
    if (dynamic_cast<const cemperf::ParseError*>(&e)) return "ParseError";
    if (dynamic_cast<const cemperf::UnsupportedVersion*>(&e)) return "UnsupportedVersion";
    if (dynamic_cast<const cemperf::MissingTags*>(&e)) return "MissingTags";
    if (dynamic_cast<const cemperf::NotPositiveDefinite*>(&e)) return "NotPositiveDefinite";
    if (dynamic_cast<const cemperf::NoConvergence*>(&e)) return "NoConvergence";
    if (dynamic_cast<const cemperf::DegenerateTriangle*>(&e)) return "DegenerateTriangle";
    if (dynamic_cast<const cemperf::NoDirichlet*>(&e)) return "NoDirichlet";
    if (dynamic_cast<const cemperf::ZeroReference*>(&e)) return "ZeroReference";
    if (dynamic_cast<const cemperf::NonNested*>(&e)) return "NonNested";
    if (dynamic_cast<const cemperf::SingularConstraintBlock*>(&e))
        return "SingularConstraintBlock";
    return "Error";
}

// 0 success, 1 numerical failure, 2 config/IO failure.
int exit_code_for(const Error& e) {
    if (dynamic_cast<const cemperf::ParseError*>(&e) ||
        dynamic_cast<const cemperf::UnsupportedVersion*>(&e) ||
        dynamic_cast<const cemperf::MissingTags*>(&e) ||
        dynamic_cast<const cemperf::InvalidArgument*>(&e) ||
        dynamic_cast<const cemperf::NonNested*>(&e))
        return 2;
    return 1;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     since)
        .count();
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string item = text.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            values.push_back(std::stoi(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw cemperf::InvalidArgument(std::string(what) + ": cannot parse \"" +
                                           item + "\"");
        }
        pos = comma + 1;
        if (comma == text.size())
            break;
    }
    return values;
}

cemperf::LayersRule parse_layers_flag(const std::string& text) {
    if (text == "log")
        return cemperf::LayersRule::log_rule();
    std::vector<int> values = parse_int_list(text, "--layers");
    if (values.size() == 1)
        return cemperf::LayersRule::uniform_rule(values.front());
    return cemperf::LayersRule::list_rule(std::move(values));
}

int parse_bps_entry(const std::string& item) {
    double v = 0.0;
    const std::size_t slash = item.find('/');
    try {
        if (slash != std::string::npos) {
            v = std::stod(item.substr(0, slash)) / std::stod(item.substr(slash + 1));
        } else {
            v = std::stod(item);
        }
    } catch (const std::exception&) {
        throw cemperf::InvalidArgument("--H: cannot parse \"" + item + "\"");
    }
    if (!(v > 0.0))
        throw cemperf::InvalidArgument("--H: sizes must be positive");
    const double inv = v > 1.0 ? v : 1.0 / v;
    const int bps = int(std::lround(inv));
    if (bps < 1 || std::abs(inv - bps) > 1e-9 * inv)
        throw cemperf::InvalidArgument("--H: \"" + item + "\" is not 1/k");
    return bps;
}

std::vector<int> parse_h_flag(const std::string& text) {
    std::vector<int> bps;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        bps.push_back(parse_bps_entry(text.substr(pos, comma - pos)));
        pos = comma + 1;
        if (comma == text.size())
            break;
    }
    if (bps.empty())
        throw cemperf::InvalidArgument("--H: empty list");
    return bps;
}

void ensure_outdir(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec)
        throw cemperf::ParseError("cannot create directory " + out + ": " +
                                  ec.message());
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::vector<double>& wall_ms) {
    cemperf::Manifest manifest;
    manifest.command = command;
    manifest.config = cfg;
    manifest.wall_ms = wall_ms;
    cemperf::write_text_file(cfg.out + "/manifest.json", manifest.to_json());
}

/// Flags shared by the experiment-style subcommands; values override the
/// config file (which may itself be a manifest from an earlier run).
struct SharedFlags {
    std::string config;
    std::string variant;
    std::string layers;
    int eigs = 3;
    std::string out;
    std::uint64_t seed = 0;
    int fine_n = 128;
    int threads = 1;
    std::string H;
    std::string mesh;
    std::string domain;
    double fine_tol = 1e-10;
    CLI::App* sub = nullptr;

    void attach(CLI::App* s) {
        sub = s;
        s->add_option("--config", config, "JSON config, or a manifest.json to replay");
        s->add_option("--variant", variant, "constraint|relaxed|both")
            ->check(CLI::IsMember({"constraint", "relaxed", "both"}));
        s->add_option("--layers", layers,
                      "oversampling layers: an integer, \"log\", or a comma list");
        s->add_option("--eigs", eigs, "eigenfunctions per coarse block (default 3)");
        s->add_option("--out", out, "output directory (default out)");
        s->add_option("--seed", seed, "perforation seed override");
        s->add_option("--fine-n", fine_n, "fine subdivisions per side");
        s->add_option("--threads", threads, "worker threads for basis builds");
        s->add_option("--H", H, "coarse size(s): 1/k, k, or a comma list");
        s->add_option("--mesh", mesh, "MSH 2.2 mesh path");
        s->add_option("--domain", domain, "domain spec JSON path");
        s->add_option("--fine-tol", fine_tol, "fine CG tolerance");
    }

    cemperf::LoadedConfig resolve() const {
        cemperf::LoadedConfig loaded;
        if (!config.empty())
            loaded = cemperf::load_config_file(config);
        RunConfig& c = loaded.config;
        bool touched = false;
        const auto set = [&](const char* flag) {
            if (sub->count(flag) == 0)
                return false;
            touched = true;
            return true;
        };
        if (set("--variant"))
            c.variants = cemperf::parse_variants(variant);
        if (set("--layers"))
            c.layers = parse_layers_flag(layers);
        if (set("--eigs"))
            c.eigs = eigs;
        if (set("--fine-n"))
            c.fine_n = fine_n;
        if (set("--H"))
            c.bps_list = parse_h_flag(H);
        if (set("--mesh")) {
            c.mesh_path = mesh;
            c.domain.reset();
            c.generate.reset();
            c.domain_path.clear();
        }
        if (set("--domain")) {
            c.domain_path = domain;
            c.domain.reset();
            c.generate.reset();
            c.mesh_path.clear();
        }
        if (set("--fine-tol"))
            c.fine_tol = fine_tol;
        if (set("--seed")) {
            if (c.generate)
                c.generate->seed = seed;
            else if (c.domain)
                c.domain->seed = seed;
        }
        // Recorded timings only replay for the exact recorded experiment.
        if (touched)
            loaded.wall_ms.clear();
        if (sub->count("--out"))
            c.out = out;
        if (sub->count("--threads"))
            c.threads = threads;
        if (c.out.empty())
            c.out = "out";
        return loaded;
    }
};

int single_bps(const RunConfig& cfg, const char* command) {
    if (cfg.bps_list.size() != 1)
        throw cemperf::InvalidArgument(std::string(command) +
                                       " uses a single coarse size; give one H");
    return cfg.bps_list.front();
}

/// Uniform-or-per-block layer counts for a single-H run.
std::vector<int> layers_per_block(const RunConfig& cfg, int bps) {
    const int n_blocks = bps * bps;
    if (cfg.layers.kind == cemperf::LayersRule::Kind::List &&
        cfg.layers.list.size() > 1) {
        if (int(cfg.layers.list.size()) != n_blocks)
            throw cemperf::InvalidArgument(
                "per-block layer list needs one entry per coarse block");
        return cfg.layers.list;
    }
    return std::vector<int>(n_blocks, cfg.layers.for_bps(bps));
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateFlags {
    std::string config;
    int disks = 50;
    double radius_min = 0.01;
    double radius_max = 0.04;
    double min_gap = 0.005;
    std::uint64_t seed = 0;
    bool allow_boundary_clip = false;
    int fine_n = 128;
    std::string H = "1/8";
    std::string out = "out";
    bool write_mesh = false;
    CLI::App* sub = nullptr;
};

int cmd_generate(const GenerateFlags& flags) {
    cemperf::GenerateParams params;
    RunConfig cfg;
    if (!flags.config.empty()) {
        cfg = cemperf::load_config_file(flags.config).config;
        if (cfg.generate)
            params = *cfg.generate;
    }
    const auto have = [&](const char* f) { return flags.sub->count(f) > 0; };
    if (have("--disks") || !cfg.generate)
        params.count = flags.disks;
    if (have("--radius-min"))
        params.r_min = flags.radius_min;
    if (have("--radius-max"))
        params.r_max = flags.radius_max;
    if (have("--min-gap"))
        params.min_gap = flags.min_gap;
    if (have("--seed"))
        params.seed = flags.seed;
    if (have("--fine-n") || cfg.fine_n == 0)
        cfg.fine_n = flags.fine_n;
    if (have("--H") || cfg.bps_list.empty())
        cfg.bps_list = parse_h_flag(flags.H);
    if (have("--out") || cfg.out.empty())
        cfg.out = flags.out;
    cfg.generate = params;
    cfg.domain.reset();
    cfg.domain_path.clear();
    cfg.mesh_path.clear();
    cfg.validate();

    cemperf::DomainSpec spec = cemperf::generate_perforations(
        params.count, params.r_min, params.r_max, params.min_gap, params.seed);
    spec.allow_boundary_clip = flags.allow_boundary_clip;

    ensure_outdir(cfg.out);
    cemperf::write_text_file(cfg.out + "/domain.json", spec.to_json());

    const cemperf::TriMesh mesh = cemperf::triangulate(spec, cfg.fine_n);
    if (flags.write_mesh)
        cemperf::write_text_file(cfg.out + "/mesh.msh", cemperf::export_msh(mesh));

    njson stats;
    stats["disks"] = spec.disks.size();
    stats["nodes"] = mesh.nodes.size();
    stats["triangles"] = mesh.triangles.size();
    stats["free_dofs"] =
        mesh.nodes.size() - std::size_t(mesh.node_count(cemperf::NodeTag::OuterDirichlet));
    const int bps = cfg.bps_list.front();
    if (cfg.fine_n % bps == 0) {
        const cemperf::CoarseGrid grid = cemperf::build_coarse_grid(mesh, bps);
        const std::vector<double> kt = cemperf::kappa_tilde(grid, mesh);
        stats["H"] = grid.H;
        stats["empty_blocks"] = bps * bps - grid.n_active;
        stats["min_kappa_tilde"] =
            kt.empty() ? 0.0 : *std::min_element(kt.begin(), kt.end());
    }
    stats["domain_json"] = cfg.out + "/domain.json";
    std::cout << stats.dump(2) << "\n";

    write_manifest(cfg, "generate", {});
    return 0;
}

// ---------------------------------------------------------------------------
// mesh-info
// ---------------------------------------------------------------------------

int cmd_mesh_info(const SharedFlags& flags) {
    RunConfig cfg = flags.resolve().config;
    cfg.validate();
    const cemperf::TriMesh mesh = cemperf::realize_mesh(cfg);

    double area = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        area += mesh.triangle_area(int(t));
    int dirichlet_edges = 0;
    int neumann_edges = 0;
    for (const auto& e : mesh.boundary_edges()) {
        if (e.tag == cemperf::NodeTag::OuterDirichlet)
            ++dirichlet_edges;
        else
            ++neumann_edges;
    }

    njson info;
    info["nodes"] = mesh.nodes.size();
    info["triangles"] = mesh.triangles.size();
    info["structured_n"] = mesh.structured_n;
    info["area"] = area;
    info["interior_nodes"] = mesh.node_count(cemperf::NodeTag::Interior);
    info["outer_dirichlet_nodes"] = mesh.node_count(cemperf::NodeTag::OuterDirichlet);
    info["perforation_neumann_nodes"] =
        mesh.node_count(cemperf::NodeTag::PerforationNeumann);
    info["free_dofs"] = cemperf::build_dof_map(mesh).n_free();
    info["outer_boundary_edges"] = dirichlet_edges;
    info["perforation_boundary_edges"] = neumann_edges;

    const int bps = cfg.bps_list.empty() ? 0 : cfg.bps_list.front();
    if (bps > 0 && mesh.structured_n > 0 && mesh.structured_n % bps == 0) {
        const cemperf::CoarseGrid grid = cemperf::build_coarse_grid(mesh, bps);
        const std::vector<double> kt = cemperf::kappa_tilde(grid, mesh);
        njson coarse;
        coarse["H"] = grid.H;
        coarse["blocks"] = bps * bps;
        coarse["active_blocks"] = grid.n_active;
        coarse["empty_blocks"] = bps * bps - grid.n_active;
        coarse["min_kappa_tilde"] =
            kt.empty() ? 0.0 : *std::min_element(kt.begin(), kt.end());
        info["coarse"] = coarse;
    }
    std::cout << info.dump(2) << "\n";

    if (flags.sub->count("--out") > 0) {
        ensure_outdir(cfg.out);
        write_manifest(cfg, "mesh-info", {});
    }
    return 0;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int cmd_solve(const SharedFlags& flags) {
    const cemperf::LoadedConfig loaded = flags.resolve();
    const RunConfig& cfg = loaded.config;
    cfg.validate();
    const int bps = single_bps(cfg, "solve");
    ensure_outdir(cfg.out);

    const auto t_shared = std::chrono::steady_clock::now();
    const cemperf::TriMesh mesh = cemperf::realize_mesh(cfg);
    const std::vector<double> f = cemperf::source_field(mesh, cfg.source);
    const cemperf::FemSystem system = cemperf::build_fem_system(mesh, f);
    const cemperf::ScalarField u_h = cemperf::solve_fine(mesh, f, cfg.fine_tol);

    const cemperf::CoarseGrid grid = cemperf::build_coarse_grid(mesh, bps);
    const std::vector<double> kt = cemperf::kappa_tilde(grid, mesh);
    const cemperf::AuxSpace aux = cemperf::build_aux_space(mesh, grid, kt, cfg.eigs);
    const cemperf::MsContext ctx(mesh, grid, aux);
    const std::vector<int> m_per_block = layers_per_block(cfg, bps);
    const std::vector<cemperf::MsBasisSet> sets =
        cemperf::build_basis_sets(ctx, m_per_block, cfg.variants, cfg.threads);
    const double shared_ms = elapsed_ms(t_shared);

    const cemperf::NormContext norms(mesh);
    const bool zero_reference = norms.energy_norm(u_h) == 0.0;
    const int m_row = *std::max_element(m_per_block.begin(), m_per_block.end());

    std::vector<cemperf::StudyRow> rows;
    std::vector<std::pair<std::string, std::vector<double>>> ms_fields;
    for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
        const auto t_variant = std::chrono::steady_clock::now();
        cemperf::MsSolution sol =
            zero_reference ? cemperf::solve_multiscale(ctx, sets[i], system)
                           : cemperf::solve_multiscale(ctx, sets[i], system, norms, u_h);
        cemperf::StudyRow row;
        row.bps = bps;
        row.m = m_row;
        row.variant = cfg.variants[i];
        row.l = cfg.eigs;
        row.e_L2 = zero_reference ? 0.0 : sol.e_L2;
        row.e_H1 = zero_reference ? 0.0 : sol.e_H1;
        row.n_fine_dofs = system.dofs.n_free();
        row.n_ms_dofs = int(sets[i].functions.size());
        row.wall_ms = shared_ms / double(cfg.variants.size()) + elapsed_ms(t_variant);
        rows.push_back(row);
        ms_fields.emplace_back(std::string("u_ms_") + cemperf::variant_name(cfg.variants[i]),
                               std::move(sol.u_ms));
    }
    if (loaded.wall_ms.size() == rows.size())
        for (std::size_t r = 0; r < rows.size(); ++r)
            rows[r].wall_ms = loaded.wall_ms[r];

    cemperf::write_text_file(cfg.out + "/u_h.vtk", cemperf::export_vtk(mesh, {{"u_h", u_h}}));
    cemperf::write_text_file(cfg.out + "/u_ms.vtk", cemperf::export_vtk(mesh, ms_fields));
    cemperf::write_text_file(cfg.out + "/errors.csv", cemperf::study_csv(rows));
    std::vector<double> wall;
    for (const auto& row : rows)
        wall.push_back(row.wall_ms);
    write_manifest(cfg, "solve", wall);

    njson summary;
    summary["written"] = njson::array({cfg.out + "/u_h.vtk", cfg.out + "/u_ms.vtk",
                                       cfg.out + "/errors.csv",
                                       cfg.out + "/manifest.json"});
    for (const auto& row : rows) {
        njson r;
        r["variant"] = cemperf::variant_name(row.variant);
        r["e_L2"] = row.e_L2;
        r["e_H1"] = row.e_H1;
        summary["errors"].push_back(r);
    }
    std::cout << summary.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// study convergence / study decay
// ---------------------------------------------------------------------------

int cmd_study_convergence(const SharedFlags& flags) {
    const cemperf::LoadedConfig loaded = flags.resolve();
    const RunConfig& cfg = loaded.config;
    cfg.validate();
    ensure_outdir(cfg.out);

    const cemperf::TriMesh mesh = cemperf::realize_mesh(cfg);
    const std::vector<double> f = cemperf::source_field(mesh, cfg.source);
    cemperf::StudySchedule schedule;
    schedule.bps_list = cfg.bps_list;
    schedule.m_list = cfg.layers.for_schedule(cfg.bps_list);

    const std::size_t expected = cfg.bps_list.size() * cfg.variants.size();
    const std::vector<double>* override_ptr =
        loaded.wall_ms.size() == expected ? &loaded.wall_ms : nullptr;
    const std::vector<cemperf::StudyRow> rows =
        cemperf::convergence_study(mesh, f, schedule, cfg.eigs, cfg.variants,
                                   cfg.threads, cfg.fine_tol, override_ptr);

    cemperf::write_text_file(cfg.out + "/convergence.csv", cemperf::study_csv(rows));
    std::vector<double> wall;
    for (const auto& row : rows)
        wall.push_back(row.wall_ms);
    write_manifest(cfg, "study convergence", wall);

    njson summary;
    summary["written"] =
        njson::array({cfg.out + "/convergence.csv", cfg.out + "/manifest.json"});
    summary["rows"] = rows.size();
    std::cout << summary.dump(2) << "\n";
    return 0;
}

std::vector<int> decay_m_list(const RunConfig& cfg, int bps) {
    using Kind = cemperf::LayersRule::Kind;
    if (cfg.layers.kind == Kind::List)
        return cfg.layers.list;
    const int top = std::max(1, cfg.layers.kind == Kind::Uniform
                                    ? cfg.layers.uniform
                                    : cfg.layers.for_bps(bps));
    std::vector<int> m_list;
    for (int m = 1; m <= top; ++m)
        m_list.push_back(m);
    return m_list;
}

int cmd_study_decay(const SharedFlags& flags) {
    const cemperf::LoadedConfig loaded = flags.resolve();
    const RunConfig& cfg = loaded.config;
    cfg.validate();
    const int bps = single_bps(cfg, "study decay");
    ensure_outdir(cfg.out);

    const cemperf::TriMesh mesh = cemperf::realize_mesh(cfg);
    const std::vector<double> f = cemperf::source_field(mesh, cfg.source);
    const std::vector<int> m_list = decay_m_list(cfg, bps);

    const std::size_t expected = m_list.size() * cfg.variants.size();
    const std::vector<double>* override_ptr =
        loaded.wall_ms.size() == expected ? &loaded.wall_ms : nullptr;
    const cemperf::DecayStudyResult result =
        cemperf::decay_study(mesh, f, bps, cfg.eigs, cfg.variants, m_list,
                             cfg.threads, cfg.fine_tol, override_ptr);

    cemperf::write_text_file(cfg.out + "/decay.csv", cemperf::study_csv(result.rows));
    std::string gaps = "m,max_rel_gap\r\n";
    for (const auto& [m, gap] : result.max_basis_decay) {
        char line[64];
        std::snprintf(line, sizeof(line), "%d,%.12e\r\n", m, gap);
        gaps += line;
    }
    cemperf::write_text_file(cfg.out + "/decay_gaps.csv", gaps);
    std::vector<double> wall;
    for (const auto& row : result.rows)
        wall.push_back(row.wall_ms);
    write_manifest(cfg, "study decay", wall);

    njson summary;
    summary["written"] = njson::array({cfg.out + "/decay.csv", cfg.out + "/decay_gaps.csv",
                                       cfg.out + "/manifest.json"});
    summary["rows"] = result.rows.size();
    std::cout << summary.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// export-basis
// ---------------------------------------------------------------------------

int cmd_export_basis(const SharedFlags& flags, const std::string& block_flag) {
    const cemperf::LoadedConfig loaded = flags.resolve();
    const RunConfig& cfg = loaded.config;
    cfg.validate();
    const int bps = single_bps(cfg, "export-basis");
    ensure_outdir(cfg.out);

    const std::vector<int> ij = parse_int_list(block_flag, "--block");
    if (ij.size() != 2)
        throw cemperf::InvalidArgument("--block expects \"bi,bj\"");
    const auto [bi, bj] = std::pair{ij[0], ij[1]};
    if (bi < 0 || bj < 0 || bi >= bps || bj >= bps)
        throw cemperf::InvalidArgument("--block is outside the coarse lattice");

    const cemperf::TriMesh mesh = cemperf::realize_mesh(cfg);
    const cemperf::CoarseGrid grid = cemperf::build_coarse_grid(mesh, bps);
    const std::vector<double> kt = cemperf::kappa_tilde(grid, mesh);
    const cemperf::AuxSpace aux = cemperf::build_aux_space(mesh, grid, kt, cfg.eigs);
    const cemperf::MsContext ctx(mesh, grid, aux);

    const int block = grid.block_index(bi, bj);
    const cemperf::BlockSpectrum* spectrum = aux.spectrum_of(block);
    if (spectrum == nullptr)
        throw cemperf::InvalidArgument("block (" + std::to_string(bi) + "," +
                                       std::to_string(bj) + ") is fully perforated");

    const int m = cfg.layers.for_bps(bps);
    std::vector<std::pair<std::string, std::vector<double>>> fields;
    for (int j = 0; j < spectrum->l(); ++j)
        fields.emplace_back("phi_" + std::to_string(j + 1),
                            cemperf::aux_function_field(aux, block, j, mesh.nodes.size()));
    for (Variant v : cfg.variants) {
        for (int j = 0; j < spectrum->l(); ++j) {
            const cemperf::MsBasisFunction psi =
                v == Variant::Relaxed
                    ? cemperf::build_relaxed_basis(ctx, block, j, m)
                    : cemperf::build_constraint_basis(ctx, block, j, m);
            fields.emplace_back(std::string("psi_") + cemperf::variant_name(v) + "_" +
                                    std::to_string(j + 1),
                                psi.to_field(mesh.nodes.size()));
        }
    }

    const std::string vtk_path =
        cfg.out + "/basis_b" + std::to_string(bi) + "_" + std::to_string(bj) + ".vtk";
    cemperf::write_text_file(vtk_path, cemperf::export_vtk(mesh, fields));
    cemperf::write_text_file(cfg.out + "/spectrum.csv", cemperf::spectrum_csv(aux));
    write_manifest(cfg, "export-basis", {});

    njson summary;
    summary["written"] =
        njson::array({vtk_path, cfg.out + "/spectrum.csv", cfg.out + "/manifest.json"});
    summary["fields"] = fields.size();
    std::cout << summary.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CEM-GMsFEM toolkit for the Poisson problem on perforated domains"};
    app.require_subcommand(1);

    GenerateFlags gen;
    CLI::App* sub_gen =
        app.add_subcommand("generate", "Draw a random perforated domain, write its "
                                       "spec JSON, and report mesh stats");
    gen.sub = sub_gen;
    sub_gen->add_option("--config", gen.config, "JSON config providing defaults");
    sub_gen->add_option("--disks", gen.disks, "number of perforations (default 50)");
    sub_gen->add_option("--radius-min", gen.radius_min, "smallest radius");
    sub_gen->add_option("--radius-max", gen.radius_max, "largest radius");
    sub_gen->add_option("--min-gap", gen.min_gap, "minimal gap between disks");
    sub_gen->add_option("--seed", gen.seed, "placement seed");
    sub_gen->add_flag("--allow-boundary-clip", gen.allow_boundary_clip,
                      "permit disks touching the outer boundary");
    sub_gen->add_option("--fine-n", gen.fine_n, "fine subdivisions for the stats mesh");
    sub_gen->add_option("--H", gen.H, "coarse size for the block stats");
    sub_gen->add_option("--out", gen.out, "output directory");
    sub_gen->add_flag("--write-mesh", gen.write_mesh, "also write mesh.msh");

    SharedFlags info_flags;
    CLI::App* sub_info = app.add_subcommand("mesh-info", "Inspect a mesh or domain");
    info_flags.attach(sub_info);

    SharedFlags solve_flags;
    CLI::App* sub_solve = app.add_subcommand(
        "solve", "Fine reference + multiscale solve; writes VTK fields and errors.csv");
    solve_flags.attach(sub_solve);

    CLI::App* sub_study = app.add_subcommand("study", "Experiment tables");
    sub_study->require_subcommand(1);
    SharedFlags conv_flags;
    CLI::App* sub_conv = sub_study->add_subcommand(
        "convergence", "Errors over an H schedule; writes convergence.csv");
    conv_flags.attach(sub_conv);
    SharedFlags decay_flags;
    CLI::App* sub_decay = sub_study->add_subcommand(
        "decay", "Errors and localization gaps over oversampling layers m");
    decay_flags.attach(sub_decay);

    SharedFlags export_flags;
    std::string block_flag = "0,0";
    CLI::App* sub_export = app.add_subcommand(
        "export-basis", "Write one block's auxiliary and multiscale basis "
                        "functions as VTK fields");
    export_flags.attach(sub_export);
    sub_export->add_option("--block", block_flag, "coarse block \"bi,bj\" (default 0,0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sub_gen->parsed())
            return cmd_generate(gen);
        if (sub_info->parsed())
            return cmd_mesh_info(info_flags);
        if (sub_solve->parsed())
            return cmd_solve(solve_flags);
        if (sub_study->parsed() && sub_conv->parsed())
            return cmd_study_convergence(conv_flags);
        if (sub_study->parsed() && sub_decay->parsed())
            return cmd_study_decay(decay_flags);
        if (sub_export->parsed())
            return cmd_export_basis(export_flags, block_flag);
    } catch (const Error& e) {
        njson err;
        err["error"] = error_kind(e);
        err["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        njson err;
        err["error"] = "Internal";
        err["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 2;
}
