#include "cemperf/ms_solver.hpp"
#include "cemperf/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace cemperf {

namespace {

double wall_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     t0)
        .count();
}

/// Dense coarse Gram/stiffness A_c = R A Rᵀ. Basis supports are unions of
/// whole blocks, so functions further apart than the sum of their layer
/// counts (Chebyshev distance in the block lattice) cannot overlap and their
/// entry is exactly zero.
DenseMatrix coarse_stiffness(const MsContext& ctx, const MsBasisSet& basis) {
    const int n = int(basis.functions.size());
    const int bps = ctx.grid.blocks_per_side;
    DenseMatrix A_c(n, n);

    std::vector<double> scratch(ctx.mesh.nodes.size(), 0.0);
    std::vector<int> touched;
    touched.reserve(4096);

    for (int p = 0; p < n; ++p) {
        const MsBasisFunction& fp = basis.functions[p];
        // w = A ψ_p, accumulated sparsely
        for (std::size_t k = 0; k < fp.nodes.size(); ++k) {
            const int g = fp.nodes[k];
            const double v = fp.values[k];
            for (int e = ctx.stiffness_full.row_offsets[g];
                 e < ctx.stiffness_full.row_offsets[g + 1]; ++e) {
                const int h = ctx.stiffness_full.col_indices[e];
                if (scratch[h] == 0.0) touched.push_back(h);
                scratch[h] += ctx.stiffness_full.values[e] * v;
            }
        }

        const int pi = ctx.grid.blocks[fp.block].bi;
        const int pj = ctx.grid.blocks[fp.block].bj;
        for (int q = p; q < n; ++q) {
            const MsBasisFunction& fq = basis.functions[q];
            if (!is_global(fp.variant) || !is_global(fq.variant)) {
                const int qi = ctx.grid.blocks[fq.block].bi;
                const int qj = ctx.grid.blocks[fq.block].bj;
                const int reach = std::min(bps, fp.layers + fq.layers);
                if (std::abs(pi - qi) > reach || std::abs(pj - qj) > reach) continue;
            }
            double s = 0.0;
            for (std::size_t k = 0; k < fq.nodes.size(); ++k)
                s += scratch[fq.nodes[k]] * fq.values[k];
            A_c.at(p, q) = A_c.at(q, p) = s;
        }

        for (int h : touched) scratch[h] = 0.0;
        touched.clear();
    }
    return A_c;
}

} // namespace

MsSolution solve_multiscale(const MsContext& ctx, const MsBasisSet& basis,
                            const FemSystem& system) {
    const int n = int(basis.functions.size());
    if (n == 0) throw InvalidArgument("solve_multiscale: empty basis");

    const DenseMatrix A_c = coarse_stiffness(ctx, basis);

    const ScalarField load_full = expand_from_free(system.dofs, system.load);
    std::vector<double> F_c(n, 0.0);
    for (int p = 0; p < n; ++p) {
        const MsBasisFunction& fp = basis.functions[p];
        double s = 0.0;
        for (std::size_t k = 0; k < fp.nodes.size(); ++k)
            s += fp.values[k] * load_full[fp.nodes[k]];
        F_c[p] = s;
    }

    MsSolution sol;
    if (n <= 10000) {
        DenseMatrix L = A_c;
        cholesky_factor(L); // NotPositiveDefinite = linearly dependent basis
        sol.u_coarse = F_c;
        cholesky_solve_factored(L, sol.u_coarse);
    } else {
        // fallback for very large coarse spaces: sparse CG on the same system
        std::vector<Triplet> triplets;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (A_c.at(i, j) != 0.0) triplets.push_back({i, j, A_c.at(i, j)});
        const SparseMatrix A_sp = SparseMatrix::from_triplets(n, n, std::move(triplets));
        sol.u_coarse = conjugate_gradient(A_sp, F_c, 1e-12, 50 * n);
    }

    sol.u_ms.assign(ctx.mesh.nodes.size(), 0.0);
    for (int p = 0; p < n; ++p) {
        const MsBasisFunction& fp = basis.functions[p];
        const double c = sol.u_coarse[p];
        for (std::size_t k = 0; k < fp.nodes.size(); ++k)
            sol.u_ms[fp.nodes[k]] += c * fp.values[k];
    }
    return sol;
}

MsSolution solve_multiscale(const MsContext& ctx, const MsBasisSet& basis,
                            const FemSystem& system, const NormContext& norms,
                            const ScalarField& u_ref) {
    MsSolution sol = solve_multiscale(ctx, basis, system);
    const auto [e_l2, e_h1] = relative_errors(norms, u_ref, sol.u_ms);
    sol.e_L2 = e_l2;
    sol.e_H1 = e_h1;
    return sol;
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

std::string study_csv(const std::vector<StudyRow>& rows) {
    std::string out = "H,m,variant,l,e_L2,e_H1,n_fine_dofs,n_ms_dofs,wall_ms\r\n";
    char buf[256];
    for (const StudyRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.10g,%d,%s,%d,%.12e,%.12e,%d,%d,%.3f\r\n",
                      1.0 / r.bps, r.m, variant_name(r.variant), r.l, r.e_L2, r.e_H1,
                      r.n_fine_dofs, r.n_ms_dofs, r.wall_ms);
        out += buf;
    }
    return out;
}

std::vector<StudyRow> convergence_study(const TriMesh& mesh,
                                        const std::vector<double>& f_per_triangle,
                                        const StudySchedule& schedule, int l,
                                        const std::vector<Variant>& variants,
                                        int threads, double fine_tol,
                                        const std::vector<double>* wall_override) {
    if (schedule.bps_list.size() != schedule.m_list.size())
        throw InvalidArgument("convergence_study: schedule lists differ in length");

    const FemSystem system = build_fem_system(mesh, f_per_triangle);
    const NormContext norms(mesh);
    const ScalarField u_ref = solve_fine(mesh, f_per_triangle, fine_tol);

    std::vector<StudyRow> rows;
    for (std::size_t k = 0; k < schedule.bps_list.size(); ++k) {
        const int bps = schedule.bps_list[k];
        const int m = schedule.m_list[k];

        const auto t0 = std::chrono::steady_clock::now();
        const CoarseGrid grid = build_coarse_grid(mesh, bps);
        const std::vector<double> kt = kappa_tilde(grid, mesh);
        const AuxSpace aux = build_aux_space(mesh, grid, kt, l);
        const MsContext ctx(mesh, grid, aux);
        const std::vector<int> m_per_block(grid.blocks.size(), m);
        const std::vector<MsBasisSet> sets =
            build_basis_sets(ctx, m_per_block, variants, threads);
        const double shared_ms = wall_since(t0) / double(variants.size());

        for (const MsBasisSet& set : sets) {
            const auto tv = std::chrono::steady_clock::now();
            const MsSolution sol = solve_multiscale(ctx, set, system, norms, u_ref);
            StudyRow row;
            row.bps = bps;
            row.m = m;
            row.variant = set.variant;
            row.l = l;
            row.e_L2 = sol.e_L2;
            row.e_H1 = sol.e_H1;
            row.n_fine_dofs = system.dofs.n_free();
            row.n_ms_dofs = int(set.functions.size());
            row.wall_ms = shared_ms + wall_since(tv);
            rows.push_back(row);
        }
    }

    if (wall_override != nullptr) {
        if (wall_override->size() != rows.size())
            throw InvalidArgument("convergence_study: recorded timing count does "
                                  "not match the row count");
        for (std::size_t r = 0; r < rows.size(); ++r)
            rows[r].wall_ms = (*wall_override)[r];
    }
    return rows;
}

DecayStudyResult decay_study(const TriMesh& mesh,
                             const std::vector<double>& f_per_triangle, int bps,
                             int l, const std::vector<Variant>& variants,
                             const std::vector<int>& m_list, int threads,
                             double fine_tol, const std::vector<double>* wall_override) {
    const FemSystem system = build_fem_system(mesh, f_per_triangle);
    const NormContext norms(mesh);
    const ScalarField u_ref = solve_fine(mesh, f_per_triangle, fine_tol);

    const CoarseGrid grid = build_coarse_grid(mesh, bps);
    const std::vector<double> kt = kappa_tilde(grid, mesh);
    const AuxSpace aux = build_aux_space(mesh, grid, kt, l);
    const MsContext ctx(mesh, grid, aux);
    const std::size_t n_nodes = mesh.nodes.size();

    // global references for the localization gap, one per requested variant
    std::vector<Variant> global_variants;
    for (Variant v : variants) global_variants.push_back(global_of(v));
    const std::vector<MsBasisSet> global_sets = build_basis_sets(
        ctx, std::vector<int>(grid.blocks.size(), saturating_layers(grid)),
        global_variants, threads);

    std::vector<std::vector<double>> global_energy(global_sets.size());
    for (std::size_t v = 0; v < global_sets.size(); ++v) {
        for (const MsBasisFunction& f : global_sets[v].functions) {
            const ScalarField field = f.to_field(n_nodes);
            global_energy[v].push_back(
                std::sqrt(std::max(0.0, ctx.stiffness_full.quad(field, field))));
        }
    }

    DecayStudyResult result;
    for (int m : m_list) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<MsBasisSet> sets = build_basis_sets(
            ctx, std::vector<int>(grid.blocks.size(), m), variants, threads);
        const double shared_ms = wall_since(t0) / double(variants.size());

        double worst_gap = 0.0;
        for (std::size_t v = 0; v < sets.size(); ++v) {
            const auto tv = std::chrono::steady_clock::now();
            for (std::size_t p = 0; p < sets[v].functions.size(); ++p) {
                const ScalarField loc = sets[v].functions[p].to_field(n_nodes);
                const ScalarField glo = global_sets[v].functions[p].to_field(n_nodes);
                std::vector<double> diff(n_nodes);
                for (std::size_t i = 0; i < n_nodes; ++i) diff[i] = glo[i] - loc[i];
                const double gap =
                    std::sqrt(std::max(0.0, ctx.stiffness_full.quad(diff, diff)));
                if (global_energy[v][p] > 0.0)
                    worst_gap = std::max(worst_gap, gap / global_energy[v][p]);
            }
            const MsSolution sol = solve_multiscale(ctx, sets[v], system, norms, u_ref);
            StudyRow row;
            row.bps = bps;
            row.m = m;
            row.variant = sets[v].variant;
            row.l = l;
            row.e_L2 = sol.e_L2;
            row.e_H1 = sol.e_H1;
            row.n_fine_dofs = system.dofs.n_free();
            row.n_ms_dofs = int(sets[v].functions.size());
            row.wall_ms = shared_ms + wall_since(tv);
            result.rows.push_back(row);
        }
        result.max_basis_decay.push_back({m, worst_gap});
    }

    if (wall_override != nullptr) {
        if (wall_override->size() != result.rows.size())
            throw InvalidArgument("decay_study: recorded timing count does not "
                                  "match the row count");
        for (std::size_t r = 0; r < result.rows.size(); ++r)
            result.rows[r].wall_ms = (*wall_override)[r];
    }
    return result;
}

} // namespace cemperf
