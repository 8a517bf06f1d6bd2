#include "cemperf/cem_basis.hpp"
#include "cemperf/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace cemperf {

bool is_global(Variant v) {
    return v == Variant::GlobalConstraint || v == Variant::GlobalRelaxed;
}

Variant global_of(Variant v) {
    switch (v) {
    case Variant::Constraint: return Variant::GlobalConstraint;
    case Variant::Relaxed: return Variant::GlobalRelaxed;
    default: return v;
    }
}

const char* variant_name(Variant v) {
    switch (v) {
    case Variant::Constraint: return "constraint";
    case Variant::Relaxed: return "relaxed";
    case Variant::GlobalConstraint: return "global_constraint";
    case Variant::GlobalRelaxed: return "global_relaxed";
    }
    return "?";
}

ScalarField MsBasisFunction::to_field(std::size_t n_nodes) const {
    ScalarField out(n_nodes, 0.0);
    for (std::size_t k = 0; k < nodes.size(); ++k) out[nodes[k]] = values[k];
    return out;
}

MsContext::MsContext(const TriMesh& mesh_, const CoarseGrid& grid_,
                     const AuxSpace& aux_)
    : mesh(mesh_), grid(grid_), aux(aux_), stiffness_full(assemble_stiffness(mesh_)) {}

// ---------------------------------------------------------------------------
// PatchSolver
// ---------------------------------------------------------------------------

namespace {

// Dense Cholesky with the looser singularity threshold of the constraint
// Gram matrix: a pivot at or below 1e-12·‖M‖_∞ signals linearly dependent
// constraints (auxiliary space too rich for the patch).
DenseMatrix factor_constraint_gram(const DenseMatrix& M) {
    const int n = M.n_rows;
    double norm_inf = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += std::abs(M.at(i, j));
        norm_inf = std::max(norm_inf, row);
    }
    const double floor = 1e-12 * std::max(norm_inf, 1e-300);

    DenseMatrix L = M;
    for (int j = 0; j < n; ++j) {
        double d = L.at(j, j);
        for (int k = 0; k < j; ++k) d -= L.at(j, k) * L.at(j, k);
        if (d <= floor)
            throw SingularConstraintBlock(
                "constraint Gram matrix has a near-zero pivot (column " +
                std::to_string(j) + "): linearly dependent auxiliary constraints");
        const double ljj = std::sqrt(d);
        L.at(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = L.at(i, j);
            for (int k = 0; k < j; ++k) s -= L.at(i, k) * L.at(j, k);
            L.at(i, j) = s / ljj;
        }
    }
    return L;
}

} // namespace

PatchSolver::PatchSolver(const MsContext& ctx, OversampleRegion region)
    : ctx_(ctx), region_(std::move(region)), A_(1, 0) {
    const TriMesh& mesh = ctx_.mesh;
    const int n_free = int(region_.free_nodes.size());
    if (n_free == 0)
        throw SingularConstraintBlock("oversampling region has no free dofs");

    std::vector<int> node_to_local(mesh.nodes.size(), -1);
    for (int i = 0; i < n_free; ++i) node_to_local[region_.free_nodes[i]] = i;

    // bandwidth of the patch stiffness in the local (node-id sorted) ordering
    int bw = 0;
    for (int t : region_.triangles) {
        const auto& tri = mesh.triangles[t];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const int la = node_to_local[tri[a]];
                const int lb = node_to_local[tri[b]];
                if (la >= 0 && lb >= 0) bw = std::max(bw, la - lb);
            }
        }
    }

    A_ = BandedCholesky(n_free, bw);
    for (int t : region_.triangles) {
        const auto& tri = mesh.triangles[t];
        const Vec2& p0 = mesh.nodes[tri[0]];
        const Vec2& p1 = mesh.nodes[tri[1]];
        const Vec2& p2 = mesh.nodes[tri[2]];
        const double area = mesh.triangle_area(t);
        const std::array<double, 3> bb = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
        const std::array<double, 3> cc = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
        const double inv4A = 1.0 / (4.0 * area);
        for (int a = 0; a < 3; ++a) {
            const int la = node_to_local[tri[a]];
            if (la < 0) continue;
            for (int b = 0; b < 3; ++b) {
                const int lb = node_to_local[tri[b]];
                if (lb < 0 || lb > la) continue;
                A_.at(la, lb) += (bb[a] * bb[b] + cc[a] * cc[b]) * inv4A;
            }
        }
    }
    A_.factor();

    // constraint columns: S_b φ^b_k for every aux pair of a patch block,
    // ordered by (block ascending, k ascending)
    for (int block : region_.blocks) {
        const BlockSpectrum* spec = ctx_.aux.spectrum_of(block);
        if (spec == nullptr) continue;
        for (int k = 0; k < spec->l(); ++k) {
            std::vector<int> idx;
            std::vector<double> val;
            idx.reserve(spec->nodes.size());
            for (std::size_t r = 0; r < spec->nodes.size(); ++r) {
                const int li = node_to_local[spec->nodes[r]];
                if (li < 0) continue; // pinned or Dirichlet: ψ vanishes there
                idx.push_back(li);
                val.push_back(spec->s_rows[k][r]);
            }
            c_block_.push_back({block, k});
            c_columns_.push_back({std::move(idx), std::move(val)});
        }
    }

    const int n_c = int(c_block_.size());
    X_ = DenseMatrix(n_free, n_c);
    std::vector<double> col(n_free);
    for (int c = 0; c < n_c; ++c) {
        std::fill(col.begin(), col.end(), 0.0);
        const auto& [idx, val] = c_columns_[c];
        for (std::size_t k = 0; k < idx.size(); ++k) col[idx[k]] = val[k];
        A_.solve(col);
        for (int i = 0; i < n_free; ++i) X_.at(i, c) = col[i];
    }

    M_ = DenseMatrix(n_c, n_c);
    for (int c = 0; c < n_c; ++c) {
        const auto& [idx, val] = c_columns_[c];
        for (int d = c; d < n_c; ++d) {
            double s = 0.0;
            for (std::size_t k = 0; k < idx.size(); ++k)
                s += val[k] * X_.at(idx[k], d);
            M_.at(c, d) = M_.at(d, c) = s;
        }
    }
}

int PatchSolver::constraint_index(int block, int j) const {
    const auto it = std::lower_bound(c_block_.begin(), c_block_.end(),
                                     std::pair<int, int>{block, j});
    if (it == c_block_.end() || *it != std::pair<int, int>{block, j}) return -1;
    return int(it - c_block_.begin());
}

std::vector<double> PatchSolver::combine(const std::vector<double>& w) const {
    const int n_free = X_.n_rows;
    const int n_c = X_.n_cols;
    std::vector<double> psi(n_free, 0.0);
    for (int i = 0; i < n_free; ++i) {
        double s = 0.0;
        const double* row = &X_.values[std::size_t(i) * n_c];
        for (int c = 0; c < n_c; ++c) s += row[c] * w[c];
        psi[i] = s;
    }
    return psi;
}

std::vector<double> PatchSolver::constraint_psi(int c) {
    if (c < 0 || c >= n_constraints())
        throw InvalidArgument("constraint_psi: constraint index out of range");
    if (!m_factored_) {
        M_factor_ = factor_constraint_gram(M_);
        m_factored_ = true;
    }
    std::vector<double> w(n_constraints(), 0.0);
    w[c] = 1.0;
    cholesky_solve_factored(M_factor_, w);
    return combine(w);
}

std::vector<double> PatchSolver::relaxed_psi(int c) {
    if (c < 0 || c >= n_constraints())
        throw InvalidArgument("relaxed_psi: constraint index out of range");
    if (!im_factored_) {
        DenseMatrix IM = M_;
        for (int i = 0; i < IM.n_rows; ++i) IM.at(i, i) += 1.0;
        cholesky_factor(IM);
        IM_factor_ = std::move(IM);
        im_factored_ = true;
    }
    std::vector<double> w(n_constraints(), 0.0);
    w[c] = 1.0;
    cholesky_solve_factored(IM_factor_, w);
    return combine(w);
}

double PatchSolver::constraint_dot(int c, const std::vector<double>& psi_free) const {
    const auto& [idx, val] = c_columns_[c];
    double s = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) s += val[k] * psi_free[idx[k]];
    return s;
}

// ---------------------------------------------------------------------------
// Basis builders
// ---------------------------------------------------------------------------

int saturating_layers(const CoarseGrid& grid) { return grid.blocks_per_side; }

namespace {

MsBasisFunction emit(PatchSolver& solver, int block, int j, Variant variant,
                     int layers) {
    const int c = solver.constraint_index(block, j);
    if (c < 0)
        throw InvalidArgument("basis builder: block " + std::to_string(block) +
                              " has no auxiliary function " + std::to_string(j));
    MsBasisFunction f;
    f.block = block;
    f.eig_index = j;
    f.layers = layers;
    f.variant = variant;
    f.nodes = solver.region().free_nodes;
    f.values = (variant == Variant::Constraint || variant == Variant::GlobalConstraint)
                   ? solver.constraint_psi(c)
                   : solver.relaxed_psi(c);
    return f;
}

void check_block_pair(const MsContext& ctx, int block, int j) {
    if (block < 0 || block >= int(ctx.grid.blocks.size()))
        throw InvalidArgument("basis builder: block index out of range");
    const BlockSpectrum* spec = ctx.aux.spectrum_of(block);
    if (spec == nullptr || j < 0 || j >= spec->l())
        throw InvalidArgument("basis builder: no auxiliary pair (" +
                              std::to_string(block) + ", " + std::to_string(j) + ")");
}

} // namespace

MsBasisFunction build_constraint_basis(const MsContext& ctx, int block, int j, int m) {
    check_block_pair(ctx, block, j);
    PatchSolver solver(ctx, oversample(ctx.grid, ctx.mesh, block, m));
    return emit(solver, block, j, Variant::Constraint, m);
}

MsBasisFunction build_relaxed_basis(const MsContext& ctx, int block, int j, int m) {
    check_block_pair(ctx, block, j);
    PatchSolver solver(ctx, oversample(ctx.grid, ctx.mesh, block, m));
    return emit(solver, block, j, Variant::Relaxed, m);
}

MsBasisFunction build_global_basis(const MsContext& ctx, int block, int j,
                                   Variant variant) {
    check_block_pair(ctx, block, j);
    const int m = saturating_layers(ctx.grid);
    PatchSolver solver(ctx, oversample(ctx.grid, ctx.mesh, block, m));
    return emit(solver, block, j, global_of(variant), m);
}

std::vector<std::pair<int, double>> decay_profile(const MsContext& ctx, int block,
                                                  int j, Variant variant,
                                                  const std::vector<int>& m_list,
                                                  PatchSolver* global_solver) {
    check_block_pair(ctx, block, j);
    const std::size_t n_nodes = ctx.mesh.nodes.size();

    PatchSolver* glo = global_solver;
    std::unique_ptr<PatchSolver> owned;
    if (glo == nullptr) {
        owned = std::make_unique<PatchSolver>(
            ctx, oversample(ctx.grid, ctx.mesh, block, saturating_layers(ctx.grid)));
        glo = owned.get();
    }
    const ScalarField psi_glo =
        emit(*glo, block, j, global_of(variant), saturating_layers(ctx.grid))
            .to_field(n_nodes);

    std::vector<std::pair<int, double>> profile;
    profile.reserve(m_list.size());
    for (int m : m_list) {
        PatchSolver solver(ctx, oversample(ctx.grid, ctx.mesh, block, m));
        const ScalarField psi_m = emit(solver, block, j, variant, m).to_field(n_nodes);
        std::vector<double> diff(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) diff[i] = psi_glo[i] - psi_m[i];
        const double gap = std::sqrt(std::max(0.0, ctx.stiffness_full.quad(diff, diff)));
        profile.push_back({m, gap});
    }
    return profile;
}

std::vector<MsBasisSet> build_basis_sets(const MsContext& ctx,
                                         const std::vector<int>& m_per_block,
                                         const std::vector<Variant>& variants,
                                         int threads) {
    if (m_per_block.size() != ctx.grid.blocks.size())
        throw InvalidArgument("build_basis_sets: m_per_block length mismatch");
    if (variants.empty())
        throw InvalidArgument("build_basis_sets: no variants requested");
    threads = std::max(1, threads);

    // blocks carrying aux functions, with their slot offsets in the output
    std::vector<int> work_blocks;
    std::vector<int> offsets;
    int total = 0;
    for (const BlockSpectrum& spec : ctx.aux.entries) {
        work_blocks.push_back(spec.block);
        offsets.push_back(total);
        total += spec.l();
    }

    std::vector<MsBasisSet> out(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v) {
        out[v].variant = variants[v];
        out[v].functions.resize(total);
    }

    const bool global = std::all_of(variants.begin(), variants.end(), is_global);
    for (Variant v : variants) {
        if (is_global(v) != global)
            throw InvalidArgument("build_basis_sets: cannot mix global and "
                                  "localized variants in one pass");
    }

    if (global) {
        // one saturated patch serves every block
        const int m = saturating_layers(ctx.grid);
        PatchSolver solver(
            ctx, oversample(ctx.grid, ctx.mesh, work_blocks.front(), m));
        for (std::size_t w = 0; w < work_blocks.size(); ++w) {
            const int block = work_blocks[w];
            const BlockSpectrum* spec = ctx.aux.spectrum_of(block);
            for (int j = 0; j < spec->l(); ++j)
                for (std::size_t v = 0; v < variants.size(); ++v)
                    out[v].functions[offsets[w] + j] =
                        emit(solver, block, j, variants[v], m);
        }
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t w = next.fetch_add(1);
            if (w >= work_blocks.size()) return;
            const int block = work_blocks[w];
            try {
                const int m = m_per_block[block];
                PatchSolver solver(ctx, oversample(ctx.grid, ctx.mesh, block, m));
                const BlockSpectrum* spec = ctx.aux.spectrum_of(block);
                for (int j = 0; j < spec->l(); ++j)
                    for (std::size_t v = 0; v < variants.size(); ++v)
                        out[v].functions[offsets[w] + j] =
                            emit(solver, block, j, variants[v], m);
            } catch (const SingularConstraintBlock& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::make_exception_ptr(SingularConstraintBlock(
                        "block " + std::to_string(block) + ": " + e.what()));
                return;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

MsBasisSet build_basis_set(const MsContext& ctx, const std::vector<int>& m_per_block,
                           Variant variant, int threads) {
    return std::move(build_basis_sets(ctx, m_per_block, {variant}, threads).front());
}

MsBasisSet build_basis_set(const MsContext& ctx, int m, Variant variant,
                           int threads) {
    const int eff = is_global(variant) ? saturating_layers(ctx.grid) : m;
    std::vector<int> m_per_block(ctx.grid.blocks.size(), eff);
    return build_basis_set(ctx, m_per_block, variant, threads);
}

} // namespace cemperf
