#include "cemperf/aux_space.hpp"
#include "cemperf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cemperf {

namespace {

int local_index(const std::vector<int>& sorted_nodes, int global) {
    const auto it = std::lower_bound(sorted_nodes.begin(), sorted_nodes.end(), global);
    return int(it - sorted_nodes.begin());
}

} // namespace

std::pair<DenseMatrix, DenseMatrix> local_matrices(const CoarseGrid& grid,
                                                   const TriMesh& mesh,
                                                   const std::vector<double>& kappa_tilde,
                                                   int block) {
    const CoarseBlock& b = grid.blocks[block];
    if (b.empty)
        throw InvalidArgument("local_matrices: block is EMPTY (fully perforated)");
    const int n = int(b.nodes.size());
    DenseMatrix A(n, n), S(n, n);

    for (int t : b.triangles) {
        const auto& tri = mesh.triangles[t];
        const Vec2& p0 = mesh.nodes[tri[0]];
        const Vec2& p1 = mesh.nodes[tri[1]];
        const Vec2& p2 = mesh.nodes[tri[2]];
        const double area = mesh.triangle_area(t);
        const std::array<double, 3> bb = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
        const std::array<double, 3> cc = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
        const double inv4A = 1.0 / (4.0 * area);
        const double mw = kappa_tilde[t] * area / 12.0;

        std::array<int, 3> loc;
        for (int v = 0; v < 3; ++v) loc[v] = local_index(b.nodes, tri[v]);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                A.at(loc[i], loc[j]) += (bb[i] * bb[j] + cc[i] * cc[j]) * inv4A;
                S.at(loc[i], loc[j]) += mw * (i == j ? 2.0 : 1.0);
            }
        }
    }
    return {std::move(A), std::move(S)};
}

EigenPairs solve_local_spectral(const DenseMatrix& A_i, const DenseMatrix& S_i,
                                int l) {
    EigenPairs pairs = generalized_symmetric_eig(A_i, S_i, l);
    const double scale = std::max(1.0, std::abs(pairs.values.back()));
    for (double& v : pairs.values) {
        if (std::abs(v) <= 1e-10 * scale) v = 0.0;
    }
    return pairs;
}

AuxSpace build_aux_space(const TriMesh& mesh, const CoarseGrid& grid,
                         const std::vector<double>& kappa_tilde, int l) {
    if (l < 1) throw InvalidArgument("build_aux_space: need l >= 1");
    std::vector<int> l_per_block(grid.blocks.size(), l);
    return build_aux_space(mesh, grid, kappa_tilde, l_per_block);
}

AuxSpace build_aux_space(const TriMesh& mesh, const CoarseGrid& grid,
                         const std::vector<double>& kappa_tilde,
                         const std::vector<int>& l_per_block) {
    if (l_per_block.size() != grid.blocks.size())
        throw InvalidArgument("build_aux_space: l_per_block length mismatch");

    AuxSpace aux;
    aux.block_to_entry.assign(grid.blocks.size(), -1);
    for (std::size_t b = 0; b < grid.blocks.size(); ++b) {
        if (grid.blocks[b].empty || l_per_block[b] == 0) continue;
        const int l = l_per_block[b];
        if (l < 0 || l > int(grid.blocks[b].nodes.size()))
            throw InvalidArgument("build_aux_space: block eigenfunction count "
                                  "outside [0, block dimension]");

        auto [A_i, S_i] = local_matrices(grid, mesh, kappa_tilde, int(b));
        EigenPairs pairs = solve_local_spectral(A_i, S_i, l);

        BlockSpectrum spec;
        spec.block = int(b);
        spec.nodes = grid.blocks[b].nodes;
        spec.eigenvalues = std::move(pairs.values);
        spec.eigenvectors = std::move(pairs.vectors);
        spec.s_rows.resize(l);
        const int n = S_i.n_rows;
        for (int j = 0; j < l; ++j) {
            spec.s_rows[j].assign(n, 0.0);
            for (int r = 0; r < n; ++r) {
                double s = 0.0;
                for (int c = 0; c < n; ++c)
                    s += S_i.at(r, c) * spec.eigenvectors.at(c, j);
                spec.s_rows[j][r] = s;
            }
        }

        aux.block_to_entry[b] = int(aux.entries.size());
        aux.coefficient_offset.push_back(aux.total);
        aux.total += l;
        aux.entries.push_back(std::move(spec));
    }
    return aux;
}

std::vector<double> project_pi(const AuxSpace& aux, const ScalarField& v) {
    std::vector<double> coeffs(aux.total, 0.0);
    for (std::size_t e = 0; e < aux.entries.size(); ++e) {
        const BlockSpectrum& spec = aux.entries[e];
        const int off = aux.coefficient_offset[e];
        for (int j = 0; j < spec.l(); ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < spec.nodes.size(); ++r)
                s += spec.s_rows[j][r] * v[spec.nodes[r]];
            coeffs[off + j] = s;
        }
    }
    return coeffs;
}

BrokenField reconstruct_pi(const AuxSpace& aux, const std::vector<double>& coeffs) {
    if (int(coeffs.size()) != aux.total)
        throw InvalidArgument("reconstruct_pi: coefficient length mismatch");
    BrokenField out;
    out.parts.resize(aux.entries.size());
    for (std::size_t e = 0; e < aux.entries.size(); ++e) {
        const BlockSpectrum& spec = aux.entries[e];
        const int n = spec.eigenvectors.n_rows;
        const int off = aux.coefficient_offset[e];
        out.parts[e].assign(n, 0.0);
        for (int j = 0; j < spec.l(); ++j) {
            const double c = coeffs[off + j];
            if (c == 0.0) continue;
            for (int r = 0; r < n; ++r)
                out.parts[e][r] += c * spec.eigenvectors.at(r, j);
        }
    }
    return out;
}

std::vector<double> project_pi(const AuxSpace& aux, const BrokenField& v) {
    if (v.parts.size() != aux.entries.size())
        throw InvalidArgument("project_pi: broken field shape mismatch");
    std::vector<double> coeffs(aux.total, 0.0);
    for (std::size_t e = 0; e < aux.entries.size(); ++e) {
        const BlockSpectrum& spec = aux.entries[e];
        const std::vector<double>& part = v.parts[e];
        const int off = aux.coefficient_offset[e];
        for (int j = 0; j < spec.l(); ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < part.size(); ++r)
                s += spec.s_rows[j][r] * part[r];
            coeffs[off + j] = s;
        }
    }
    return coeffs;
}

double aux_norm_sq(const std::vector<double>& coeffs) {
    double s = 0.0;
    for (double c : coeffs) s += c * c;
    return s;
}

ScalarField scatter_sum(const AuxSpace& aux, const BrokenField& v,
                        std::size_t n_nodes) {
    if (v.parts.size() != aux.entries.size())
        throw InvalidArgument("scatter_sum: broken field shape mismatch");
    ScalarField out(n_nodes, 0.0);
    for (std::size_t e = 0; e < aux.entries.size(); ++e) {
        const BlockSpectrum& spec = aux.entries[e];
        for (std::size_t r = 0; r < spec.nodes.size(); ++r)
            out[spec.nodes[r]] += v.parts[e][r];
    }
    return out;
}

ScalarField aux_function_field(const AuxSpace& aux, int block, int j,
                               std::size_t n_nodes) {
    const BlockSpectrum* spec = aux.spectrum_of(block);
    if (spec == nullptr || j < 0 || j >= spec->l())
        throw InvalidArgument("aux_function_field: no such auxiliary function");
    ScalarField out(n_nodes, 0.0);
    for (std::size_t r = 0; r < spec->nodes.size(); ++r)
        out[spec->nodes[r]] = spec->eigenvectors.at(int(r), j);
    return out;
}

std::string spectrum_csv(const AuxSpace& aux) {
    int l_max = 0;
    for (const BlockSpectrum& spec : aux.entries) l_max = std::max(l_max, spec.l());
    std::string out = "block";
    for (int j = 1; j <= l_max; ++j) out += ",lambda_" + std::to_string(j);
    out += "\r\n";
    char buf[64];
    for (const BlockSpectrum& spec : aux.entries) {
        out += std::to_string(spec.block);
        for (int j = 0; j < spec.l(); ++j) {
            std::snprintf(buf, sizeof(buf), ",%.12g", spec.eigenvalues[j]);
            out += buf;
        }
        for (int j = spec.l(); j < l_max; ++j) out += ",";
        out += "\r\n";
    }
    return out;
}

} // namespace cemperf
