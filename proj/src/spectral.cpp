#include "pricefb/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace pricefb {

namespace {
constexpr double kRankTol = 1e-9;
constexpr double kPredicateTol = 1e-9;
constexpr double kMergeTol = 1e-9;
}  // namespace

KernelBasis kernel_basis(const ModelParams& prm) {
    validate_params(prm);
    return KernelBasis{prm};
}

double KernelBasis::g0(double x) const {
    if (x < -prm.A || x > prm.B) fail(errc::out_of_domain, "g0: x outside [-A, B]");
    if (x < -prm.a) return -prm.a;
    if (x > prm.a) return prm.a;
    return x;  // continuous at the kinks
}

double KernelBasis::h0(double x) const {
    if (x < -prm.A || x > prm.B) fail(errc::out_of_domain, "h0: x outside [-A, B]");
    // average of the one-sided limits at the jump, with an ulp-scale snap so
    // node-aligned grids sample it exactly
    if (std::abs(std::abs(x) - prm.a) <= 1e-12 * std::max(1.0, prm.a)) return 1.5;
    return (std::abs(x) < prm.a) ? 1.0 : 2.0;
}

double spectral_gap(const ModelParams& prm) {
    validate_params(prm);
    const double pi = M_PI;
    const double ga = 2.0 * pi / (2.0 * prm.A - prm.a);
    const double gb = 2.0 * pi / (2.0 * prm.B - prm.a);
    const double gc = pi / prm.a;
    const double g = std::min({ga, gb, gc});
    return g * g;
}

const char* family_name(Family f) noexcept {
    switch (f) {
        case Family::a_site: return "a";
        case Family::left_interval: return "2A-a";
        case Family::right_interval: return "2B-a";
    }
    return "?";
}

std::vector<Candidate> eigenvalue_candidates(const ModelParams& prm, double alpha_max) {
    validate_params(prm);
    if (!(alpha_max > 0.0)) fail(errc::invalid_params, "alpha_max must be positive");
    struct Seed {
        Family family;
        double base;
    };
    const Seed seeds[3] = {{Family::a_site, M_PI / prm.a},
                           {Family::left_interval, 2.0 * M_PI / (2.0 * prm.A - prm.a)},
                           {Family::right_interval, 2.0 * M_PI / (2.0 * prm.B - prm.a)}};
    std::vector<Candidate> out;
    for (const auto& s : seeds) {
        for (int n = 1;; ++n) {
            const double alpha = n * s.base;
            if (alpha > alpha_max * (1.0 + 1e-12)) break;
            out.push_back({alpha, {{s.family, n}}});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Candidate& l, const Candidate& r) { return l.alpha < r.alpha; });
    std::vector<Candidate> merged;
    for (auto& c : out) {
        if (!merged.empty() && std::abs(c.alpha - merged.back().alpha) <= kMergeTol * c.alpha) {
            merged.back().tags.push_back(c.tags.front());
        } else {
            merged.push_back(std::move(c));
        }
    }
    return merged;
}

Eigen::Matrix4d matching_matrix(double alpha, const ModelParams& prm) {
    const double a = prm.a, A = prm.A, B = prm.B;
    const double sa = std::sin(alpha * a), ca = std::cos(alpha * a);
    const double cB = std::cos(alpha * (B - a)), sB = std::sin(alpha * (B - a));
    const double cA = std::cos(alpha * (A - a)), sA = std::sin(alpha * (A - a));
    Eigen::Matrix4d M;
    // unknowns (c1, c2, d, e):
    //   g = c1 sin(ax) + c2 cos(ax) on (-a, a);  d cos(a(B-x)) on (a, B);
    //   e cos(a(x+A)) on (-A, -a).
    // rows: value jump at +a, value jump at -a, derivative jump at +a,
    // derivative jump at -a (derivative rows divided by alpha).
    M << -sa, -ca - 1.0, cB, 0.0,
         -sa, ca + 1.0, 0.0, -cA,
         1.0 - ca, sa, sB, 0.0,
         ca - 1.0, sa, 0.0, sA;
    return M;
}

namespace {

std::array<TrigBranch, 3> branches_from_coeffs(double alpha, const ModelParams& prm,
                                               const Eigen::Vector4d& v) {
    const double c1 = v[0], c2 = v[1], d = v[2], e = v[3];
    std::array<TrigBranch, 3> b{};
    b[1] = {c1, c2};                                                        // mid
    b[2] = {d * std::sin(alpha * prm.B), d * std::cos(alpha * prm.B)};      // right
    b[0] = {-e * std::sin(alpha * prm.A), e * std::cos(alpha * prm.A)};     // left
    return b;
}

void normalize_branches(std::array<TrigBranch, 3>& b) {
    double mx = 0.0;
    for (const auto& br : b) mx = std::max({mx, std::abs(br.amp_sin), std::abs(br.amp_cos)});
    if (mx == 0.0) return;
    double lead = 0.0;
    for (const auto& br : b) {
        for (double amp : {br.amp_sin, br.amp_cos}) {
            if (std::abs(amp) == mx) {
                lead = amp;
                break;
            }
        }
        if (lead != 0.0) break;
    }
    const double scale = (lead < 0.0 ? -1.0 : 1.0) / mx;
    for (auto& br : b) {
        br.amp_sin *= scale;
        br.amp_cos *= scale;
    }
}

std::vector<FamilyTag> family_tags_for(double alpha, const ModelParams& prm) {
    std::vector<FamilyTag> tags;
    const double bases[3] = {M_PI / prm.a, 2.0 * M_PI / (2.0 * prm.A - prm.a),
                             2.0 * M_PI / (2.0 * prm.B - prm.a)};
    const Family fams[3] = {Family::a_site, Family::left_interval, Family::right_interval};
    for (int k = 0; k < 3; ++k) {
        const int n = static_cast<int>(std::lround(alpha / bases[k]));
        if (n >= 1 && std::abs(alpha - n * bases[k]) <= 1e-9 * alpha) {
            tags.push_back({fams[k], n});
        }
    }
    return tags;
}

int classify_one(double alpha, double a) {
    const double ca1 = std::cos(alpha), sa1 = std::sin(alpha);
    const double saa = std::sin(alpha * a), caa = std::cos(alpha * a);
    const auto near = [](double v, double target) { return std::abs(v - target) <= kPredicateTol; };
    if (near(ca1, 0.0)) {
        if (!near(saa, 0.0)) return 0;  // scheme: no solutions
        return near(caa, 1.0) ? 1 : 2;
    }
    if (near(saa, 0.0)) {
        if (near(caa, -1.0)) return 3;
        return near(sa1, 0.0) ? 5 : 4;
    }
    return 6;
}

int case_dim(int case_id) {
    switch (case_id) {
        case 1: case 3: case 4: return 1;
        case 2: case 5: case 6: return 2;
        default: return 0;
    }
}

}  // namespace

std::optional<EigenPair> matching_rank(double alpha, const ModelParams& prm) {
    validate_params(prm);
    return matching_rank_relaxed(alpha, prm);
}

std::optional<EigenPair> matching_rank_relaxed(double alpha, const ModelParams& prm) {
    if (!(alpha > 0.0)) fail(errc::invalid_params, "matching_rank needs alpha > 0");
    if (!(prm.A > prm.a && prm.B > prm.a)) {
        fail(errc::invalid_params, "matching system needs A > a and B > a");
    }
    const Eigen::Matrix4d M = matching_matrix(alpha, prm);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double thresh = kRankTol * sv[0];
    int dim = 0;
    for (int i = 0; i < 4; ++i) {
        if (sv[i] <= thresh) ++dim;
    }
    if (dim == 0) return std::nullopt;

    EigenPair pair;
    pair.alpha = alpha;
    pair.mu = -alpha * alpha;
    pair.dim = dim;
    pair.prm = prm;
    pair.tags = family_tags_for(alpha, prm);
    for (int k = 0; k < dim; ++k) {
        const Eigen::Vector4d v = svd.matrixV().col(3 - k);
        auto b = branches_from_coeffs(alpha, prm, v);
        normalize_branches(b);
        pair.basis.push_back(b);
    }
    if (std::abs(prm.A - 1.0) <= 1e-12 && std::abs(prm.B - 1.0) <= 1e-12) {
        pair.symmetric_case_id = classify_one(alpha, prm.a);
    }
    return pair;
}

double EigenPair::eval_branch(int k, Region r, double x) const {
    if (k < 0 || k >= dim) fail(errc::index_out_of_range, "eigenfunction basis index");
    const TrigBranch& b = basis[k][static_cast<int>(r)];
    return b.amp_sin * std::sin(alpha * x) + b.amp_cos * std::cos(alpha * x);
}

double EigenPair::deriv_branch(int k, Region r, double x) const {
    if (k < 0 || k >= dim) fail(errc::index_out_of_range, "eigenfunction basis index");
    const TrigBranch& b = basis[k][static_cast<int>(r)];
    return alpha * (b.amp_sin * std::cos(alpha * x) - b.amp_cos * std::sin(alpha * x));
}

double EigenPair::eval(int k, double x) const {
    if (x < -prm.A || x > prm.B) fail(errc::out_of_domain, "eigenfunction eval outside [-A, B]");
    // average of the one-sided limits at the jump points, so sampled
    // eigenfunctions keep their zero side masses to O(h^2) under trapezoid
    const double snap = 1e-12 * std::max(1.0, prm.a);
    if (std::abs(x + prm.a) <= snap) {
        return 0.5 * (eval_branch(k, Region::left, x) + eval_branch(k, Region::mid, x));
    }
    if (std::abs(x - prm.a) <= snap) {
        return 0.5 * (eval_branch(k, Region::mid, x) + eval_branch(k, Region::right, x));
    }
    if (x < -prm.a) return eval_branch(k, Region::left, x);
    if (x > prm.a) return eval_branch(k, Region::right, x);
    return eval_branch(k, Region::mid, x);
}

double EigenPair::branch_mass(int k, Region r, double lo, double hi) const {
    if (k < 0 || k >= dim) fail(errc::index_out_of_range, "eigenfunction basis index");
    const TrigBranch& b = basis[k][static_cast<int>(r)];
    const auto anti = [&](double x) {
        return (-b.amp_sin * std::cos(alpha * x) + b.amp_cos * std::sin(alpha * x)) / alpha;
    };
    return anti(hi) - anti(lo);
}

std::pair<double, double> EigenPair::side_masses(int k) const {
    const double left = branch_mass(k, Region::left, -prm.A, -prm.a) +
                        branch_mass(k, Region::mid, -prm.a, 0.0);
    const double right = branch_mass(k, Region::mid, 0.0, prm.a) +
                         branch_mass(k, Region::right, prm.a, prm.B);
    return {left, right};
}

std::vector<CaseEntry> classify_symmetric(double a, int n_max) {
    if (!(a > 0.0 && a < 0.5)) fail(errc::invalid_params, "classify_symmetric needs 0 < a < 1/2");
    if (n_max < 1) fail(errc::invalid_params, "n_max must be >= 1");
    const ModelParams prm{1.0, 1.0, a, 1.0};
    // grow alpha_max until enough merged candidates exist
    double alpha_max = n_max * M_PI / a;
    std::vector<Candidate> cands = eigenvalue_candidates(prm, alpha_max);
    while (static_cast<int>(cands.size()) < n_max) {
        alpha_max *= 2.0;
        cands = eigenvalue_candidates(prm, alpha_max);
    }
    std::vector<CaseEntry> out;
    for (int i = 0; i < n_max; ++i) {
        const int id = classify_one(cands[i].alpha, a);
        out.push_back({cands[i].alpha, id, case_dim(id)});
    }
    return out;
}

Eigen::MatrixXd assemble_discrete_operator(const Grid& g, const ModelParams& prm) {
    validate_params(prm);
    const int n = g.size();
    const double h = g.spacing();
    if (h > prm.a / 8.0) {
        fail(errc::invalid_params, "grid under-resolves a: need h <= a/8");
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    const double w = 1.0 / (h * h);
    M(0, 0) = -2.0 * w;
    M(0, 1) = 2.0 * w;
    for (int i = 1; i < n - 1; ++i) {
        M(i, i - 1) = w;
        M(i, i) = -2.0 * w;
        M(i, i + 1) = w;
    }
    M(n - 1, n - 2) = 2.0 * w;
    M(n - 1, n - 1) = -2.0 * w;

    const GridFunction dm = deposit_delta(g, -prm.a, 1.0);
    const GridFunction dp = deposit_delta(g, prm.a, 1.0);
    const auto slope_row = derivative_weights(g, 0.0, 1);
    for (int i = 0; i < n; ++i) {
        const double u = dm.values[i] - dp.values[i];
        if (u == 0.0) continue;
        for (const auto& [j, wj] : slope_row) M(i, j) -= u * wj;
    }

    // dipole = divided difference of adjacent hat deposits, the adjoint of
    // the centered-difference evaluation functional
    auto dipole = [&](double c) {
        const GridFunction l = deposit_delta(g, c - h, 1.0);
        const GridFunction r = deposit_delta(g, c + h, 1.0);
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i) v[i] = (l.values[i] - r.values[i]) / (2.0 * h);
        return v;
    };
    const std::vector<double> em = dipole(-prm.a);
    const std::vector<double> ep = dipole(prm.a);
    const auto value_row = interpolation_weights(g, 0.0);
    for (int i = 0; i < n; ++i) {
        const double v = em[i] - ep[i];
        if (v == 0.0) continue;
        for (const auto& [j, wj] : value_row) M(i, j) += v * wj;
    }
    return M;
}

std::vector<std::complex<double>> discrete_spectrum(const Eigen::MatrixXd& M, int k) {
    if (M.rows() != M.cols()) fail(errc::invalid_params, "discrete_spectrum needs a square matrix");
    if (k < 1 || k > M.rows()) fail(errc::index_out_of_range, "k must be in [1, n]");
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    if (es.info() != Eigen::Success) {
        fail(errc::convergence_failure, "dense eigensolver did not converge");
    }
    std::vector<std::complex<double>> ev(M.rows());
    for (int i = 0; i < M.rows(); ++i) ev[i] = es.eigenvalues()[i];
    std::sort(ev.begin(), ev.end(),
              [](const std::complex<double>& l, const std::complex<double>& r) {
                  return std::abs(l) < std::abs(r);
              });
    ev.resize(k);
    return ev;
}

}  // namespace pricefb
