#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pricefb/grid.hpp"

namespace pricefb {

/// The two zero-eigenfunctions of the linearized operator: g0 piecewise
/// (x | a | -a), h0 piecewise (1 | 2 | 2). Discontinuous values at |x| = a
/// evaluate to the average of the one-sided limits.
struct KernelBasis {
    ModelParams prm;

    double g0(double x) const;
    double h0(double x) const;
};

KernelBasis kernel_basis(const ModelParams& prm);

/// min{(2pi/(2A-a))^2, (2pi/(2B-a))^2, (pi/a)^2}
double spectral_gap(const ModelParams& prm);

enum class Family { a_site, left_interval, right_interval };

const char* family_name(Family f) noexcept;

struct FamilyTag {
    Family family;
    int n;
};

struct Candidate {
    double alpha;
    std::vector<FamilyTag> tags;
};

/// All alpha in (0, alpha_max] at which a determinant factor of the
/// matching system can vanish: the union of {n pi/a}, {2n pi/(2A-a)},
/// {2n pi/(2B-a)}, n >= 1, ascending, coincidences merged.
std::vector<Candidate> eigenvalue_candidates(const ModelParams& prm, double alpha_max);

enum class Region { left, mid, right };

/// amp_sin*sin(alpha x) + amp_cos*cos(alpha x) on one sub-interval.
struct TrigBranch {
    double amp_sin = 0.0;
    double amp_cos = 0.0;
};

/// One negative eigenvalue mu = -alpha^2 with its eigenspace described by
/// per-interval trig branches (left (-A,-a), mid (-a,a), right (a,B)).
struct EigenPair {
    double alpha = 0.0;
    double mu = 0.0;
    int dim = 0;
    ModelParams prm;
    std::vector<std::array<TrigBranch, 3>> basis;  ///< [k][left, mid, right]
    std::vector<FamilyTag> tags;
    std::optional<int> symmetric_case_id;  ///< set when A = B = 1

    /// Value at x with the outer branch taken at |x| = a exactly.
    double eval(int k, double x) const;
    double eval_branch(int k, Region r, double x) const;
    double deriv_branch(int k, Region r, double x) const;
    /// Closed-form integral of a branch over [lo, hi].
    double branch_mass(int k, Region r, double lo, double hi) const;
    /// (integral over [-A, 0], integral over [0, B]) via antiderivatives.
    std::pair<double, double> side_masses(int k) const;
};

/// Assembles the 4x4 matching system at alpha and returns the eigen pair
/// spanned by its null space, or nullopt when the null space is trivial
/// (relative rank threshold 1e-9).
std::optional<EigenPair> matching_rank(double alpha, const ModelParams& prm);

/// Same computation without the a < min(A,B)/2 parameter check; the
/// operator linearized at an off-center equilibrium has effective lengths
/// A + p0, B - p0 that may violate it while the matching system is still
/// well posed (only A > a and B > a are needed).
std::optional<EigenPair> matching_rank_relaxed(double alpha, const ModelParams& prm);

/// The Neumann-reduced 4x4 matching matrix in the unknowns
/// (c1, c2, d, e); exposed for tests.
Eigen::Matrix4d matching_matrix(double alpha, const ModelParams& prm);

struct CaseEntry {
    double alpha;
    int case_id;  ///< 1..6, or 0 for a candidate with no eigenfunction
    int dim;
};

/// The A = B = 1 classification of the first n_max candidates by the
/// trigonometric predicates (tolerance 1e-9).
std::vector<CaseEntry> classify_symmetric(double a, int n_max);

/// Dense n x n discretization of L: Neumann Laplacian minus hat-deposit
/// coupling scaled by the centered-difference functional g_x(0), plus
/// divided-difference dipole deposits scaled by the interpolation
/// functional g(0). Requires h <= a/8.
Eigen::MatrixXd assemble_discrete_operator(const Grid& g, const ModelParams& prm);

/// k eigenvalues of smallest magnitude from a dense general eigensolve.
std::vector<std::complex<double>> discrete_spectrum(const Eigen::MatrixXd& M, int k);

}  // namespace pricefb
