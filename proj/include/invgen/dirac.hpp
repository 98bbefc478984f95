#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "invgen/distribution.hpp"
#include "invgen/invariant_gen.hpp"
#include "invgen/report.hpp"

namespace invgen {

/// n sections spanning a candidate Lagrangian subbundle of TM + T*M.
class DiracStructure {
public:
    DiracStructure(ChartPtr chart, std::vector<PontryaginSection> generators);

    const ChartPtr& chart() const { return sections_.chart(); }
    const std::vector<PontryaginSection>& generators() const { return sections_.generators(); }
    const GeneralizedDistribution& sections() const { return sections_; }
    Eigen::MatrixXd eval(std::span<const double> m) const { return sections_.eval(m); }

private:
    GeneralizedDistribution sections_;
};

/// Rank n and pairwise isotropy at every sample ("dirac.rank", "dirac.isotropy").
Report certify_lagrangian(const DiracStructure& d, const std::vector<Point>& samples, double tol = kDefaultTol);

/// Builds and certifies; throws InvalidInput naming the failed check and point.
DiracStructure make_dirac_structure(ChartPtr chart, std::vector<PontryaginSection> generators,
                                    const std::vector<Point>& samples, double tol = kDefaultTol);

/// Bivector components pi^{ij}.
class PoissonBivector {
public:
    PoissonBivector(ChartPtr chart, std::vector<std::vector<Expr>> components);

    const ChartPtr& chart() const { return chart_; }
    const Expr& operator()(std::size_t i, std::size_t j) const { return components_.at(i).at(j); }
    Eigen::MatrixXd eval(std::span<const double> m) const;

    /// pi^{ij} + pi^{ji} at the samples.
    CheckRecord antisymmetry(const std::vector<Point>& samples, double tol = kDefaultTol) const;

private:
    ChartPtr chart_;
    std::vector<std::vector<Expr>> components_;
};

/// (sharp alpha)^i = sum_j pi^{ij} alpha_j, so sharp df = {f, .}.
VectorField sharp(const PoissonBivector& pi, const OneForm& alpha);

/// Generators (sharp dx^j, dx^j). Throws InvalidInput if pi is not
/// antisymmetric on the probe grid.
DiracStructure graph_of_poisson(const PoissonBivector& pi);

/// Courant brackets of all generator pairs tested for membership in D.
CheckRecord is_closed(const DiracStructure& d, const std::vector<Point>& samples, double tol = kDefaultTol,
                      Execution exec = Execution::Parallel);

/// Column bases of the characteristic distributions at m:
/// G1 = tangent projection of D(m), G0 = {X : (X, 0) in D(m)},
/// P1 = cotangent projection, P0 = {a : (0, a) in D(m)}.
struct CharacteristicBases {
    Eigen::MatrixXd G0, G1, P0, P1;
};
CharacteristicBases characteristic_distributions(const DiracStructure& d, std::span<const double> m,
                                                 double rank_tol = kRankTol);

/// Fundamental vector fields xi_M of a Lie algebra basis.
class InfinitesimalAction {
public:
    /// structure_constants[a][b][c] = c_{ab}^c; empty if not supplied.
    InfinitesimalAction(ChartPtr chart, std::vector<VectorField> generators,
                        std::vector<std::vector<std::vector<double>>> structure_constants = {});

    const ChartPtr& chart() const { return chart_; }
    const std::vector<VectorField>& generators() const { return generators_; }
    std::size_t size() const { return generators_.size(); }
    bool has_structure_constants() const { return !constants_.empty(); }

    /// [xi_a, xi_b] + sum_c c_{ab}^c xi_c at the samples (anti-homomorphism).
    CheckRecord structure_check(const std::vector<Point>& samples, double tol = kDefaultTol) const;

private:
    ChartPtr chart_;
    std::vector<VectorField> generators_;
    std::vector<std::vector<std::vector<double>>> constants_;
};

/// V = span of the fundamental fields, K = V + {0}. K-perp = TM + V-annihilator
/// has no finite generating family here, so membership is a pointwise predicate.
struct VerticalData {
    TangentDistribution V;
    GeneralizedDistribution K;
};
VerticalData vertical_and_K(const InfinitesimalAction& action);

/// True when the form part of w annihilates V(m) within tol.
bool in_K_perp(const InfinitesimalAction& action, std::span<const double> m, const Eigen::VectorXd& w,
               double tol = kDefaultTol);

struct IntersectionBasis {
    Eigen::MatrixXd basis;  // 2n x rank, orthonormal columns
    int rank = 0;
};
/// Pointwise D(m) cap K-perp(m).
IntersectionBasis intersect_D_Kperp(const DiracStructure& d, const InfinitesimalAction& action,
                                    std::span<const double> m, double rank_tol = kRankTol);

/// Rank of D cap K-perp over the samples; on failure the record carries two
/// witness points with different ranks.
CheckRecord constant_rank_scan(const DiracStructure& d, const InfinitesimalAction& action,
                               const std::vector<Point>& samples, double rank_tol = kRankTol);

/// Throws InvalidInput unless the action fields span exactly d/dx^1..d/dx^k at the probes.
void require_foliated_action(const InfinitesimalAction& action, const std::vector<Point>& probes, double tol);

/// Invariant frame of D cap K-perp from a user-supplied independent spanning
/// family, with the descending-section checks appended to the report.
InvariantFrameResult descending_generators(const DiracStructure& d, const InfinitesimalAction& action,
                                           const GeneralizedDistribution& family, const std::vector<Point>& samples,
                                           FoliatedNumerics numerics = {}, Execution exec = Execution::Parallel);

/// Invariant spanning one-forms of the annihilator of V from a spanning family.
InvariantFrameResult invariant_annihilator_generators(const InfinitesimalAction& action,
                                                      const std::vector<OneForm>& family,
                                                      const std::vector<Point>& samples, FoliatedNumerics numerics = {},
                                                      Execution exec = Execution::Parallel);

/// Explicit submersion q : M -> Mbar onto a target chart.
class QuotientMap {
public:
    QuotientMap(ChartPtr source, ChartPtr target, std::vector<Expr> components);

    const ChartPtr& source() const { return source_; }
    const ChartPtr& target() const { return target_; }
    Eigen::VectorXd eval(std::span<const double> m) const;
    /// (n - d) x n.
    Eigen::MatrixXd jacobian(std::span<const double> m) const;

    /// Full-rank Jacobian and dq(xi_M) = 0 at the samples ("quotient.submersion", "quotient.invariance").
    Report validate(const InfinitesimalAction& action, const std::vector<Point>& samples,
                    double tol = kDefaultTol) const;

    /// A point of the source box over ybar, found by Gauss-Newton from `start`.
    std::optional<Point> lift(const Eigen::VectorXd& ybar, const Point& start) const;

private:
    ChartPtr source_;
    ChartPtr target_;
    std::vector<Expr> components_;
    std::vector<std::vector<Expr>> jacobian_;
};

/// Frame values pushed to q(m): Xbar = Jq Z, abar solving gamma = Jq^T abar.
struct PushedFrame {
    Eigen::VectorXd target_point;
    Eigen::MatrixXd values;     // 2(n - d) x r, stacked (Xbar, abar)
    double basic_residual = 0;  // worst relative misfit of gamma = q^* abar
};
PushedFrame push_frame(const QuotientMap& q, const Eigen::MatrixXd& frame_values, std::span<const double> m);

struct PushforwardOptions {
    double tol = kDefaultTol;
    std::size_t fiber_pairs = 10;
    /// Certify closedness of the reduced structure (meaningful when D is closed).
    bool check_closed = true;
};

/// Checks that the descending frame defines a Dirac structure on the target:
/// basic forms, rank n - d, isotropy, the reduced pairing identity, agreement
/// along fibers and, optionally, closedness of the pushed sections.
Report pushforward_check(const DiracStructure& d, const InfinitesimalAction& action, const QuotientMap& q,
                         const InvariantFrameResult& frame, const std::vector<Point>& samples,
                         const PushforwardOptions& options = {}, Execution exec = Execution::Parallel);

/// Points m' = Phi_t(m) on the fiber of m, obtained by integrating the action
/// fields; one per sample and generator in order until `count` pairs exist.
std::vector<std::pair<Point, Point>> same_fiber_pairs(const InfinitesimalAction& action, const QuotientMap& q,
                                                      const std::vector<Point>& samples, std::size_t count);

}  // namespace invgen
