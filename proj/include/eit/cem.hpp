#ifndef EIT_CEM_HPP
#define EIT_CEM_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>

#include "eit/geometry.hpp"
#include "eit/tet_mesh.hpp"

namespace eit {

/// Piecewise-linear nodal conductivity on a TetMesh (S/m). All values must be
/// positive.
struct ConductivityField {
    Eigen::VectorXd values;

    ConductivityField() = default;
    explicit ConductivityField(Eigen::VectorXd v);
    static ConductivityField constant(const TetMesh& mesh, double sigma);
};

/// Applied current patterns and the corresponding electrode voltages.
/// currents: L x K (amperes, mean-free columns); voltages: L x K (volts,
/// mean-free columns).
struct PatternSet {
    Eigen::MatrixXd currents;
    Eigen::MatrixXd voltages;

    int electrode_count() const { return static_cast<int>(currents.rows()); }
    int pattern_count() const { return static_cast<int>(currents.cols()); }

    /// Checks shape agreement and mean-free columns (relative tolerance on
    /// column sums); throws on violation.
    void validate() const;
};

/// Assembled and factorized complete-electrode-model system for one
/// (mesh, conductivity, layout) triple. Discretization: P1 potential and
/// conductivity, electrode voltages appended as unknowns, grounding by a
/// zero-mean constraint on the electrode voltages via one multiplier.
class CemSystem {
  public:
    CemSystem(const TetMesh& mesh, const ConductivityField& sigma,
              const ElectrodeLayout& layout);
    ~CemSystem();
    CemSystem(CemSystem&&) noexcept;
    CemSystem& operator=(CemSystem&&) noexcept;

    struct Result {
        Eigen::MatrixXd voltages;    // L x K, mean-free columns
        Eigen::MatrixXd potentials;  // N x K interior fields
    };

    /// Solves all K patterns against the shared factorization.
    Result solve(const Eigen::MatrixXd& currents) const;

    int node_count() const { return n_nodes_; }
    int electrode_count() const { return n_electrodes_; }

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int n_nodes_ = 0;
    int n_electrodes_ = 0;
};

/// Electrode voltages for the given currents; interior potentials discarded.
PatternSet solve_cem_patterns(const TetMesh& mesh, const ConductivityField& sigma,
                              const ElectrodeLayout& layout, const Eigen::MatrixXd& currents);

/// Sensitivity of the stacked voltages to the nodal conductivities,
/// J((k*L + l), j) = dV^k_l / dsigma_j, from the adjoint formula
/// dV = -integral grad(u_k) . grad(w_l) phi_j dx.
Eigen::MatrixXd jacobian_sigma(const TetMesh& mesh, const ConductivityField& sigma0,
                               const ElectrodeLayout& layout, const Eigen::MatrixXd& currents);

}  // namespace eit

#endif  // EIT_CEM_HPP
