#pragma once

#include <string>
#include <vector>

#include "optomag/banded.hpp"
#include "optomag/fisher.hpp"
#include "optomag/fock.hpp"
#include "optomag/ode.hpp"
#include "optomag/params.hpp"

namespace optomag {

enum class Frame { Lab, Squeezed };
std::string to_string(Frame f);

/// rate * (A rho B^dag - (B^dag A rho + rho B^dag A) / 2); D[o] is A = B = o.
struct Channel {
    std::string name;
    double rate = 0.0;  // rad/s
    BandedOp A, B;
};

struct LindbladSpec {
    SystemParams params;
    DerivedParams derived;
    Frame frame = Frame::Squeezed;
    int cavity_dim = 0;
    int mech_dim = 0;
    BandedOp hamiltonian;  // rad/s, Schrodinger picture of the chosen frame
    std::vector<Channel> channels;

    Dims dims() const { return {cavity_dim, mech_dim}; }
    int dim() const { return cavity_dim * mech_dim; }
    /// Mechanical frequency removed by the interaction picture.
    double frame_frequency() const;
};

/// Dense Hamiltonian (rad/s) on cavity (x) mechanics; constant offsets dropped.
Operator build_hamiltonian(const SystemParams& p, int cavity_dim, int mech_dim, Frame frame);
BandedOp build_hamiltonian_banded(const SystemParams& p, int cavity_dim, int mech_dim, Frame frame);

/// Zero-point offset omega_m (e^{-2r} - 1)/2 between the lab and squeezed Hamiltonians.
double frame_energy_offset(const SystemParams& p);

LindbladSpec make_lindblad_spec(const SystemParams& p, int cavity_dim, int mech_dim, Frame frame);

/// Dense reference right-hand side d rho/dt (1/s) in the Schrodinger picture.
CMat rhs(const LindbladSpec& spec, const CMat& rho);

enum class MechInit { Coherent, Thermal };

/// Mechanical truncation rule 4 n_th + |beta|^2 + 8 e^{2r} + 10.
int lindblad_mech_dim(const SystemParams& p);
/// Cavity truncation with coherent tail below `tail`.
int cavity_dim_for_tail(cplx alpha, double tail);

/// |alpha><alpha| (x) sigma, with sigma squeezed by S(r) in the squeezed frame.
QuantumState initial_state(const SystemParams& p, int cavity_dim, int mech_dim, Frame frame,
                           MechInit init = MechInit::Coherent);

/// (I (x) S^dag(r)) rho_s (I (x) S(r)) evaluated with mechanical truncation `big_dim`.
CMat unsqueeze(const CMat& rho_s, int cavity_dim, int mech_dim, double r, int big_dim);

struct ConservationRecord {
    double t = 0.0;
    double trace_defect = 0.0;
    double hermiticity_defect = 0.0;
    /// Exact minimum eigenvalue when computed, otherwise NaN.
    double min_eigenvalue = 0.0;
    /// rho + 1e-6 I admits a Cholesky factorization.
    bool positivity_certified = false;
    /// Mechanical population in the top 10% of levels.
    double top_population = 0.0;
};

struct EvolutionResult {
    Frame frame = Frame::Squeezed;
    Dims dims;
    std::vector<double> times;
    std::vector<QuantumState> states;         // full states, when requested
    std::vector<QuantumState> cavity_states;  // always
    std::vector<ConservationRecord> log;
    Dop853Stats stats;
};

struct EvolveOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    bool keep_states = true;
    bool interaction_picture = true;
    bool check_positivity = true;
    int exact_eigen_max_dim = 400;
    const std::vector<double>* replay_steps = nullptr;  // dimensionless steps (omega_m t)
};

/// Integrates the master equation and records conservation diagnostics at each checkpoint (s).
EvolutionResult evolve(const LindbladSpec& spec, const QuantumState& rho0, std::vector<double> checkpoints,
                       const EvolveOptions& opt = {});

struct DissipativeOptions {
    Frame frame = Frame::Squeezed;
    MechInit init = MechInit::Coherent;
    int cavity_dim = 0;  // 0 selects the tail rule
    int mech_dim = 0;    // 0 selects lindblad_mech_dim
    double cavity_tail = 1e-9;
    double dB_step = 0.0;
    RVec grid;
    bool convergence_check = false;
    /// Richardson-combine steps dB and dB/2 (four runs); otherwise the dB/2 central difference (two runs).
    bool richardson = true;
    double convergence_tol = 1e-3;
    double richardson_tol = 5e-3;
    double quadrature_tol = 5e-3;
    int threads = 1;
    EvolveOptions evolve;
};

/// Homodyne CFI at each time of `times` under dissipation.
std::vector<FisherReport> cfi_dissipative_series(const SystemParams& p, const std::vector<double>& times,
                                                 double theta, const DissipativeOptions& opt = {});

FisherReport cfi_dissipative(const SystemParams& p, double t, double theta, const DissipativeOptions& opt = {});

struct TimeWindow {
    std::vector<double> times;
    std::vector<double> cfi;
    std::vector<FisherReport> reports;
    double cfi_tau1 = 0.0;
    /// Max |F(t) - F(tau1)| / F(tau1) over |t - tau1| <= 0.05 tau1.
    double flatness = 0.0;
};

/// CFI series around tau1; the grid must span [0.8 tau1, 1.2 tau1] and contain tau1.
TimeWindow cfi_time_window(const SystemParams& p, const std::vector<double>& t_grid, double theta,
                           const DissipativeOptions& opt = {});

/// Uniform grid over [0.8 tau1, 1.2 tau1] with an odd number of points (so tau1 is included).
std::vector<double> default_window_grid(const SystemParams& p, int points = 21);

}  // namespace optomag
