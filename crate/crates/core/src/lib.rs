//! Finite-horizon mean-field stochastic LQ control with an asset state `x`
//! and a liability state `y`: Riccati solvers, feedback policies, Monte Carlo
//! simulation, the asset-liability application and an exact scenario-tree
//! oracle.

pub mod alm;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod oracle;
pub mod policy;
pub mod random;
pub mod riccati;
pub mod simulate;

pub use alm::{
    alm_gains, alm_optimal_value, alm_strategy, expected_terminal_equity, lift_to_multinoise,
    pinv_rank_one, solve_alm_riccati, AlmProblem, AlmRiccati,
};
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use model::{
    validate_problem, BaseProblem, InitialMoments, MultiNoiseProblemSpec, NoiseChannels,
    ProblemSpec, ScalarNoise, ValidationReport,
};
pub use noise::{FiniteLaw, InitSampler, NoiseSampler, SamplerKind};
pub use oracle::{assemble_quadratic, brute_force_optimal, build_tree, check_theta2_psd, ScenarioTree, StackedQuadratic};
pub use policy::{build_policy, control_action, expected_trajectory, optimal_cost, ExpectedTrajectory, FeedbackPolicy};
pub use riccati::{solve_p_form, solve_riccati, solve_riccati_multinoise, PFormSolution, RiccatiSolution};
pub use simulate::{estimate_cost, simulate_closed_loop, SimulationResult};
