//! Rate-function computations for dense stochastic block models.
//!
//! The crate works with step-function graphons (exact rational block widths,
//! float block values) and provides:
//!
//! - densities, entropies, cut-norm distances and operator norms on step
//!   graphons ([`graphon`], [`cutnorm`], [`opnorm`]);
//! - the scalar convex-minorant analysis of `h_p(x^{1/d})` driving the
//!   symmetric/broken phase classification ([`psi`]);
//! - the symmetric variational problem, rate brackets and explicit
//!   symmetry-breaking witnesses ([`solver`], [`witness`]);
//! - block-model sampling with counter-based reproducible streams, exact
//!   tail enumeration and conditional-structure statistics ([`sampler`]);
//! - file formats and report serialization ([`io`]).

pub mod cutnorm;
pub mod error;
pub mod graph;
pub mod graphon;
pub mod io;
pub mod opnorm;
pub mod psi;
pub mod rng;
pub mod sampler;
pub mod solver;
pub mod witness;

pub use cutnorm::{DeltaBounds, cut_norm_distance, cut_norm_lower_bound, delta_cut_bounds};
pub use error::{Error, Result};
pub use graph::FiniteGraph;
pub use graphon::{
    BlockTag, OmegaMask, RelevantSet, StepGraphon, common_refinement, d_average, f_max_graphon,
    hom_density, in_omega, in_omega_tol, labeled_density, relative_entropy, relative_entropy_tol,
    relevant_blocks,
};
pub use opnorm::operator_norm;
pub use psi::{
    ConvexityClass, PsiProfile, analyze_psi, bernoulli_kl, limit_entropy_ratio, minorant_value,
    on_minorant, p_zero, psi_eval,
};
pub use rng::CounterRng;
pub use sampler::{
    ConcentrationSummary, SampledGraph, TailEstimate, TailMode, conditional_concentration,
    empirical_density, exact_tail, sample_graph, tail_estimate,
};
pub use solver::{
    ConstraintKind, Phase, PhaseScanRow, PhiBracket, Regime, SolveOptions, VariationalSolution,
    bipartite_phase, phase_scan, phi_bracket, symmetric_min, symmetric_min_opnorm,
};
pub use witness::{
    GepsPoint, GepsSweep, PlantedCase, Witness, WitnessTag, geps_sweep, witness_clique,
    witness_geps, witness_planted,
};
