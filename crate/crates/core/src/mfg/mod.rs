//! Lagrangian mean field game on trajectories: atomic measures and their
//! pushforwards, exact Wasserstein-1 distances, nonlocal couplings, and a
//! fictitious-play search for relaxed equilibria.

mod coupling;
mod measure;
mod play;
mod w1;

pub use coupling::{
    coupling_eval, kernel_sum, monotonicity_check, CouplingKind, CouplingSpec, CustomCoupling, FrozenCost,
    MonotonicityReport,
};
pub use measure::{pushforward_at, AtomicMeasure, TrajectoryAtom, TrajectoryMeasure};
pub use play::{
    exploitability, fictitious_play, freeze, holder_check, measure_path, mild_solution_extract, stay_put_measure,
    EquilibriumDiagnostics, FpConfig, HolderReport, MfgProblem,
};
pub use w1::wasserstein1;
