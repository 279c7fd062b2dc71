//! Kernel mean embeddings of finite measures and the topologies they induce
//! on stochastic kernels.
//!
//! A positive semi-definite kernel `k` on the output space embeds every
//! finite signed measure `ν` as `I_ν = ∫ k(·, u) ν(du)` in the RKHS `H_k`;
//! the MMD norm is the RKHS norm of the difference of two embeddings. Lifting
//! this row by row gives two topologies on stochastic kernels `γ: Y → P(U)`:
//!
//! * **strong**: `γ_n → γ` when `∫ |γ_n(y) - γ(y)|_M^q μ(dy) → 0`;
//! * **weak**: `γ_n → γ` when `∫ <γ_n(y), f(y)>_{H_k} μ(dy)` converges for
//!   every RKHS-valued test function `f`.
//!
//! The crate computes both, compares the weak one with the w* and Young
//! narrow topologies, builds the standard counterexample sequences, and runs
//! discounted-cost MDP robustness experiments whose transition perturbations
//! are measured in these topologies.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`measure`] | points, atomic and grid measures, total variation |
//! | [`rkhs`] | Gaussian and Laplacian kernels, MMD inner product and norm |
//! | [`stochastic`] | stochastic kernels, marginals, test functions, pairings |
//! | [`topology`] | strong distance, weak/w*/Young defects, reports |
//! | [`gallery`] | escaping-mass, square-wave, mollified sequences |
//! | [`mdp`] | value iteration, policy evaluation, robustness, model learning |

pub mod error;
pub mod gallery;
pub mod mdp;
pub mod measure;
pub mod rkhs;
pub mod stochastic;
pub mod topology;

pub use error::{Error, Result};
pub use measure::{tv_distance, FiniteMeasure, InputMeasure, Point};
pub use rkhs::{kernel_bound, kernel_eval, mmd_inner, mmd_norm, KernelExpansion, KernelSpec};
pub use stochastic::{
    duality_pairing, marginal_on_set, scalar_pairing, ScalarSection, ScalarTestFunction,
    StochasticKernel, TestFunction,
};
pub use topology::{
    change_input_measure, equivalence_report, strong_kme_distance, tightness_defect,
    weak_kme_defect, wstar_defect, young_defect, ConvergenceReport, Exponent, TestFamilies,
};
