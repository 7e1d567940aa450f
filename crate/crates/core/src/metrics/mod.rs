//! Curvature and representation diagnostics.

mod alignment;
mod function;
mod hessian;
mod lanczos;
mod movement;
mod probes;
mod spectrum;

pub use alignment::{activation_kernel, cka, kta, AlignmentReport, MatrixNorm};
pub use function::{function_agreement, pearson, spearman, FunctionAgreement};
pub use hessian::{dense_hessian, gauss_newton_vp, hvp, residual_vp, Curvature, HessianContext};
pub use lanczos::{default_iters, lanczos_topk};
pub use movement::weight_movement;
pub use probes::{KtaProbe, MovementProbe, SharpnessProbe};
pub use spectrum::{sharpness_probe, SpectrumOptions, SpectrumReport};
