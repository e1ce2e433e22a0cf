//! Resonant normal forms of truncated analytic vector fields.
//!
//! Fields are polynomial vector fields `Σ c x^q ∂_k` over a finite set of
//! modes (plain indices or lattice modes `(j, ±)`), truncated at a scaling
//! degree `D`. The crate finds the resonance module of the linear part,
//! removes the non-resonant part by Lie-series coordinate changes, and checks
//! numerically that the resulting flow is linear on the resonant set `Σ`.
//!
//! Each capability has a runnable example under `examples/`:
//!
//! | example | what it shows |
//! |---|---|
//! | `analyze_dim6` | generators, translates and `M*` for the six-variable model |
//! | `nls_resonance` | the NLS lattice builder and its resonance module |
//! | `homological` | linear and extended homological solves, nilpotency |
//! | `normalize_dim6` | the full iteration with its trace and the elimination oracle |
//! | `conjugacy_scaling` | conjugacy error against the radius, on and off `Σ` |
//! | `diophantine_audit` | the Diophantine scan and the small-divisor weight audit |
//! | `appendix_inequalities` | the weight inequalities on random momentum-conserving pairs |
//! | `hyperbolic_flow` | real and mixed exponents, stable and unstable directions |
//!
//! ```
//! use resonant_nf::builders::dim6_model;
//! use resonant_nf::index::TruncationContext;
//! use resonant_nf::resonance::enumerate_resonance;
//!
//! let model = dim6_model(2f64.sqrt(), 3f64.sqrt()).unwrap();
//! let module = enumerate_resonance(&TruncationContext::finite(6, 6), &model).unwrap();
//! assert_eq!(module.q_generators.len(), 2);
//! assert_eq!(module.m_star_minimal, 4);
//! ```

pub mod builders;
pub mod cli;
pub mod diophantine;
pub mod error;
pub mod field;
pub mod frequency;
pub mod index;
pub mod norm;
pub mod normalform;
pub mod ode;
pub mod problem;
pub mod resonance;
pub mod scalar;
pub mod text;
pub mod verify;

pub use error::{Error, Result};
pub use field::{bracket, VectorField};
pub use frequency::FrequencyModel;
pub use index::{ModeKey, MultiIndex, SignedIndex, TruncationContext};
pub use normalform::{normalize, KamConfig, NormalFormResult, TransformLog};
pub use resonance::{enumerate_resonance, Ideal, ResonanceModule};
pub use scalar::{GaussRational, Scalar};
