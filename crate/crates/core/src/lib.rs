//! Incremental distributed LMS (IDLMS) over a ring of sensor nodes, and a
//! two-phase variant that weights each node's step size by an estimate of
//! its observation-noise variance.
//!
//! The crate is organised bottom-up:
//!
//! - [`datagen`]: synthetic data from the linear measurement model
//!   `d_k(i) = u_{k,i} w_o + v_k(i)` and an exact normal-equations oracle.
//! - [`incremental`]: the ring sweep. One estimate travels node to node;
//!   each node applies an LMS correction with its own step size.
//! - [`reliability`]: phase 1 (plain IDLMS plus sample buffering), residual
//!   based noise-variance estimates, the exponential step-size map, phase 2.
//! - [`metrics`]: mean-square deviation, curve averaging, steady-state level
//!   and convergence time.
//! - [`harness`]: configuration, paired Monte-Carlo runs, sweeps and CSV
//!   export. The `idlms` binary is a thin CLI over this module.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod incremental;
pub mod metrics;
pub mod reliability;

pub use error::{Error, Result};

/// Sequential dot product. Accumulation order is index-ascending, which the
/// bit-exactness guarantees of the engine rely on.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}
