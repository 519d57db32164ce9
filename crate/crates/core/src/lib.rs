//! Secure connection probability of direct and relayed links when
//! eavesdroppers and relays form Poisson fields in the plane.
//!
//! * [`analytic`]: closed forms, bounds and the decision thresholds.
//! * [`quadrature`]: numerical evaluation of the expressions without a closed form.
//! * [`montecarlo`]: simulation of the secrecy events themselves.
//! * [`decision`]: the relay-or-not decision.
//! * [`cli`]: the `relaysec` command-line tool.
//!
//! ```
//! use relaysec::analytic::{p_direct_colluding, SystemParams};
//!
//! let params = SystemParams::new(4.0, 1e-5, 1e-3, 20.0)?;
//! assert!((p_direct_colluding(&params) - 0.98046).abs() < 1e-5);
//! # Ok::<(), relaysec::Error>(())
//! ```

pub mod analytic;
pub mod cli;
pub mod decision;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod quadrature;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/colluding.md")]
    mod colluding {}
    #[doc = include_str!("../../../book/src/noncolluding.md")]
    mod noncolluding {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/decision.md")]
    mod decision {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
