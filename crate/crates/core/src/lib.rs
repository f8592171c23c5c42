//! Normal power-series (NPS) distributions.
//!
//! An NPS variable is the maximum of a random number N of i.i.d. normal
//! draws, with N following a zero-truncated power-series law (geometric,
//! Poisson, logarithmic, binomial, negative binomial). The crate provides
//! evaluation and sampling ([`NpsModel`]), moments by quadrature and by the
//! order-statistic series ([`moments`]), and maximum-likelihood fitting by
//! direct optimization or EM with Louis standard errors ([`inference`]).

pub mod distribution;
pub mod error;
pub mod inference;
pub mod moments;
pub mod oracle;
pub mod power_series;
pub mod quad;
pub mod roots;
pub mod special;

pub use distribution::{limit_theta_zero_cdf, NpsModel};
pub use error::{NpsError, Result};
pub use power_series::{Family, ThetaDomain};
