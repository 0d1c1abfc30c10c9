//! Set Membership identification of multi-step prediction models.
//!
//! Given noisy input-output data from a stable SISO LTI plant and a bound on
//! the measurement disturbance, this crate learns one linear predictor per
//! prediction step `p` together with a guaranteed worst-case error bound for
//! each, using linear programming only. Least-squares and iterated one-step
//! baselines are included for comparison, plus generators that reproduce the
//! benchmark data used by the experiment CLI.

pub mod baselines;
pub mod bundle;
pub mod dataset;
pub mod error;
pub mod lp;
pub mod lti;
pub mod par;
pub mod smident;

pub use error::{Error, Result};
