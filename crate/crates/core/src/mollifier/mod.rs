//! Delta sequences `rho_n(s) = n rho(n s)` built from a base bump on `[0, 1]`,
//! the smoothed driver and field, and the regime classifier.

mod profile;
mod regime;
mod schedule;
mod smooth;

pub use profile::MollifierProfile;
pub use regime::{
    classify_regime, classify_regime_with, default_classify_meshes, judge_limits, shifted_tail,
    sigma_delta_limit, ClassifyOptions, RegimeReport, SigmaEstimate, SigmaSample, Verdict,
    CAUCHY_TOL,
};
pub use schedule::{Schedule, StepRule};
pub use smooth::{continuous_convolution, jump_convolution, mollify_driver, mollify_field};
