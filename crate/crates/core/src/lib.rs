//! Distribution-free confidence bands for convex median regression.
//!
//! Bands are defined through a multiscale sign test: a convex candidate is
//! plausible when the signs of its residuals show no region with
//! suspiciously many positive (or negative) entries.

pub mod approx;
pub mod band;
pub mod calibration;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod geometry;
pub mod multiscale;
pub mod scalar;
pub mod scan;

pub use error::{BandError, Result};
pub use multiscale::{
    beta_coeff, gamma_penalty, kernel_energy, local_stat, max_scale, psi, t_naught, t_two_sided,
    underline_sign, MultiscaleStat, ScalePair, Sign, SignVector,
};
pub use scalar::Scalar;
pub use scan::{scale_condition, scan, FlipChain, ScanOutcome, ScanState, Scanner};
pub use geometry::{
    enumerate_candidates, eval_candidate, eval_tangent_pair, greatest_convex_minorant,
    least_concave_majorant, tangent_params, CandidateLine, Roof, SortedDataset, TangentParams,
    TangentTable,
};
pub use band::{compute_band, concave_band, BandMode, BandResult, KappaSource, Shape};
pub use calibration::{
    get_kappa, kappa_from_sample, simulate_null_sample, KappaRecord, KappaRequest, KappaTable,
    DEFAULT_N_SIMS,
};
pub use exact::{
    band_exact, feasibility_check, lower_exact, lower_exact_brute, upper_exact, upper_exact_brute,
};
pub use approx::{
    approx_lower, approx_upper, approx_upper_with, band_approx, certified_lower, convex_minorant_of,
    default_j_subset, step1_left_degenerate, step2_max_intercept, step3_right_degenerate,
    subset_lower, ApproxBand, ApproxOptions, LowerApprox, SlopeGrid, UpperApprox, DEFAULT_SEGMENTS,
};
pub use experiments::{
    coverage_study, design_points, region_widths, gen_sim_data, piecewise_truth, width_scaling_study,
    CoverageReport, ErrorLaw, SimConfig, Truth,
};
