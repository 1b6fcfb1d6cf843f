//! Diagnostics for the location of the essential spectrum: Zhislin test
//! vectors, exterior lower bounds, commutator decay of scaled cutoffs and
//! the form inequality chain.

mod commutator;
mod cutoff;
mod form;
mod zhislin;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::DiscretizationError;

pub use commutator::{
    commutator_decay, direct_commutator, AssembledCommutator, CommutatorEstimate, RESOLVENT_TOL,
};
pub use cutoff::CutoffFamily;
pub use form::{form_inequality_check, FormReport, FORM_RTOL};
pub use zhislin::{
    discrete_wavevector, discreteness_certificate, essential_spectrum_probe, make_zhislin_vector,
    shifted_residual, BoundMode, ZhislinEntry, ZhislinReport, ZhislinVector, MONOTONE_BAND,
};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("shell R = {radius} with width {width} does not fit in half-width {half_width}")]
    SupportExceedsBox {
        radius: f64,
        width: f64,
        half_width: f64,
    },
    #[error("width {width} is below the resolvable minimum {min_width}")]
    WidthUnresolved { width: f64, min_width: f64 },
    #[error("wavevector has {found} components, grid has {expected} dimensions")]
    WavevectorDimension { expected: usize, found: usize },
    #[error("candidate λ = {0} is negative")]
    NegativeLambda(f64),
    #[error("λ = {lambda} lies above the top {top} of the discrete band")]
    OutsideBand { lambda: f64, top: f64 },
    #[error("{radii} radii but {widths} widths")]
    WidthCount { radii: usize, widths: usize },
    #[error("potential is not claimed nonnegative")]
    NotNonnegative,
    #[error("at least one probe is required")]
    NoProbes,
    #[error("cutoff scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("cutoff shell for q = {scale} reaches past half-width {half_width}")]
    ScaleBeyondBox { scale: f64, half_width: f64 },
    #[error("resolvent solve at q = {scale} stalled at relative residual {residual:.3e}")]
    SolveFailed { scale: f64, residual: f64 },
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Positive exterior bound respected by the measured residual: no unit
    /// vector outside the ball comes closer to `λ` than the bound.
    Excluded,
    /// A measured residual fell below a positive bound.
    BoundViolated,
    /// Bounds grow with the radius and end positive.
    DiscreteCertified,
    /// Bounds fail to grow with the radius.
    NonConfining,
    /// Residuals shrink monotonically as the shell widens.
    EssentialCandidate,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Excluded => "excluded",
            Verdict::BoundViolated => "bound_violated",
            Verdict::DiscreteCertified => "discrete_certified",
            Verdict::NonConfining => "non_confining",
            Verdict::EssentialCandidate => "essential_candidate",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Mixes a base seed with job coordinates (splitmix64 finalizer), so probe
/// streams do not depend on scheduling order.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    let mut z = seed;
    for &c in coords {
        z = z
            .wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(c.wrapping_mul(0xd6e8_feb8_6659_fd93));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Flat export row shared by all probe kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub lambda: Option<f64>,
    pub radius_or_scale: f64,
    pub residual: f64,
    pub lower_bound: Option<f64>,
    pub verdict: String,
}

pub fn zhislin_rows(reports: &[ZhislinReport]) -> Vec<ProbeRow> {
    reports
        .iter()
        .flat_map(|r| {
            r.entries.iter().map(move |e| ProbeRow {
                lambda: Some(r.candidate_lambda),
                radius_or_scale: e.radius,
                residual: e.residual,
                lower_bound: e.lower_bound,
                verdict: e.verdict.as_str().to_string(),
            })
        })
        .collect()
}

/// Rows for commutator estimates; the verdict records whether the estimate
/// shrank from the previous scale.
pub fn commutator_rows(estimates: &[CommutatorEstimate]) -> Vec<ProbeRow> {
    estimates
        .iter()
        .enumerate()
        .map(|(i, e)| ProbeRow {
            lambda: None,
            radius_or_scale: e.scale,
            residual: e.estimate,
            lower_bound: None,
            verdict: match i {
                0 => "baseline",
                _ if e.estimate < estimates[i - 1].estimate => "decaying",
                _ => "not_decaying",
            }
            .to_string(),
        })
        .collect()
}

pub fn write_rows_json<W: Write>(rows: &[ProbeRow], w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(w, rows).map_err(io::Error::other)
}

pub fn write_rows_csv<W: Write>(rows: &[ProbeRow], mut w: W) -> io::Result<()> {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.15e}")).unwrap_or_default();
    writeln!(w, "lambda,radius_or_scale,residual,lower_bound,verdict")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.15e},{:.15e},{},{}",
            opt(r.lambda),
            r.radius_or_scale,
            r.residual,
            opt(r.lower_bound),
            r.verdict
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let a = derive_seed(1, &[0, 0]);
        assert_ne!(a, derive_seed(1, &[0, 1]));
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 0]));
        assert_eq!(a, derive_seed(1, &[0, 0]));
    }

    #[test]
    fn csv_rows() {
        let rows = vec![ProbeRow {
            lambda: Some(1.0),
            radius_or_scale: 2.0,
            residual: 0.5,
            lower_bound: None,
            verdict: "inconclusive".into(),
        }];
        let mut buf = Vec::new();
        write_rows_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "1.000000000000000e0,2.000000000000000e0,5.000000000000000e-1,,inconclusive"
        );
    }
}
