use serde::{Deserialize, Serialize};

use super::{ProbeError, Verdict};
use crate::discretization::{assemble_hamiltonian, restrict, Grid, GridOperator};
use crate::par;
use crate::potential::Potential;

/// Complex grid vector as two real parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ZhislinVector {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ZhislinVector {
    pub fn norm(&self) -> f64 {
        (par::dot(&self.re, &self.re) + par::dot(&self.im, &self.im)).sqrt()
    }
}

/// Bump `exp(1 − 1/(1 − t²))` on `(−1, 1)`, zero elsewhere.
fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Unit vector `e^{ik·X} ψ((‖X‖ − R − w)/w)` sampled on the grid; its
/// support is the open shell `R < ‖X‖ < R + 2w`.
pub fn make_zhislin_vector(
    grid: &Grid,
    radius: f64,
    k: &[f64],
    width: f64,
) -> Result<ZhislinVector, ProbeError> {
    let reach = grid.min_half_width();
    if !(radius >= 0.0 && width > 0.0) || radius + 2.0 * width > reach {
        return Err(ProbeError::SupportExceedsBox {
            radius,
            width,
            half_width: reach,
        });
    }
    let min_width = 4.0 * grid.max_spacing();
    if width < min_width {
        return Err(ProbeError::WidthUnresolved { width, min_width });
    }
    if k.len() != grid.dims() {
        return Err(ProbeError::WavevectorDimension {
            expected: grid.dims(),
            found: k.len(),
        });
    }
    let sample = |idx: usize, part: fn(f64) -> f64| {
        let x = grid.node(idx);
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let phase: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
        bump((r - radius - width) / width) * part(phase)
    };
    let mut v = ZhislinVector {
        re: par::map_indexed(grid.size(), |i| sample(i, f64::cos)),
        im: par::map_indexed(grid.size(), |i| sample(i, f64::sin)),
    };
    let nv = v.norm();
    if nv == 0.0 {
        return Err(ProbeError::WidthUnresolved { width, min_width });
    }
    par::scale(1.0 / nv, &mut v.re);
    par::scale(1.0 / nv, &mut v.im);
    Ok(v)
}

/// `‖(H − λ)u‖` for complex `u` and real symmetric `H`.
pub fn shifted_residual(op: &GridOperator, lambda: f64, u: &ZhislinVector) -> f64 {
    let mut total = 0.0;
    let mut out = vec![0.0; op.dim()];
    for part in [&u.re, &u.im] {
        op.apply_into(part, &mut out);
        par::axpy(-lambda, part, &mut out);
        total += par::dot(&out, &out);
    }
    total.sqrt()
}

fn supported_outside(grid: &Grid, radius: f64, u: &ZhislinVector) -> bool {
    let zero = |v: &[f64]| {
        restrict(v, grid, radius)
            .map(|r| r.iter().all(|&x| x == 0.0))
            .unwrap_or(false)
    };
    zero(&u.re) && zero(&u.im)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZhislinEntry {
    pub radius: f64,
    pub width: f64,
    pub residual: f64,
    pub norm: f64,
    pub exterior_support: bool,
    pub lower_bound: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZhislinReport {
    pub candidate_lambda: f64,
    /// Wavevector used for the test vectors.
    pub wavevector: Vec<f64>,
    pub entries: Vec<ZhislinEntry>,
    pub verdict: Verdict,
}

/// Residuals are nonincreasing up to this relative band.
pub const MONOTONE_BAND: f64 = 0.05;

/// Wavevector along the first axis whose discrete symbol
/// `c(2 − 2cos(kΔ))/Δ²` equals `λ`, so the plane wave is an exact eigenvector
/// of the free lattice operator and only the envelope contributes to the residual.
pub fn discrete_wavevector(grid: &Grid, h: f64, lambda: f64) -> Result<Vec<f64>, ProbeError> {
    if lambda < 0.0 {
        return Err(ProbeError::NegativeLambda(lambda));
    }
    let c = if grid.n > 0 { h * h } else { 1.0 };
    let d = grid.spacing[0];
    let top = 4.0 * c / (d * d);
    if lambda > top {
        return Err(ProbeError::OutsideBand { lambda, top });
    }
    let mut k = vec![0.0; grid.dims()];
    k[0] = (1.0 - lambda * d * d / (2.0 * c)).clamp(-1.0, 1.0).acos() / d;
    Ok(k)
}

/// Zhislin residuals of the free operator `−h²Δₓ − Δ_y` at each `λ`, for
/// shells `R < ‖X‖ < R + 2w`. Widths default to the radii.
pub fn essential_spectrum_probe(
    h: f64,
    grid: &Grid,
    lambdas: &[f64],
    radii: &[f64],
    widths: Option<&[f64]>,
) -> Result<Vec<ZhislinReport>, ProbeError> {
    if let Some(&bad) = lambdas.iter().find(|&&l| l < 0.0) {
        return Err(ProbeError::NegativeLambda(bad));
    }
    let widths = widths.unwrap_or(radii);
    if widths.len() != radii.len() {
        return Err(ProbeError::WidthCount {
            radii: radii.len(),
            widths: widths.len(),
        });
    }
    let op = assemble_hamiltonian(grid, &Potential::zero(grid.n, grid.p), h)?;
    let wavevectors = lambdas
        .iter()
        .map(|&l| discrete_wavevector(grid, h, l))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..lambdas.len())
        .flat_map(|a| (0..radii.len()).map(move |b| (a, b)))
        .collect();
    let results = par::map_indexed(jobs.len(), |j| {
        let (a, b) = jobs[j];
        let u = make_zhislin_vector(grid, radii[b], &wavevectors[a], widths[b])?;
        Ok(ZhislinEntry {
            radius: radii[b],
            width: widths[b],
            residual: shifted_residual(&op, lambdas[a], &u),
            norm: u.norm(),
            exterior_support: supported_outside(grid, radii[b], &u),
            lower_bound: Some(-lambdas[a]),
            verdict: Verdict::Inconclusive,
        })
    });
    let mut results = results.into_iter();
    let mut reports = Vec::with_capacity(lambdas.len());
    for (a, &lambda) in lambdas.iter().enumerate() {
        let mut entries: Vec<ZhislinEntry> = results
            .by_ref()
            .take(radii.len())
            .collect::<Result<_, ProbeError>>()?;
        entries.sort_by(|x, y| x.width.total_cmp(&y.width));
        let monotone = entries
            .windows(2)
            .all(|w| w[1].residual <= w[0].residual * (1.0 + MONOTONE_BAND));
        let decreasing =
            entries.len() >= 2 && entries[entries.len() - 1].residual < entries[0].residual;
        let verdict = if monotone && decreasing {
            Verdict::EssentialCandidate
        } else {
            Verdict::Inconclusive
        };
        for e in &mut entries {
            e.verdict = verdict;
        }
        reports.push(ZhislinReport {
            candidate_lambda: lambda,
            wavevector: wavevectors[a].clone(),
            entries,
            verdict,
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `λ_min(A, B) q²`, exact for quadratic forms.
    QuadraticExact,
    /// Minimum of `V` over grid nodes with `‖X‖ > q`.
    GridMinimum,
}

/// Lower bounds `inf_{‖X‖>q} V − λ` on `‖(H − λ)u‖` for unit `u` supported
/// outside `B(0, q)`, checked against the residual of the real bump filling
/// the rest of the box.
pub fn discreteness_certificate(
    op: &GridOperator,
    pot: &Potential,
    lambda: f64,
    radii: &[f64],
) -> Result<(ZhislinReport, BoundMode), ProbeError> {
    if !pot.nonnegative_claimed {
        return Err(ProbeError::NotNonnegative);
    }
    let grid = &op.grid;
    let mode = if pot.as_quadratic().is_some() {
        BoundMode::QuadraticExact
    } else {
        BoundMode::GridMinimum
    };
    let zero_k = vec![0.0; grid.dims()];
    let reach = grid.min_half_width();
    let entries = par::map_indexed(radii.len(), |i| {
        let q = radii[i];
        let infimum = match pot.as_quadratic() {
            Some(quad) => quad.exterior_infimum(q),
            None => (0..grid.size())
                .filter(|&j| grid.radius(j) > q)
                .map(|j| op.potential_values[j])
                .fold(f64::INFINITY, f64::min),
        };
        let width = (reach - q) / 2.0;
        let u = make_zhislin_vector(grid, q, &zero_k, width)?;
        let residual = shifted_residual(op, lambda, &u);
        let bound = infimum - lambda;
        let verdict = if bound <= 0.0 {
            Verdict::Inconclusive
        } else if residual >= bound * (1.0 - 1e-12) {
            Verdict::Excluded
        } else {
            Verdict::BoundViolated
        };
        Ok(ZhislinEntry {
            radius: q,
            width,
            residual,
            norm: u.norm(),
            exterior_support: supported_outside(grid, q, &u),
            lower_bound: Some(bound),
            verdict,
        })
    });
    let mut entries = entries
        .into_iter()
        .collect::<Result<Vec<_>, ProbeError>>()?;
    entries.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    let bounds: Vec<f64> = entries.iter().filter_map(|e| e.lower_bound).collect();
    let verdict = if entries.iter().any(|e| e.verdict == Verdict::BoundViolated) {
        Verdict::BoundViolated
    } else if entries.len() < 2 || !bounds.windows(2).all(|w| w[1] > w[0]) {
        Verdict::NonConfining
    } else if bounds[bounds.len() - 1] > 0.0 {
        Verdict::DiscreteCertified
    } else {
        Verdict::Inconclusive
    };
    Ok((
        ZhislinReport {
            candidate_lambda: lambda,
            wavevector: zero_k,
            entries,
            verdict,
        },
        mode,
    ))
}
