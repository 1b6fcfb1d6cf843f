//! Potentials `V(x, y)` on `ℝⁿ × ℝᵖ`: quadratic forms `⟨Ax,x⟩ + ⟨By,y⟩` and
//! parsed expressions, plus sampled confinement profiles.
//!
//! Points are laid out as `(x1, …, xn, y1, …, yp)`.

mod expr;
mod sampling;

pub use expr::{parse_potential, Axis, BinOp, Expr, ExprError, Func, PotentialExpr, Var};
pub use sampling::ScrambledHalton;

use serde::{Deserialize, Serialize};

use crate::linalg::{MatrixError, SymMatrix};
use crate::par;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("point has {found} coordinates, potential expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid matrix: {0}")]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(
        "no points of the box lie outside the ball of radius {radius} (box corner at {corner})"
    )]
    EmptyExterior { radius: f64, corner: f64 },
    #[error("radii must be positive and strictly ascending")]
    InvalidRadii,
    #[error("box has {found} half-widths, potential expects {expected}")]
    BoxMismatch { expected: usize, found: usize },
    #[error("sample count must be at least 1")]
    NoSamples,
}

/// `V(x, y) = ⟨Ax, x⟩ + ⟨By, y⟩` with `A`, `B` symmetric positive definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormPotential {
    pub a: SymMatrix,
    pub b: SymMatrix,
}

impl QuadraticFormPotential {
    /// Symmetrizes both matrices and verifies strict positive definiteness.
    /// `b` may be empty (`p = 0`).
    pub fn new(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self, PotentialError> {
        let a = SymMatrix::from_rows(a)?;
        let b = SymMatrix::from_rows(b)?;
        if a.dim() == 0 {
            return Err(MatrixError::NotSquare {
                row: 0,
                len: 0,
                dim: 0,
            }
            .into());
        }
        a.positive_definite_eigenvalues()?;
        b.positive_definite_eigenvalues()?;
        Ok(Self { a, b })
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let n = self.a.dim();
        self.a.quadratic_form(&point[..n]) + self.b.quadratic_form(&point[n..])
    }

    /// Smallest eigenvalue of `blkdiag(A, B)`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.a.block_diag(&self.b).jacobi_eigen().values[0]
    }

    /// `inf_{‖X‖ ≥ q} V = λ_min · q²`.
    pub fn exterior_infimum(&self, radius: f64) -> f64 {
        self.min_eigenvalue() * radius * radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PotentialKind {
    Quadratic(QuadraticFormPotential),
    Expression(PotentialExpr),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub kind: PotentialKind,
    pub n: usize,
    pub p: usize,
    /// Declared `V ≥ 0`; spot-checkable, never proven.
    pub nonnegative_claimed: bool,
}

/// Builds the quadratic-form potential; positive definiteness is verified so
/// the result always carries `nonnegative_claimed = true`.
pub fn quadratic_potential(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Potential, PotentialError> {
    let q = QuadraticFormPotential::new(a, b)?;
    Ok(Potential {
        n: q.a.dim(),
        p: q.b.dim(),
        kind: PotentialKind::Quadratic(q),
        nonnegative_claimed: true,
    })
}

impl Potential {
    pub fn expression(expr: PotentialExpr, nonnegative_claimed: bool) -> Self {
        Self {
            n: expr.n,
            p: expr.p,
            kind: PotentialKind::Expression(expr),
            nonnegative_claimed,
        }
    }

    /// `V ≡ 0`.
    pub fn zero(n: usize, p: usize) -> Self {
        Self::expression(
            PotentialExpr {
                ast: Expr::Num(0.0),
                n,
                p,
            },
            true,
        )
    }

    /// `‖X‖² = Σ xᵢ² + Σ yⱼ²`.
    pub fn radial_square(n: usize, p: usize) -> Self {
        let id = |d: usize| {
            (0..d)
                .map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect())
                .collect::<Vec<Vec<f64>>>()
        };
        quadratic_potential(&id(n), &id(p)).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.n + self.p
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticFormPotential> {
        match &self.kind {
            PotentialKind::Quadratic(q) => Some(q),
            PotentialKind::Expression(_) => None,
        }
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, PotentialError> {
        if point.len() != self.dim() {
            return Err(PotentialError::DimensionMismatch {
                expected: self.dim(),
                found: point.len(),
            });
        }
        match &self.kind {
            PotentialKind::Quadratic(q) => Ok(q.eval(point)),
            PotentialKind::Expression(e) => Ok(e.eval(point)?),
        }
    }

    /// Samples `samples` quasi-random points of the box and returns the
    /// smallest value found (negative means the nonnegativity claim fails).
    pub fn spot_check_min(
        &self,
        half_widths: &[f64],
        samples: usize,
        seed: u64,
    ) -> Result<f64, PotentialError> {
        self.check_box(half_widths)?;
        if samples == 0 {
            return Err(PotentialError::NoSamples);
        }
        let seq = ScrambledHalton::new(self.dim(), seed);
        let values = par::map_indexed(samples, |i| self.eval(&seq.point_in_box(i, half_widths)));
        let mut min = f64::INFINITY;
        for v in values {
            min = min.min(v?);
        }
        Ok(min)
    }

    fn check_box(&self, half_widths: &[f64]) -> Result<(), PotentialError> {
        if half_widths.len() != self.dim() {
            return Err(PotentialError::BoxMismatch {
                expected: self.dim(),
                found: half_widths.len(),
            });
        }
        Ok(())
    }
}

/// Sampled `inf V` outside growing balls `B(0, q)` within a truncation box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementProfile {
    pub radii: Vec<f64>,
    pub inf_estimates: Vec<f64>,
    /// Requested samples per radius.
    pub sample_count: usize,
    /// Samples actually found outside each ball (may fall short near the box corner).
    pub accepted: Vec<usize>,
    /// `λ_min · q²` for quadratic potentials.
    pub exact_infima: Option<Vec<f64>>,
}

/// Rejection attempts allowed per requested sample.
const ATTEMPTS_PER_SAMPLE: usize = 1000;

pub fn confinement_profile(
    pot: &Potential,
    radii: &[f64],
    half_widths: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ConfinementProfile, PotentialError> {
    pot.check_box(half_widths)?;
    if samples == 0 {
        return Err(PotentialError::NoSamples);
    }
    if radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PotentialError::InvalidRadii);
    }
    let corner = half_widths.iter().map(|l| l * l).sum::<f64>().sqrt();
    if let Some(&r) = radii.iter().find(|&&r| r >= corner) {
        return Err(PotentialError::EmptyExterior { radius: r, corner });
    }
    let seq = ScrambledHalton::new(pot.dim(), seed);
    let per_radius = par::map_indexed(radii.len(), |ri| {
        let q = radii[ri];
        let mut best = f64::INFINITY;
        let mut accepted = 0;
        let mut index = 0;
        while accepted < samples && index < samples * ATTEMPTS_PER_SAMPLE {
            let x = seq.point_in_box(index, half_widths);
            index += 1;
            if x.iter().map(|v| v * v).sum::<f64>().sqrt() <= q {
                continue;
            }
            accepted += 1;
            best = best.min(pot.eval(&x)?);
        }
        if accepted == 0 {
            return Err(PotentialError::EmptyExterior { radius: q, corner });
        }
        Ok((best, accepted))
    });
    let mut inf_estimates = Vec::with_capacity(radii.len());
    let mut accepted = Vec::with_capacity(radii.len());
    for r in per_radius {
        let (b, a) = r?;
        inf_estimates.push(b);
        accepted.push(a);
    }
    let exact_infima = pot
        .as_quadratic()
        .map(|q| radii.iter().map(|&r| q.exterior_infimum(r)).collect());
    Ok(ConfinementProfile {
        radii: radii.to_vec(),
        inf_estimates,
        sample_count: samples,
        accepted,
        exact_infima,
    })
}
