use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, ProbeError};
use crate::discretization::GridOperator;
use crate::par;

/// Relative slack allowed in each link of the chain.
pub const FORM_RTOL: f64 = 1e-10;

/// Outcome of checking, for unit `u`,
/// `K(u) ≤ ⟨u,Hu⟩ ≤ ⟨u,(H+1)u⟩ ≤ ‖(H+1)u‖ ≤ ‖(H+1)u‖²`
/// where `K` is the kinetic quadratic form evaluated from edge differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest `(lhs − rhs)/max(|lhs|, |rhs|)` over all links and trials;
    /// negative when every link holds strictly.
    pub max_relative_violation: f64,
    /// False when some link failed beyond tolerance, which points at a
    /// potential that is not actually nonnegative.
    pub certified: bool,
}

fn link(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs) / scale
    }
}

fn chain(op: &GridOperator, u: &[f64]) -> Result<f64, ProbeError> {
    let kinetic = op.kinetic_form(u)?;
    let hu = op.apply(u)?;
    let form = par::dot(u, &hu);
    let shifted = form + par::dot(u, u);
    let h1u: Vec<f64> = hu.iter().zip(u).map(|(a, b)| a + b).collect();
    let graph = par::norm(&h1u);
    let links = [
        link(kinetic, form),
        link(form, shifted),
        link(shifted, graph),
        link(graph, graph * graph),
    ];
    Ok(links.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Checks the form chain on `trials` seeded random unit vectors.
pub fn form_inequality_check(
    op: &GridOperator,
    trials: usize,
    seed: u64,
) -> Result<FormReport, ProbeError> {
    if !op.nonnegative_claimed {
        return Err(ProbeError::NotNonnegative);
    }
    let n = op.dim();
    let worst = par::map_indexed(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[t as u64]));
        let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nu = par::norm(&u);
        par::scale(1.0 / nu, &mut u);
        chain(op, &u)
    });
    let worst = worst.into_iter().collect::<Result<Vec<_>, _>>()?;
    let violations = worst.iter().filter(|&&w| w > FORM_RTOL).count();
    Ok(FormReport {
        trials,
        violations,
        max_relative_violation: worst.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        certified: violations == 0,
    })
}
