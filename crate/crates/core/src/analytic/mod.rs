//! Closed-form spectra of harmonic oscillators and their Born-Oppenheimer
//! combination.
//!
//! For `K = −Δ + ⟨Ax, x⟩` with `A` symmetric positive definite the spectrum is
//! `{ Σᵢ (2nᵢ+1) wᵢ : nᵢ ≥ 0 }` where `wᵢ²` are the eigenvalues of `A`. For
//! `H(h) = −h²Δₓ − Δ_y + ⟨Ax,x⟩ + ⟨By,y⟩` it is
//! `{ Σᵢ (2nᵢ+1) h wᵢ + Σⱼ (2mⱼ+1) μⱼ }` with independent multi-indices `n`, `m`.

mod dilation;
mod hermite;

pub use dilation::{apply_dilation, Dilated};
pub use hermite::{
    annihilation_residual, eigen_relation_residual, hermite_function, hermite_polynomial,
    ladder_check, HermiteBasis, UniformGrid1d, PSI0_AT_ORIGIN,
};

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::io::{self, Write};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::linalg::{MatrixError, SymMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticError {
    #[error("invalid matrix: {0}")]
    Matrix(#[from] MatrixError),
    #[error("frequencies must be strictly positive and finite")]
    NonPositiveFrequency,
    #[error("scale factor {0} must be positive and finite")]
    NonPositiveScale(f64),
    #[error("energy {energy} lies beyond the truncation energy {truncation}; the count would be incomplete")]
    BeyondTruncation { energy: f64, truncation: f64 },
    #[error("inadequate grid: {0}")]
    InadequateGrid(String),
}

/// Where an enumeration stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// Every level with energy `≤ E_max`.
    MaxEnergy(f64),
    /// The lowest `k` eigenvalues counted with multiplicity; the last level
    /// is always completed, so the total may exceed `k`.
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub multiplicity: usize,
}

/// Provenance of an enumerated spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub h: Option<f64>,
    pub h_scale: f64,
    pub w: Vec<f64>,
    pub mu: Vec<f64>,
    pub cutoff: Cutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSpectrum {
    /// Strictly ascending energies with multiplicities.
    pub levels: Vec<Level>,
    pub truncation: Cutoff,
    /// Energy up to which the level list is complete.
    pub truncation_energy: f64,
    pub params: SpectrumParams,
}

/// Relative tolerance for merging floating-point levels.
pub const MERGE_RTOL: f64 = 1e-9;

/// Relative slack when comparing an energy against `E_max`.
const CUTOFF_RTOL: f64 = 1e-12;

/// `wᵢ = √(eigenvalues of A)`, ascending. `A` is symmetrized first.
pub fn oscillator_frequencies(a: &[Vec<f64>]) -> Result<Vec<f64>, AnalyticError> {
    let m = SymMatrix::from_rows(a)?;
    Ok(m.positive_definite_eigenvalues()?
        .into_iter()
        .map(f64::sqrt)
        .collect())
}

/// Ordering key for one multi-index energy `Σ (2nᵢ+1) wᵢ`.
trait LevelKey: Clone + Ord {
    fn weighted_sum(index: &[u32], weights: &[Self]) -> Self;
    fn same_level(&self, other: &Self) -> bool;
    fn to_f64(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
struct OrdF64(f64);

impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl LevelKey for OrdF64 {
    fn weighted_sum(index: &[u32], weights: &[Self]) -> Self {
        OrdF64(
            index
                .iter()
                .zip(weights)
                .map(|(&n, w)| (2.0 * n as f64 + 1.0) * w.0)
                .sum(),
        )
    }

    fn same_level(&self, other: &Self) -> bool {
        (self.0 - other.0).abs() <= MERGE_RTOL * self.0.abs().max(other.0.abs())
    }

    fn to_f64(&self) -> f64 {
        self.0
    }
}

impl LevelKey for Rational64 {
    fn weighted_sum(index: &[u32], weights: &[Self]) -> Self {
        index
            .iter()
            .zip(weights)
            .map(|(&n, w)| Rational64::from_integer(2 * i64::from(n) + 1) * w)
            .sum()
    }

    fn same_level(&self, other: &Self) -> bool {
        self == other
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Best-first expansion over multi-indices: states are popped in ascending
/// energy order and each popped state pushes its unit successors, so nothing
/// below the stopping energy can be skipped.
fn enumerate_keys<K: LevelKey>(weights: &[K], h_scale: f64, cutoff: Cutoff) -> (Vec<Level>, f64) {
    let dims = weights.len();
    let mut heap = BinaryHeap::new();
    let mut visited: HashSet<Vec<u32>> = HashSet::new();
    let zero = vec![0u32; dims];
    heap.push(Reverse((K::weighted_sum(&zero, weights), zero.clone())));
    visited.insert(zero);

    let mut levels: Vec<Level> = Vec::new();
    let mut current: Option<K> = None;
    let mut counted = 0usize;
    while let Some(Reverse((key, index))) = heap.pop() {
        let energy = h_scale * key.to_f64();
        let joins = current.as_ref().is_some_and(|c| c.same_level(&key));
        if !joins {
            let stop = match cutoff {
                Cutoff::MaxEnergy(e_max) => energy > e_max + CUTOFF_RTOL * e_max.abs().max(1.0),
                Cutoff::Count(k) => counted >= k,
            };
            if stop {
                break;
            }
            levels.push(Level {
                energy,
                multiplicity: 0,
            });
            current = Some(key.clone());
        }
        levels.last_mut().expect("level pushed above").multiplicity += 1;
        counted += 1;
        for d in 0..dims {
            let mut next = index.clone();
            next[d] += 1;
            if visited.insert(next.clone()) {
                heap.push(Reverse((K::weighted_sum(&next, weights), next)));
            }
        }
    }
    let truncation_energy = match cutoff {
        Cutoff::MaxEnergy(e) => e,
        Cutoff::Count(_) => levels.last().map_or(0.0, |l| l.energy),
    };
    (levels, truncation_energy)
}

fn check_cutoff(cutoff: Cutoff, ground: f64) {
    if let Cutoff::MaxEnergy(e) = cutoff {
        if e < ground {
            log::warn!("cutoff {e} lies below the ground energy {ground}; spectrum is empty");
        }
    }
}

/// All values `h_scale · Σ (2nᵢ+1) wᵢ` below the cutoff, merged into levels
/// (relative tolerance [`MERGE_RTOL`]).
pub fn enumerate_spectrum(
    w: &[f64],
    h_scale: f64,
    cutoff: Cutoff,
) -> Result<AnalyticSpectrum, AnalyticError> {
    if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) || w.is_empty() {
        return Err(AnalyticError::NonPositiveFrequency);
    }
    if !(h_scale > 0.0 && h_scale.is_finite()) {
        return Err(AnalyticError::NonPositiveScale(h_scale));
    }
    check_cutoff(cutoff, h_scale * w.iter().sum::<f64>());
    let keys: Vec<OrdF64> = w.iter().copied().map(OrdF64).collect();
    let (levels, truncation_energy) = enumerate_keys(&keys, h_scale, cutoff);
    Ok(AnalyticSpectrum {
        levels,
        truncation: cutoff,
        truncation_energy,
        params: SpectrumParams {
            h: None,
            h_scale,
            w: w.to_vec(),
            mu: Vec::new(),
            cutoff,
        },
    })
}

/// As [`enumerate_spectrum`] with rational frequencies; levels are merged by
/// exact equality.
pub fn enumerate_spectrum_exact(
    w: &[Rational64],
    h_scale: f64,
    cutoff: Cutoff,
) -> Result<AnalyticSpectrum, AnalyticError> {
    if w.is_empty() || w.iter().any(|x| *x <= Rational64::from_integer(0)) {
        return Err(AnalyticError::NonPositiveFrequency);
    }
    if !(h_scale > 0.0 && h_scale.is_finite()) {
        return Err(AnalyticError::NonPositiveScale(h_scale));
    }
    let wf: Vec<f64> = w.iter().map(LevelKey::to_f64).collect();
    check_cutoff(cutoff, h_scale * wf.iter().sum::<f64>());
    let (levels, truncation_energy) = enumerate_keys(w, h_scale, cutoff);
    Ok(AnalyticSpectrum {
        levels,
        truncation: cutoff,
        truncation_energy,
        params: SpectrumParams {
            h: None,
            h_scale,
            w: wf,
            mu: Vec::new(),
            cutoff,
        },
    })
}

/// Spectrum of `−h²Δₓ − Δ_y + ⟨Ax,x⟩ + ⟨By,y⟩`: enumeration over the combined
/// weights `(h w₁, …, h wₙ, μ₁, …, μ_p)`. `b` may be empty.
pub fn bo_spectrum(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    h: f64,
    cutoff: Cutoff,
) -> Result<AnalyticSpectrum, AnalyticError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(AnalyticError::NonPositiveScale(h));
    }
    let w = oscillator_frequencies(a)?;
    let mu = if b.is_empty() {
        Vec::new()
    } else {
        oscillator_frequencies(b)?
    };
    let combined: Vec<f64> = w.iter().map(|x| h * x).chain(mu.iter().copied()).collect();
    let mut spec = enumerate_spectrum(&combined, 1.0, cutoff)?;
    spec.params = SpectrumParams {
        h: Some(h),
        h_scale: 1.0,
        w,
        mu,
        cutoff,
    };
    Ok(spec)
}

/// Multiplies every energy by `lambda`; multiplicities are unchanged.
pub fn dilate_spectrum(
    spec: &AnalyticSpectrum,
    lambda: f64,
) -> Result<AnalyticSpectrum, AnalyticError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(AnalyticError::NonPositiveScale(lambda));
    }
    let mut out = spec.clone();
    for l in &mut out.levels {
        l.energy *= lambda;
    }
    out.truncation_energy *= lambda;
    out.params.h_scale *= lambda;
    out.truncation = match spec.truncation {
        Cutoff::MaxEnergy(e) => Cutoff::MaxEnergy(e * lambda),
        c => c,
    };
    out.params.cutoff = out.truncation;
    Ok(out)
}

/// `N(E)`: eigenvalues `≤ E` counted with multiplicity.
pub fn counting_function(spec: &AnalyticSpectrum, energy: f64) -> Result<usize, AnalyticError> {
    if energy > spec.truncation_energy {
        return Err(AnalyticError::BeyondTruncation {
            energy,
            truncation: spec.truncation_energy,
        });
    }
    Ok(spec
        .levels
        .iter()
        .take_while(|l| l.energy <= energy)
        .map(|l| l.multiplicity)
        .sum())
}

impl AnalyticSpectrum {
    /// Energies repeated by multiplicity.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.levels
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.energy, l.multiplicity))
            .collect()
    }

    /// `energy,multiplicity` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "energy,multiplicity")?;
        for l in &self.levels {
            writeln!(w, "{},{}", l.energy, l.multiplicity)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(spec: &AnalyticSpectrum) -> Vec<(f64, usize)> {
        spec.levels
            .iter()
            .map(|l| (l.energy, l.multiplicity))
            .collect()
    }

    #[test]
    fn frequencies() {
        assert_eq!(
            oscillator_frequencies(&[vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            oscillator_frequencies(&[
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ])
            .unwrap(),
            vec![1.0; 3]
        );
        let w = oscillator_frequencies(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && (w[1] - 3f64.sqrt()).abs() < 1e-12);
        assert!(oscillator_frequencies(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
    }

    #[test]
    fn one_dimensional_ladder() {
        let s = enumerate_spectrum(&[1.0], 1.0, Cutoff::Count(5)).unwrap();
        assert_eq!(
            pairs(&s),
            vec![(1.0, 1), (3.0, 1), (5.0, 1), (7.0, 1), (9.0, 1)]
        );
    }

    #[test]
    fn isotropic_two_dimensional() {
        let s = enumerate_spectrum(&[1.0, 1.0], 1.0, Cutoff::MaxEnergy(6.0)).unwrap();
        assert_eq!(pairs(&s), vec![(2.0, 1), (4.0, 2), (6.0, 3)]);
    }

    #[test]
    fn anisotropic_two_dimensional() {
        let s = enumerate_spectrum(&[1.0, 2.0], 1.0, Cutoff::MaxEnergy(7.0)).unwrap();
        assert_eq!(pairs(&s), vec![(3.0, 1), (5.0, 1), (7.0, 2)]);
    }

    #[test]
    fn count_cutoff_completes_last_level() {
        let s = enumerate_spectrum(&[1.0, 1.0], 1.0, Cutoff::Count(2)).unwrap();
        assert_eq!(pairs(&s), vec![(2.0, 1), (4.0, 2)]);
        assert_eq!(s.truncation_energy, 4.0);
    }

    #[test]
    fn cutoff_below_ground_is_empty() {
        let s = enumerate_spectrum(&[1.0, 2.0], 1.0, Cutoff::MaxEnergy(2.0)).unwrap();
        assert!(s.levels.is_empty());
    }

    #[test]
    fn born_oppenheimer_small_case() {
        let s = bo_spectrum(&[vec![1.0]], &[vec![1.0]], 0.5, Cutoff::MaxEnergy(3.5)).unwrap();
        assert_eq!(pairs(&s), vec![(1.5, 1), (2.5, 1), (3.5, 2)]);
        assert_eq!(s.params.h, Some(0.5));
        assert_eq!(s.params.w, vec![1.0]);
        assert_eq!(s.params.mu, vec![1.0]);
    }

    #[test]
    fn born_oppenheimer_reduces_to_isotropic() {
        let bo = bo_spectrum(&[vec![1.0]], &[vec![1.0]], 1.0, Cutoff::MaxEnergy(12.0)).unwrap();
        let iso = enumerate_spectrum(&[1.0, 1.0], 1.0, Cutoff::MaxEnergy(12.0)).unwrap();
        assert_eq!(bo.levels, iso.levels);
    }

    #[test]
    fn born_oppenheimer_without_electrons() {
        let s = bo_spectrum(&[vec![1.0]], &[], 0.1, Cutoff::Count(3)).unwrap();
        let e: Vec<f64> = s.eigenvalues();
        for (a, b) in e.iter().zip([0.1, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dilation_scales_energies() {
        let s = enumerate_spectrum(&[1.0], 1.0, Cutoff::Count(3)).unwrap();
        assert_eq!(
            pairs(&dilate_spectrum(&s, 4.0).unwrap()),
            vec![(4.0, 1), (12.0, 1), (20.0, 1)]
        );
        assert_eq!(dilate_spectrum(&s, 1.0).unwrap(), s);
        let iso = enumerate_spectrum(&[1.0, 1.0], 1.0, Cutoff::MaxEnergy(4.0)).unwrap();
        assert_eq!(
            pairs(&dilate_spectrum(&iso, 2.0).unwrap()),
            vec![(4.0, 1), (8.0, 2)]
        );
        assert!(dilate_spectrum(&s, 0.0).is_err());
    }

    #[test]
    fn counting() {
        let s = enumerate_spectrum(&[1.0], 1.0, Cutoff::MaxEnergy(10.0)).unwrap();
        assert_eq!(counting_function(&s, 10.0).unwrap(), 5);
        assert_eq!(counting_function(&s, 0.5).unwrap(), 0);
        assert!(matches!(
            counting_function(&s, 10.5),
            Err(AnalyticError::BeyondTruncation { .. })
        ));
        let iso = enumerate_spectrum(&[1.0, 1.0], 1.0, Cutoff::MaxEnergy(6.0)).unwrap();
        assert_eq!(counting_function(&iso, 6.0).unwrap(), 6);
    }

    #[test]
    fn exact_rational_merging() {
        let w = [Rational64::new(1, 3), Rational64::new(2, 3)];
        let s = enumerate_spectrum_exact(&w, 1.0, Cutoff::MaxEnergy(7.0 / 3.0)).unwrap();
        // 1/3 + 2/3 = 1; 3/3+2/3 = 5/3; 5/3+2/3 = 7/3 and 1/3+6/3 = 7/3
        assert_eq!(s.levels.len(), 3);
        assert_eq!(s.levels[2].multiplicity, 2);
    }

    #[test]
    fn csv_export() {
        let s = bo_spectrum(&[vec![1.0]], &[vec![1.0]], 0.5, Cutoff::MaxEnergy(3.5)).unwrap();
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "energy,multiplicity\n1.5,1\n2.5,1\n3.5,2\n"
        );
    }
}
