use serde::{Deserialize, Serialize};

/// Group of numerically split eigenvalues read as one degenerate level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityCluster {
    /// Mean of the members.
    pub energy: f64,
    pub multiplicity: usize,
    /// `max − min` over the members.
    pub spread: f64,
}

/// Default relative gap: values closer than `1e-6·max(1, |λ|)` are merged.
pub const DEFAULT_GAP_RTOL: f64 = 1e-6;

fn greedy(eigs: &[f64], joins: impl Fn(f64, f64) -> bool) -> Vec<MultiplicityCluster> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < eigs.len() {
        let mut j = i + 1;
        while j < eigs.len() && joins(eigs[j - 1], eigs[j]) {
            j += 1;
        }
        let members = &eigs[i..j];
        out.push(MultiplicityCluster {
            energy: members.iter().sum::<f64>() / members.len() as f64,
            multiplicity: members.len(),
            spread: members[members.len() - 1] - members[0],
        });
        i = j;
    }
    out
}

/// Greedy left-to-right clustering: a value joins the current cluster iff it
/// lies within `gap_tol` of the cluster's current maximum. Input must be ascending.
pub fn cluster_multiplicities(eigs: &[f64], gap_tol: f64) -> Vec<MultiplicityCluster> {
    greedy(eigs, |max, v| v - max <= gap_tol)
}

/// Same rule with the gap scaled by `max(1, |λ|)` of the current maximum.
pub fn cluster_multiplicities_relative(eigs: &[f64], rtol: f64) -> Vec<MultiplicityCluster> {
    greedy(eigs, |max, v| v - max <= rtol * max.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_pair_merges() {
        let c = cluster_multiplicities(&[2.0, 3.9999, 4.0001], 1e-2);
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].energy, c[0].multiplicity), (2.0, 1));
        assert!((c[1].energy - 4.0).abs() < 1e-12);
        assert_eq!(c[1].multiplicity, 2);
        assert!((c[1].spread - 2e-4).abs() < 1e-12);
    }

    #[test]
    fn empty() {
        assert!(cluster_multiplicities(&[], 1.0).is_empty());
    }

    #[test]
    fn isotropic_2d_oscillator() {
        // brute force over (n1, n2)
        let mut levels: Vec<f64> = (0..4)
            .flat_map(|a| (0..4).map(move |b| (2 * a + 1 + 2 * b + 1) as f64))
            .collect();
        levels.sort_by(f64::total_cmp);
        let c = cluster_multiplicities(&levels[..6], 1e-9);
        let got: Vec<(f64, usize)> = c.iter().map(|c| (c.energy, c.multiplicity)).collect();
        assert_eq!(got, vec![(2.0, 1), (4.0, 2), (6.0, 3)]);
    }

    #[test]
    fn chaining_follows_the_running_maximum() {
        let c = cluster_multiplicities(&[0.0, 0.8, 1.6, 2.4], 1.0);
        assert_eq!(c.len(), 1);
        assert!((c[0].spread - 2.4).abs() < 1e-12);
    }

    #[test]
    fn relative_gap_scales_with_energy() {
        let c = cluster_multiplicities_relative(&[1000.0, 1000.0005, 1000.01], 1e-6);
        assert_eq!(
            c.iter().map(|c| c.multiplicity).collect::<Vec<_>>(),
            vec![2, 1]
        );
    }
}
