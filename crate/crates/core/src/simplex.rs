//! Probability vectors over the reservation space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ p = 1` accepted (and renormalized) on construction.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(mut p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some(i) = p.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = p.iter().position(|&x| x < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "negative mass {} at {i}",
                p[i]
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("mass sums to {sum}")));
        }
        if sum != 1.0 {
            p.iter_mut().for_each(|x| *x /= sum);
        }
        Ok(Distribution(p))
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform distribution over an empty set");
        Distribution(vec![1.0 / len as f64; len])
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        assert!(index < len, "point mass outside support");
        let mut p = vec![0.0; len];
        p[index] = 1.0;
        Distribution(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The single atom, if this is a point mass.
    pub fn atom(&self) -> Option<usize> {
        let mut support = self.0.iter().enumerate().filter(|(_, &p)| p > 0.0);
        match (support.next(), support.next()) {
            (Some((i, &p)), None) if p == 1.0 => Some(i),
            _ => None,
        }
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Euclidean projection of `y` onto the probability simplex.
///
/// Sort-and-threshold: with `u` sorted descending, the support size is the
/// largest `k` with `u_k - (Σ_{j≤k} u_j - 1)/k > 0`, and the result is
/// `max(y - τ, 0)` for `τ = (Σ_{j≤k} u_j - 1)/k`.
pub fn project_simplex(y: &[f64]) -> Result<Distribution> {
    if y.is_empty() {
        return Err(Error::InvalidDistribution("empty support".into()));
    }
    if let Some(i) = y.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let tau = simplex_threshold(y);
    let mut p: Vec<f64> = y.iter().map(|&x| (x - tau).max(0.0)).collect();
    let sum: f64 = p.iter().sum();
    if sum != 1.0 {
        p.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(Distribution(p))
}

/// The KKT threshold `τ` of [`project_simplex`].
pub fn simplex_threshold(y: &[f64]) -> f64 {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = u[0] - 1.0;
    for (k, &uk) in u.iter().enumerate() {
        cumulative += uk;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if uk - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    tau
}

/// `Σ_a p_a f_a`.
pub fn expectation(p: &Distribution, f: &[f64]) -> Result<f64> {
    if p.len() != f.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            got: f.len(),
        });
    }
    Ok(p.0.iter().zip(f).map(|(pa, fa)| pa * fa).sum())
}

/// Draws a flat index by inverse CDF in canonical order.
pub fn sample<R: Rng + ?Sized>(p: &Distribution, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &pi) in p.0.iter().enumerate() {
        if pi > 0.0 {
            cumulative += pi;
            last_positive = i;
            if u < cumulative {
                return i;
            }
        }
    }
    // rounding left the CDF just under one
    last_positive
}

pub fn l2_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(p.0
        .iter()
        .zip(&q.0)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn projection_examples() {
        assert!(close(project_simplex(&[0.4, 0.6]).unwrap().probs(), &[0.4, 0.6], 1e-15));
        assert!(close(project_simplex(&[0.5, 0.7]).unwrap().probs(), &[0.4, 0.6], 1e-12));
        assert!((simplex_threshold(&[0.5, 0.7]) - 0.1).abs() < 1e-12);
        assert_eq!(project_simplex(&[2.0, 0.0, 0.0]).unwrap().probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn projection_rejects_non_finite() {
        assert!(matches!(project_simplex(&[0.1, f64::NAN]), Err(Error::NonFinite(1))));
        assert!(project_simplex(&[]).is_err());
    }

    #[test]
    fn distribution_construction() {
        let d = Distribution::new(vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert_eq!(Distribution::point_mass(4, 2).atom(), Some(2));
        assert_eq!(Distribution::uniform(4).atom(), None);
    }

    #[test]
    fn expectation_examples() {
        let f = [3.0, 1.0, 4.0, 1.5];
        assert_eq!(expectation(&Distribution::point_mass(4, 2), &f).unwrap(), 4.0);
        assert_eq!(expectation(&Distribution::uniform(2), &[1.0, 3.0]).unwrap(), 2.0);
        assert!(matches!(
            expectation(&Distribution::uniform(3), &f),
            Err(Error::LengthMismatch { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn expectation_uniform_over_example_costs() {
        use crate::model::{reservation_cost_vector, NetworkConfig, ReservationSpace};
        let cfg = NetworkConfig::two_server_example();
        let space = ReservationSpace::new(&cfg).unwrap();
        let costs = reservation_cost_vector(&cfg, &space);
        // mean of 0.3x² over 1..7 plus mean of 0.1x³ over 1..8
        let mean_r1 = 0.3 * (1..=7).map(|x| (x * x) as f64).sum::<f64>() / 7.0;
        let mean_r2 = 0.1 * (1..=8).map(|x| (x * x * x) as f64).sum::<f64>() / 8.0;
        let e = expectation(&Distribution::uniform(56), &costs).unwrap();
        assert!((e - (mean_r1 + mean_r2)).abs() < 1e-12);
    }

    #[test]
    fn sampling_point_mass_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Distribution::point_mass(10, 7);
        assert!((0..1000).all(|_| sample(&d, &mut rng) == 7));

        let u = Distribution::uniform(56);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| sample(&u, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }

    #[test]
    fn sampling_frequencies_are_uniform() {
        let draws = 100_000;
        let u = Distribution::uniform(56);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0usize; 56];
        for _ in 0..draws {
            counts[sample(&u, &mut rng)] += 1;
        }
        let p = 1.0 / 56.0;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for c in counts {
            assert!((c as f64 / draws as f64 - p).abs() <= 5.0 * sigma);
        }
    }

    #[test]
    fn distance_examples() {
        let p = Distribution::new(vec![0.4, 0.6]).unwrap();
        let q = Distribution::uniform(2);
        assert_eq!(l2_distance(&p, &p).unwrap(), 0.0);
        let e0 = Distribution::point_mass(2, 0);
        let e1 = Distribution::point_mass(2, 1);
        assert!((l2_distance(&e0, &e1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((l2_distance(&p, &q).unwrap() - 0.02f64.sqrt()).abs() < 1e-12);
        assert!(l2_distance(&p, &Distribution::uniform(3)).is_err());
    }

    proptest! {
        #[test]
        fn projection_idempotent_and_nonexpansive(
            x in prop::collection::vec(-5.0f64..5.0, 1..30),
            shift in prop::collection::vec(-1.0f64..1.0, 30),
        ) {
            let y: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let px = project_simplex(&x).unwrap();
            let py = project_simplex(&y).unwrap();
            prop_assert!(px.probs().iter().all(|&p| p >= 0.0));
            prop_assert!((px.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let again = project_simplex(px.probs()).unwrap();
            prop_assert!(close(again.probs(), px.probs(), 1e-12));
            let dist_in: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(l2_distance(&px, &py).unwrap() <= dist_in + 1e-12);
        }

        #[test]
        fn expectation_is_bilinear(
            f in prop::collection::vec(-10.0f64..10.0, 6),
            g in prop::collection::vec(-10.0f64..10.0, 6),
            y in prop::collection::vec(-1.0f64..1.0, 6),
            z in prop::collection::vec(-1.0f64..1.0, 6),
            s in 0.0f64..1.0,
            c in -3.0f64..3.0,
        ) {
            let p = project_simplex(&y).unwrap();
            let q = project_simplex(&z).unwrap();
            let fg: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + c * b).collect();
            let lhs = expectation(&p, &fg).unwrap();
            let rhs = expectation(&p, &f).unwrap() + c * expectation(&p, &g).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
            let mix: Vec<f64> = p.probs().iter().zip(q.probs()).map(|(a, b)| s * a + (1.0 - s) * b).collect();
            let mix = Distribution::new(mix).unwrap();
            let lhs = expectation(&mix, &f).unwrap();
            let rhs = s * expectation(&p, &f).unwrap() + (1.0 - s) * expectation(&q, &f).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
