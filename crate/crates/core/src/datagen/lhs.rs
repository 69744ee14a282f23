//! Latin-hypercube sampling: every dimension is split into `n` strata and
//! each stratum receives exactly one sample.

use super::DatagenError;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SampleDesign {
    pub n_points: usize,
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

/// Returns an `n_points x dims` matrix with stratified marginals.
pub fn lhs(design: &SampleDesign) -> Result<Vec<Vec<f64>>, DatagenError> {
    if design.n_points == 0 {
        return Err(DatagenError::InvalidArgument("n_points must be > 0".into()));
    }
    for (lo, hi) in &design.bounds {
        if !(lo < hi) {
            return Err(DatagenError::InvalidArgument(format!(
                "bound [{lo}, {hi}] must satisfy lo < hi"
            )));
        }
    }
    let n = design.n_points;
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let mut points = vec![vec![0.0; design.bounds.len()]; n];
    for (j, (lo, hi)) in design.bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        for i in 0..n {
            let u: f64 = rng.random_range(0.0..1.0);
            let frac = (strata[i] as f64 + u) / n as f64;
            points[i][j] = lo + frac * (hi - lo);
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_points_fill_the_four_quarters() {
        let d = SampleDesign {
            n_points: 4,
            bounds: vec![(0.0, 1.0)],
            seed: 0,
        };
        let pts = lhs(&d).unwrap();
        let mut hit = [false; 4];
        for p in &pts {
            let bin = ((p[0] * 4.0).floor() as usize).min(3);
            assert!(!hit[bin], "two samples in stratum {bin}");
            hit[bin] = true;
        }
        assert!(hit.iter().all(|h| *h));
    }

    #[test]
    fn marginals_stratified_in_two_dims() {
        let d = SampleDesign {
            n_points: 100,
            bounds: vec![(0.0, 1.0), (-5.0, 5.0)],
            seed: 3,
        };
        let pts = lhs(&d).unwrap();
        for j in 0..2 {
            let (lo, hi) = d.bounds[j];
            let mut hit = vec![false; 100];
            for p in &pts {
                let bin = (((p[j] - lo) / (hi - lo) * 100.0).floor() as usize).min(99);
                assert!(!hit[bin]);
                hit[bin] = true;
            }
        }
    }

    #[test]
    fn seeded_design_reproduces() {
        let d = SampleDesign {
            n_points: 17,
            bounds: vec![(0.0, 2.0), (1.0, 3.0)],
            seed: 42,
        };
        assert_eq!(lhs(&d).unwrap(), lhs(&d).unwrap());
    }

    #[test]
    fn zero_points_is_argument_error() {
        let d = SampleDesign {
            n_points: 0,
            bounds: vec![(0.0, 1.0)],
            seed: 0,
        };
        assert!(matches!(lhs(&d), Err(DatagenError::InvalidArgument(_))));
    }

    proptest! {
        #[test]
        fn every_dimension_stratified(n in 1usize..40, seed in any::<u64>()) {
            let d = SampleDesign {
                n_points: n,
                bounds: vec![(0.0, 1.0), (10.0, 20.0), (-1.0, 1.0)],
                seed,
            };
            let pts = lhs(&d).unwrap();
            for j in 0..3 {
                let (lo, hi) = d.bounds[j];
                let mut hit = vec![false; n];
                for p in &pts {
                    prop_assert!(p[j] >= lo && p[j] <= hi);
                    let bin = (((p[j] - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1);
                    prop_assert!(!hit[bin]);
                    hit[bin] = true;
                }
            }
        }
    }
}
