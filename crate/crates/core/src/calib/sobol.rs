//! Unscrambled Sobol sequence with Joe–Kuo direction numbers.

use crate::error::{Error, Result};

/// Primitive polynomial (with leading and trailing bits) and initial
/// direction integers for dimensions 2, 3, ...; dimension 1 is the van der
/// Corput sequence.
const JOE_KUO: &[(u32, &[u32])] = &[
    (3, &[1]),
    (7, &[1, 3]),
    (11, &[1, 3, 1]),
    (13, &[1, 1, 1]),
    (19, &[1, 1, 3, 3]),
    (25, &[1, 3, 5, 13]),
    (37, &[1, 1, 5, 5, 17]),
    (41, &[1, 1, 5, 5, 5]),
    (47, &[1, 1, 7, 11, 19]),
    (55, &[1, 1, 5, 1, 1]),
    (59, &[1, 1, 1, 3, 11]),
    (61, &[1, 3, 5, 5, 31]),
    (67, &[1, 3, 3, 9, 7, 49]),
    (91, &[1, 1, 1, 15, 21, 21]),
    (97, &[1, 3, 1, 13, 27, 49]),
    (103, &[1, 1, 1, 15, 7, 5]),
    (109, &[1, 3, 1, 15, 13, 25]),
    (115, &[1, 1, 5, 5, 19, 61]),
    (131, &[1, 3, 7, 11, 23, 15, 103]),
    (137, &[1, 3, 7, 13, 13, 15, 69]),
    (143, &[1, 1, 3, 13, 7, 35, 63]),
    (145, &[1, 3, 5, 9, 1, 25, 53]),
    (157, &[1, 3, 1, 13, 9, 35, 107]),
    (167, &[1, 3, 1, 5, 27, 61, 31]),
    (171, &[1, 1, 5, 11, 19, 41, 61]),
    (185, &[1, 3, 5, 3, 3, 13, 69]),
    (191, &[1, 1, 7, 13, 1, 19, 1]),
    (193, &[1, 3, 7, 5, 13, 19, 59]),
    (203, &[1, 1, 3, 9, 25, 29, 41]),
    (211, &[1, 3, 5, 13, 23, 1, 55]),
    (213, &[1, 3, 7, 3, 13, 59, 17]),
    (229, &[1, 3, 1, 3, 5, 53, 69]),
    (239, &[1, 1, 5, 5, 23, 33, 13]),
    (241, &[1, 1, 7, 7, 1, 61, 123]),
    (247, &[1, 1, 7, 9, 13, 61, 49]),
    (253, &[1, 3, 3, 5, 3, 55, 33]),
    (285, &[1, 3, 1, 15, 31, 13, 49, 245]),
    (299, &[1, 3, 5, 15, 31, 59, 63, 97]),
    (301, &[1, 3, 1, 11, 11, 11, 77, 249]),
];

pub const MAX_DIMENSION: usize = JOE_KUO.len() + 1;

const BITS: usize = 32;

#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl Sobol {
    /// Generator positioned after the all-zero point.
    pub fn new(dim: usize) -> Result<Sobol> {
        if dim == 0 || dim > MAX_DIMENSION {
            return Err(Error::SobolDimension {
                requested: dim,
                max: MAX_DIMENSION,
            });
        }
        let mut directions = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1 << (BITS - 1 - k);
        }
        directions.push(first);
        for &(poly, m) in JOE_KUO.iter().take(dim - 1) {
            let s = (32 - poly.leading_zeros() - 1) as usize;
            let a = (poly >> 1) & ((1 << (s - 1)) - 1);
            let mut v = [0u32; BITS];
            for k in 0..s {
                v[k] = m[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                let mut x = v[k - s] ^ (v[k - s] >> s);
                for l in 1..s {
                    if (a >> (s - 1 - l)) & 1 == 1 {
                        x ^= v[k - l];
                    }
                }
                v[k] = x;
            }
            directions.push(v);
        }
        Ok(Sobol {
            directions,
            state: vec![0; dim],
            index: 0,
        })
    }

    /// Next point in `[0, 1)^dim`.
    pub fn next_point(&mut self) -> Vec<f64> {
        let c = self.index.trailing_ones() as usize;
        assert!(c < BITS, "Sobol sequence exhausted");
        self.index += 1;
        for (x, v) in self.state.iter_mut().zip(&self.directions) {
            *x ^= v[c];
        }
        self.state.iter().map(|&x| x as f64 / (1u64 << BITS) as f64).collect()
    }
}

/// First `m` Sobol points scaled to the box `bounds`.
pub fn sobol_points(m: usize, bounds: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
    let mut seq = Sobol::new(bounds.len())?;
    Ok((0..m)
        .map(|_| {
            seq.next_point()
                .iter()
                .zip(bounds)
                .map(|(u, (lo, hi))| lo + u * (hi - lo))
                .collect()
        })
        .collect())
}

/// Squared L2-star discrepancy of points in the unit cube (Warnock's formula).
pub fn l2_star_discrepancy_sq(points: &[Vec<f64>]) -> f64 {
    let n = points.len() as f64;
    let d = points.first().map_or(0, Vec::len) as i32;
    let mut cross = 0.0;
    for x in points {
        cross += x.iter().map(|u| 1.0 - u * u).product::<f64>();
    }
    let mut pair = 0.0;
    for x in points {
        for y in points {
            pair += x.iter().zip(y).map(|(a, b)| 1.0 - a.max(*b)).product::<f64>();
        }
    }
    3f64.powi(-d) - 2f64.powi(1 - d) / n * cross + pair / (n * n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn first_points_match_reference() {
        // reference generator output with the zero point dropped
        let expected = [
            [0.5, 0.5, 0.5, 0.5],
            [0.75, 0.25, 0.25, 0.25],
            [0.25, 0.75, 0.75, 0.75],
            [0.375, 0.375, 0.625, 0.875],
            [0.875, 0.875, 0.125, 0.375],
            [0.625, 0.125, 0.875, 0.625],
            [0.125, 0.625, 0.375, 0.125],
        ];
        let pts = sobol_points(7, &[(0.0, 1.0); 4]).unwrap();
        for (p, e) in pts.iter().zip(expected) {
            assert_eq!(p.as_slice(), e.as_slice());
        }
    }

    #[test]
    fn single_point_is_centre() {
        let p = sobol_points(1, &[(0.0, 1.0); 3]).unwrap();
        assert_eq!(p, vec![vec![0.5; 3]]);
        let q = sobol_points(1, &[(0.0, 1.5), (0.0, 1.5), (0.0, 1.0)]).unwrap();
        assert_eq!(q, vec![vec![0.75, 0.75, 0.5]]);
    }

    #[test]
    fn dimension_limits() {
        assert!(Sobol::new(0).is_err());
        assert!(Sobol::new(MAX_DIMENSION).is_ok());
        assert!(matches!(
            Sobol::new(MAX_DIMENSION + 1),
            Err(Error::SobolDimension { .. })
        ));
    }

    #[test]
    fn points_stay_in_box() {
        let bounds = [(-2.0, 1.0), (0.0, 1.5), (0.3, 0.4)];
        for p in sobol_points(500, &bounds).unwrap() {
            for (x, (lo, hi)) in p.iter().zip(bounds) {
                assert!(*x >= lo && *x < hi);
            }
        }
    }

    #[test]
    fn more_uniform_than_random() {
        let sobol = sobol_points(256, &[(0.0, 1.0); 3]).unwrap();
        let d_sobol = l2_star_discrepancy_sq(&sobol);
        for seed in 0..20 {
            let mut rng = stream(seed, 0);
            let random: Vec<Vec<f64>> = (0..256).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
            assert!(d_sobol < l2_star_discrepancy_sq(&random), "seed {seed}");
        }
    }
}
