//! Flat tori 𝕋¹ and 𝕋² with normalized Lebesgue volume.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::par;
use crate::{Error, Result};

/// Default basis truncation on the circle.
pub const DEFAULT_K_CIRCLE: usize = 8;
/// Default basis truncation on the 2-torus.
pub const DEFAULT_K_TORUS: usize = 12;

/// Reduces a real number into `[0, 1)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid rounds tiny negatives up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point of 𝕋¹ or 𝕋², coordinates in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: u8,
}

impl Point {
    pub fn circle(x: f64) -> Self {
        Self { coords: [wrap(x), 0.0], dim: 1 }
    }

    pub fn torus(x: f64, y: f64) -> Self {
        Self { coords: [wrap(x), wrap(y)], dim: 2 }
    }

    /// Builds a point from a coordinate slice of length 1 or 2.
    pub fn new(coords: &[f64]) -> Result<Self> {
        match *coords {
            [x] => Ok(Self::circle(x)),
            [x, y] => Ok(Self::torus(x, y)),
            _ => Err(Error::InvalidParameter(format!("points have 1 or 2 coordinates, got {}", coords.len()))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }
}

/// `N` uniform points on the `d`-torus. Point `i` depends only on `(seed, i)`.
pub fn sample_uniform(d: usize, n: usize, seed: u64) -> Vec<Point> {
    assert!(d == 1 || d == 2, "dimension must be 1 or 2");
    par::map_chunks(n, |range| {
        let mut rng = point_stream(seed, d, range.start);
        range.map(|_| draw_point(&mut rng, d)).collect::<Vec<_>>()
    })
    .concat()
}

/// RNG positioned at the start of point `index` in the stream for `seed`.
pub(crate) fn point_stream(seed: u64, d: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // one f64 draw consumes two 32-bit words
    rng.set_word_pos(index as u128 * 2 * d as u128);
    rng
}

#[inline]
pub(crate) fn draw_point(rng: &mut ChaCha8Rng, d: usize) -> Point {
    if d == 1 {
        Point::circle(rng.random::<f64>())
    } else {
        let x = rng.random::<f64>();
        Point::torus(x, rng.random::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Harmonic {
    One,
    Cos(u32),
    Sin(u32),
}

impl Harmonic {
    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            Harmonic::One => 1.0,
            Harmonic::Cos(j) => (TAU * j as f64 * x).cos(),
            Harmonic::Sin(j) => (TAU * j as f64 * x).sin(),
        }
    }

    fn split(j: u32) -> Vec<Harmonic> {
        if j == 0 {
            vec![Harmonic::One]
        } else {
            vec![Harmonic::Cos(j), Harmonic::Sin(j)]
        }
    }

    fn label(self, var: &str) -> String {
        match self {
            Harmonic::One => String::new(),
            Harmonic::Cos(j) => format!("cos(2π·{j}{var})"),
            Harmonic::Sin(j) => format!("sin(2π·{j}{var})"),
        }
    }
}

/// The normalized test family `g_1, …, g_K`, each with sup-norm 1.
///
/// On 𝕋¹: `g_{2j-1} = cos(2πjx)`, `g_{2j} = sin(2πjx)`. On 𝕋² the functions
/// are products `h_a(x)·h_b(y)` over frequency pairs `(a, b) ≠ (0, 0)`,
/// grouped in shells of increasing `max(a, b)`, lexicographic in `(a, b)`
/// within a shell; each pair contributes its cos/sin products with cos first
/// and the `x` factor varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionBasis {
    dim: usize,
    terms: Vec<(Harmonic, Harmonic)>,
}

impl TestFunctionBasis {
    pub fn new(dim: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("basis truncation must be at least 1".into()));
        }
        let mut terms = Vec::with_capacity(k);
        match dim {
            1 => {
                let mut j = 1;
                while terms.len() < k {
                    terms.push((Harmonic::Cos(j), Harmonic::One));
                    terms.push((Harmonic::Sin(j), Harmonic::One));
                    j += 1;
                }
            }
            2 => {
                let mut shell = 1u32;
                while terms.len() < k {
                    for a in 0..=shell {
                        for b in 0..=shell {
                            if a.max(b) != shell {
                                continue;
                            }
                            for ha in Harmonic::split(a) {
                                for hb in Harmonic::split(b) {
                                    terms.push((ha, hb));
                                }
                            }
                        }
                    }
                    shell += 1;
                }
            }
            _ => return Err(Error::InvalidParameter(format!("unsupported dimension {dim}"))),
        }
        terms.truncate(k);
        Ok(Self { dim, terms })
    }

    /// Basis with the default truncation for the dimension.
    pub fn default_for(dim: usize) -> Result<Self> {
        Self::new(dim, if dim == 2 { DEFAULT_K_TORUS } else { DEFAULT_K_CIRCLE })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluates `g_k` (1-based, as in the weak metric's `2^{-k}` weights).
    #[inline]
    pub fn g(&self, k: usize, p: &Point) -> f64 {
        let (a, b) = self.terms[k - 1];
        a.eval(p.x()) * b.eval(p.y())
    }

    /// Writes `g_1(p), …, g_K(p)` into `out`.
    pub fn eval_all(&self, p: &Point, out: &mut [f64]) {
        for (o, &(a, b)) in out.iter_mut().zip(&self.terms) {
            *o = a.eval(p.x()) * b.eval(p.y());
        }
    }

    /// Human-readable name of `g_k`.
    pub fn label(&self, k: usize) -> String {
        let (a, b) = self.terms[k - 1];
        if self.dim == 1 {
            return a.label("x");
        }
        match (a.label("x"), b.label("y")) {
            (l, r) if l.is_empty() => r,
            (l, r) if r.is_empty() => l,
            (l, r) => format!("{l}·{r}"),
        }
    }
}

/// Truncated weak-star distance `Σ_{k≤K} 2^{-k} |a_k − b_k|` between moment vectors.
pub fn weak_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let mut weight = 1.0;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| {
            weight *= 0.5;
            weight * (x - y).abs()
        })
        .sum())
}

/// Bound on the metric terms dropped by truncating at `K`: `Σ_{k>K} 2^{-k}·2`.
pub fn weak_distance_tail_bound(k: usize) -> f64 {
    0.5f64.powi(k as i32 - 1)
}

/// A probability measure on the uniform `m^d` cell partition.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramMeasure {
    pub dim: usize,
    pub bins: usize,
    /// Row-major masses; on 𝕋² index `i * bins + j` is cell `(x_i, y_j)`.
    pub masses: Vec<f64>,
}

impl HistogramMeasure {
    pub fn cell_of(&self, p: &Point) -> usize {
        let m = self.bins;
        let idx = |c: f64| ((c * m as f64) as usize).min(m - 1);
        match self.dim {
            1 => idx(p.x()),
            _ => idx(p.x()) * m + idx(p.y()),
        }
    }

    pub fn max_deviation_from_uniform(&self) -> f64 {
        let u = 1.0 / self.masses.len() as f64;
        self.masses.iter().map(|m| (m - u).abs()).fold(0.0, f64::max)
    }
}

/// Weighted histogram of points over `m` bins per axis.
pub fn histogram(points: &[(Point, f64)], m: usize) -> Result<HistogramMeasure> {
    if m == 0 {
        return Err(Error::InvalidParameter("bins per axis must be positive".into()));
    }
    let dim = points.first().map_or(1, |(p, _)| p.dim());
    let mut h = HistogramMeasure { dim, bins: m, masses: vec![0.0; m.pow(dim as u32)] };
    let mut total = 0.0;
    for &(p, w) in points {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidWeight(w));
        }
        if p.dim() != dim {
            return Err(Error::LengthMismatch { left: dim, right: p.dim() });
        }
        let c = h.cell_of(&p);
        h.masses[c] += w;
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::ZeroWeights);
    }
    h.masses.iter_mut().for_each(|x| *x /= total);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_stays_in_unit_interval() {
        assert_eq!(wrap(1.0), 0.0);
        assert_eq!(wrap(-1e-18), 0.0);
        assert!((wrap(-0.25) - 0.75).abs() < 1e-15);
        assert!((Point::torus(1.5, 1.0).x() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_reproducible() {
        assert_eq!(sample_uniform(1, 3, 17), sample_uniform(1, 3, 17));
        assert_ne!(sample_uniform(1, 3, 17), sample_uniform(1, 3, 18));
        let p = sample_uniform(2, 1, 5);
        assert_eq!(p.len(), 1);
        assert!(p[0].coords().iter().all(|c| (0.0..1.0).contains(c)));
    }

    #[test]
    fn sample_stream_depends_only_on_index() {
        let long = sample_uniform(2, par::CHUNK + 10, 9);
        let mut rng = point_stream(9, 2, par::CHUNK + 3);
        assert_eq!(draw_point(&mut rng, 2), long[par::CHUNK + 3]);
    }

    #[test]
    fn uniform_mean_is_one_half() {
        let n = 100_000;
        let pts = sample_uniform(1, n, 1);
        let mean = pts.iter().map(|p| p.x()).sum::<f64>() / n as f64;
        let tol = 3.0 * (1.0 / 12f64.sqrt()) / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < tol, "mean {mean}");
    }

    #[test]
    fn circle_basis_ordering() {
        let b = TestFunctionBasis::new(1, 4).unwrap();
        let p = Point::circle(0.125);
        assert!((b.g(1, &p) - (TAU / 8.0).cos()).abs() < 1e-15);
        assert!((b.g(2, &p) - (TAU / 8.0).sin()).abs() < 1e-15);
        assert!((b.g(3, &p) - 0.0).abs() < 1e-15);
        assert!((b.g(4, &p) - 1.0).abs() < 1e-15);
        assert_eq!(b.label(3), "cos(2π·2x)");
    }

    #[test]
    fn torus_basis_ordering() {
        let b = TestFunctionBasis::new(2, 12).unwrap();
        let labels: Vec<_> = (1..=12).map(|k| b.label(k)).collect();
        assert_eq!(labels[0], "cos(2π·1y)");
        assert_eq!(labels[1], "sin(2π·1y)");
        assert_eq!(labels[2], "cos(2π·1x)");
        assert_eq!(labels[4], "cos(2π·1x)·cos(2π·1y)");
        assert_eq!(labels[7], "sin(2π·1x)·sin(2π·1y)");
        assert_eq!(labels[8], "cos(2π·2y)");
        assert_eq!(labels[10], "cos(2π·1x)·cos(2π·2y)");
        let mut out = vec![0.0; 12];
        b.eval_all(&Point::torus(0.0, 0.0), &mut out);
        assert_eq!(out.iter().filter(|&&v| v == 1.0).count(), 5);
    }

    #[test]
    fn basis_elements_bounded_by_one() {
        for (d, k) in [(1, 8), (2, 12), (2, 30)] {
            let b = TestFunctionBasis::new(d, k).unwrap();
            let mut out = vec![0.0; k];
            for p in sample_uniform(d, 10_000, 3) {
                b.eval_all(&p, &mut out);
                assert!(out.iter().all(|v| v.abs() <= 1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn dirac_vs_lebesgue_distance() {
        // δ_0 has cos moments 1 and sin moments 0; Lebesgue has all zero
        let dirac = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let d = weak_distance(&dirac, &[0.0; 8]).unwrap();
        assert_eq!(d, 85.0 / 128.0);
        assert_eq!(weak_distance(&dirac, &dirac).unwrap(), 0.0);
        assert!(matches!(weak_distance(&[0.0], &[0.0, 1.0]), Err(Error::LengthMismatch { .. })));
        assert_eq!(weak_distance_tail_bound(8), 1.0 / 128.0);
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&[(Point::circle(0.3), 1.0)], 4).unwrap();
        assert_eq!(h.masses, vec![0.0, 1.0, 0.0, 0.0]);
        let h = histogram(&[(Point::circle(0.3), 1.0), (Point::circle(0.31), 3.0)], 4).unwrap();
        assert_eq!(h.masses[1], 1.0);
        assert_eq!(histogram(&[(Point::circle(0.3), 0.0)], 4), Err(Error::ZeroWeights));
        assert_eq!(histogram(&[(Point::circle(0.3), -1.0)], 4), Err(Error::InvalidWeight(-1.0)));
        let h = histogram(&[(Point::torus(0.9, 0.1), 2.0)], 2).unwrap();
        assert_eq!(h.masses, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn uniform_histogram_is_flat() {
        let pts: Vec<_> = sample_uniform(1, 100_000, 2).into_iter().map(|p| (p, 1.0)).collect();
        let h = histogram(&pts, 16).unwrap();
        assert!(h.max_deviation_from_uniform() < 0.01);
    }

    fn moment_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 8)
    }

    proptest! {
        #[test]
        fn weak_distance_is_a_metric(a in moment_vec(), b in moment_vec(), c in moment_vec()) {
            let ab = weak_distance(&a, &b).unwrap();
            let ba = weak_distance(&b, &a).unwrap();
            let ac = weak_distance(&a, &c).unwrap();
            let cb = weak_distance(&c, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ba);
            prop_assert!(ab <= ac + cb + 1e-15);
            prop_assert!(ab <= 2.0);
            prop_assert_eq!(weak_distance(&a, &a).unwrap(), 0.0);
            if a != b {
                prop_assert!(ab > 0.0);
            }
        }

        #[test]
        fn histogram_masses_sum_to_one(
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..10.0), 1..200),
            m in 1usize..20,
        ) {
            let weighted: Vec<_> = pts.iter().map(|&(x, y, w)| (Point::torus(x, y), w + 1e-3)).collect();
            let h = histogram(&weighted, m).unwrap();
            prop_assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(h.masses.iter().all(|&x| x >= 0.0));
        }
    }
}
