//! Benchmark smooth maps and potentials.

use std::f64::consts::TAU;
use std::fmt;

use crate::manifold::{sample_uniform, Point, TestFunctionBasis};
use crate::{Error, Result};

/// Jacobian of a map of 𝕋¹ (`dim == 1`, only `m[0][0]` used) or 𝕋².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian {
    pub dim: usize,
    pub m: [[f64; 2]; 2],
}

impl Jacobian {
    pub fn scalar(a: f64) -> Self {
        Self { dim: 1, m: [[a, 0.0], [0.0, 0.0]] }
    }

    pub fn matrix(m: [[f64; 2]; 2]) -> Self {
        Self { dim: 2, m }
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.m[0][0],
            _ => self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0],
        }
    }

    /// Sup-norm distance between entries.
    pub fn max_abs_diff(&self, other: &Jacobian) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// `x ↦ kx + ε sin(2πx) mod 1`.
    ExpandingCircle { k: u32, eps: f64 },
    /// `x ↦ Mx mod 1` on 𝕋².
    TorusEndomorphism { m: [[i64; 2]; 2] },
}

/// Constants known in closed form for a registered system.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnownConstants {
    pub topological_entropy: Option<f64>,
}

/// A smooth self-map of 𝕋¹ or 𝕋² with an exact Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSystem {
    pub name: String,
    pub kind: MapKind,
    pub known: KnownConstants,
}

/// `f(x) = kx + ε sin(2πx) mod 1`, requiring `k − 2π|ε| > 1`.
pub fn make_expanding_circle(k: u32, eps: f64) -> Result<SmoothSystem> {
    if k < 2 {
        return Err(Error::InvalidSystem(format!("degree k = {k} must be at least 2")));
    }
    if !eps.is_finite() || k as f64 - TAU * eps.abs() <= 1.0 {
        return Err(Error::InvalidSystem(format!(
            "expansion condition k - 2π|ε| > 1 violated for k = {k}, ε = {eps}"
        )));
    }
    let name = if eps == 0.0 { format!("times-{k}") } else { format!("expanding(k={k}, eps={eps})") };
    Ok(SmoothSystem {
        name,
        kind: MapKind::ExpandingCircle { k, eps },
        known: KnownConstants { topological_entropy: Some((k as f64).ln()) },
    })
}

/// `x ↦ Mx mod 1` on 𝕋² for a nonsingular integer matrix.
pub fn make_torus_endomorphism(m: [[i64; 2]; 2]) -> Result<SmoothSystem> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0 {
        return Err(Error::InvalidSystem(format!("singular matrix {m:?}")));
    }
    let name = if m == [[2, 1], [1, 1]] { "cat".to_string() } else { format!("torus{m:?}") };
    Ok(SmoothSystem {
        name,
        kind: MapKind::TorusEndomorphism { m },
        known: KnownConstants { topological_entropy: Some(toral_entropy(m)) },
    })
}

/// `Σ log max(1, |λ_i|)` over the eigenvalues of `M`.
fn toral_entropy(m: [[i64; 2]; 2]) -> f64 {
    let tr = (m[0][0] + m[1][1]) as f64;
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) as f64;
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // larger root computed without cancellation
        let big = (tr.abs() + s) / 2.0;
        let small = if big > 0.0 { det.abs() / big } else { 0.0 };
        big.max(1.0).ln() + small.max(1.0).ln()
    } else {
        // complex pair of modulus sqrt(det)
        2.0 * det.abs().sqrt().max(1.0).ln()
    }
}

/// The doubling map `x ↦ 2x mod 1`.
pub fn doubling() -> SmoothSystem {
    make_expanding_circle(2, 0.0).expect("doubling map is expanding")
}

/// Arnold's cat map `[[2, 1], [1, 1]]`.
pub fn cat_map() -> SmoothSystem {
    make_torus_endomorphism([[2, 1], [1, 1]]).expect("cat map is nonsingular")
}

impl SmoothSystem {
    pub fn dim(&self) -> usize {
        match self.kind {
            MapKind::ExpandingCircle { .. } => 1,
            MapKind::TorusEndomorphism { .. } => 2,
        }
    }

    /// Number of preimages of a point.
    pub fn degree(&self) -> u64 {
        match self.kind {
            MapKind::ExpandingCircle { k, .. } => k as u64,
            MapKind::TorusEndomorphism { m } => (m[0][0] * m[1][1] - m[0][1] * m[1][0]).unsigned_abs(),
        }
    }

    #[inline]
    pub fn apply(&self, p: &Point) -> Point {
        match self.kind {
            MapKind::ExpandingCircle { k, eps } => Point::circle(self.lift(p.x(), k, eps)),
            MapKind::TorusEndomorphism { m } => {
                let (x, y) = (p.x(), p.y());
                Point::torus(
                    m[0][0] as f64 * x + m[0][1] as f64 * y,
                    m[1][0] as f64 * x + m[1][1] as f64 * y,
                )
            }
        }
    }

    #[inline]
    fn lift(&self, x: f64, k: u32, eps: f64) -> f64 {
        if eps == 0.0 {
            k as f64 * x
        } else {
            k as f64 * x + eps * (TAU * x).sin()
        }
    }

    /// The lift `F: ℝ → ℝ` of an expanding circle map, with `F(x + 1) = F(x) + k`.
    pub fn circle_lift(&self, x: f64) -> Option<f64> {
        match self.kind {
            MapKind::ExpandingCircle { k, eps } => Some(self.lift(x, k, eps)),
            MapKind::TorusEndomorphism { .. } => None,
        }
    }

    #[inline]
    pub fn jacobian(&self, p: &Point) -> Jacobian {
        match self.kind {
            MapKind::ExpandingCircle { k, eps } => Jacobian::scalar(k as f64 + TAU * eps * (TAU * p.x()).cos()),
            MapKind::TorusEndomorphism { m } => Jacobian::matrix([
                [m[0][0] as f64, m[0][1] as f64],
                [m[1][0] as f64, m[1][1] as f64],
            ]),
        }
    }

    /// Bounds on `|det Df|` over the manifold.
    pub fn det_range(&self) -> (f64, f64) {
        match self.kind {
            MapKind::ExpandingCircle { k, eps } => {
                let k = k as f64;
                (k - TAU * eps.abs(), k + TAU * eps.abs())
            }
            MapKind::TorusEndomorphism { .. } => {
                let d = self.degree() as f64;
                (d, d)
            }
        }
    }

    /// Central finite-difference Jacobian at step `h`.
    pub fn jacobian_fd(&self, p: &Point, h: f64) -> Jacobian {
        let diff = |a: f64, b: f64| {
            let d = a - b;
            d - d.round()
        };
        match self.dim() {
            1 => {
                let fp = self.apply(&Point::circle(p.x() + h));
                let fm = self.apply(&Point::circle(p.x() - h));
                Jacobian::scalar(diff(fp.x(), fm.x()) / (2.0 * h))
            }
            _ => {
                let mut m = [[0.0; 2]; 2];
                for j in 0..2 {
                    let mut plus = [p.x(), p.y()];
                    let mut minus = plus;
                    plus[j] += h;
                    minus[j] -= h;
                    let fp = self.apply(&Point::torus(plus[0], plus[1]));
                    let fm = self.apply(&Point::torus(minus[0], minus[1]));
                    m[0][j] = diff(fp.x(), fm.x()) / (2.0 * h);
                    m[1][j] = diff(fp.y(), fm.y()) / (2.0 * h);
                }
                Jacobian::matrix(m)
            }
        }
    }
}

impl fmt::Display for SmoothSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Max over `n` random points of the sup-norm gap between the analytic and
/// the finite-difference Jacobian (step `1e-5`).
pub fn jacobian_selfcheck(system: &SmoothSystem, n: usize, seed: u64) -> f64 {
    sample_uniform(system.dim(), n, seed)
        .iter()
        .map(|p| system.jacobian(p).max_abs_diff(&system.jacobian_fd(p, 1e-5)))
        .fold(0.0, f64::max)
}

/// A finite linear combination `Σ c_k g_k` of test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    basis: TestFunctionBasis,
    terms: Vec<(usize, f64)>,
}

impl TrigPolynomial {
    /// Terms are `(k, c_k)` with 1-based basis index `k`.
    pub fn new(dim: usize, terms: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(&(k, c)) = terms.iter().find(|&&(k, c)| k == 0 || !c.is_finite()) {
            return Err(Error::InvalidPotential(format!("bad term g{k} with coefficient {c}")));
        }
        let kmax = terms.iter().map(|t| t.0).max().unwrap_or(1);
        Ok(Self { basis: TestFunctionBasis::new(dim, kmax)?, terms })
    }

    /// Parses `cos1:0.5, sin2:-0.1, g5:0.3`. `cosJ`/`sinJ` are circle-only
    /// aliases for `g_{2J-1}`/`g_{2J}`.
    pub fn parse(dim: usize, text: &str) -> Result<Self> {
        let bad = |t: &str| Error::InvalidPotential(format!("cannot parse trig term '{t}'"));
        let mut terms = Vec::new();
        for raw in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (name, coeff) = raw.split_once(':').ok_or_else(|| bad(raw))?;
            let coeff: f64 = coeff.trim().parse().map_err(|_| bad(raw))?;
            let name = name.trim();
            let k = if let Some(j) = name.strip_prefix("cos") {
                let j: usize = j.parse().map_err(|_| bad(raw))?;
                if dim != 1 || j == 0 {
                    return Err(bad(raw));
                }
                2 * j - 1
            } else if let Some(j) = name.strip_prefix("sin") {
                let j: usize = j.parse().map_err(|_| bad(raw))?;
                if dim != 1 || j == 0 {
                    return Err(bad(raw));
                }
                2 * j
            } else if let Some(k) = name.strip_prefix('g') {
                k.parse().map_err(|_| bad(raw))?
            } else {
                return Err(bad(raw));
            };
            terms.push((k, coeff));
        }
        if terms.is_empty() {
            return Err(Error::InvalidPotential("trig polynomial has no terms".into()));
        }
        Self::new(dim, terms)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        self.terms.iter().map(|&(k, c)| c * self.basis.g(k, p)).sum()
    }
}

/// A continuous potential `γ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Constant(f64),
    Trig(TrigPolynomial),
    /// `−t·log|det Df|` for the given system.
    Geometric { t: f64, system: Box<SmoothSystem> },
    Sum(Vec<Potential>),
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Constant(0.0)
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::InvalidPotential(format!("constant {c} is not finite")));
        }
        Ok(Potential::Constant(c))
    }

    pub fn trig(dim: usize, terms: Vec<(usize, f64)>) -> Result<Self> {
        TrigPolynomial::new(dim, terms).map(Potential::Trig)
    }

    /// `−t·log|det Df|`; requires `|det Df|` bounded away from zero.
    pub fn geometric(t: f64, system: &SmoothSystem) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidPotential(format!("geometric exponent {t} is not finite")));
        }
        if system.det_range().0 <= 0.0 {
            return Err(Error::InvalidPotential(format!("|det Df| vanishes for {system}")));
        }
        Ok(Potential::Geometric { t, system: Box::new(system.clone()) })
    }

    /// Dimension the potential is tied to, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Potential::Constant(_) => None,
            Potential::Trig(p) => Some(p.dim()),
            Potential::Geometric { system, .. } => Some(system.dim()),
            Potential::Sum(parts) => parts.iter().find_map(Potential::dim),
        }
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Trig(t) => t.eval(p),
            Potential::Geometric { t, system } => -t * system.jacobian(p).det().abs().ln(),
            Potential::Sum(parts) => parts.iter().fold(0.0, |acc, q| acc + q.eval(p)),
        }
    }

    /// Upper bound on `sup |γ|`.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Potential::Constant(c) => c.abs(),
            Potential::Trig(t) => t.terms().iter().map(|(_, c)| c.abs()).sum(),
            Potential::Geometric { t, system } => {
                let (lo, hi) = system.det_range();
                t.abs() * lo.ln().abs().max(hi.ln().abs())
            }
            Potential::Sum(parts) => parts.iter().map(Potential::sup_bound).sum(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Potential::Constant(c) => format!("{c}"),
            Potential::Trig(t) => t
                .terms()
                .iter()
                .map(|(k, c)| format!("{c}·g{k}"))
                .collect::<Vec<_>>()
                .join(" + "),
            Potential::Geometric { t, .. } => format!("-{t}·log|det Df|"),
            Potential::Sum(parts) => parts.iter().map(Potential::name).collect::<Vec<_>>().join(" + "),
        }
    }

    /// `Σ β_j g_{k_j}` on the given observables.
    pub fn tilt(dim: usize, observables: &[usize], beta: &[f64]) -> Result<Self> {
        Self::trig(dim, observables.iter().copied().zip(beta.iter().copied()).collect())
    }
}

impl std::ops::Add for Potential {
    type Output = Potential;

    fn add(self, rhs: Potential) -> Potential {
        let mut parts = match self {
            Potential::Sum(p) => p,
            other => vec![other],
        };
        match rhs {
            Potential::Sum(p) => parts.extend(p),
            other => parts.push(other),
        }
        Potential::Sum(parts)
    }
}

/// Checks that a potential can be used with a system.
pub fn check_compatible(system: &SmoothSystem, potential: &Potential) -> Result<()> {
    match potential.dim() {
        Some(d) if d != system.dim() => Err(Error::InvalidPotential(format!(
            "potential lives on a {d}-torus but {system} acts on a {}-torus",
            system.dim()
        ))),
        _ => Ok(()),
    }
}
