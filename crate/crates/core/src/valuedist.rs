//! Value distributions, virtual values and ironing.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Number of quantile grid points used to iron tabulated distributions.
pub const IRONING_GRID: usize = 10_001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Exponential { mean: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `(value, cdf)` knots of a piecewise-linear CDF.
    Tabulated { points: Vec<(f64, f64)> },
}

/// Piecewise-linear CDF through strictly increasing knots from cdf 0 to cdf 1.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedCdf {
    points: Arc<[(f64, f64)]>,
}

impl TabulatedCdf {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return input("tabulated CDF needs at least two knots");
        }
        if points.iter().any(|(v, c)| !v.is_finite() || !c.is_finite()) {
            return input("tabulated CDF has non-finite entries");
        }
        if points[0].0 < 0.0 {
            return input("values must be non-negative");
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return input(format!("tabulated CDF is not strictly increasing at value {}", w[1].0));
            }
        }
        if points[0].1 != 0.0 || points[points.len() - 1].1 != 1.0 {
            return input("tabulated CDF must start at 0 and end at 1");
        }
        Ok(TabulatedCdf { points: points.into() })
    }

    /// Reads two columns `value,cdf`; a non-numeric first row is taken as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
        let mut points = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return input(format!("{}: row {k} has fewer than two columns", path.display()));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(v), Ok(c)) => points.push((v, c)),
                _ if k == 0 => continue,
                _ => return input(format!("{}: row {k} is not numeric", path.display())),
            }
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn segment(&self, v: f64) -> usize {
        let p = &self.points;
        match p.binary_search_by(|x| x.0.total_cmp(&v)) {
            Ok(k) => k.min(p.len() - 2),
            Err(k) => k.saturating_sub(1).min(p.len() - 2),
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        let p = &self.points;
        if v <= p[0].0 {
            return 0.0;
        }
        if v >= p[p.len() - 1].0 {
            return 1.0;
        }
        let k = self.segment(v);
        let (v0, c0) = p[k];
        let (v1, c1) = p[k + 1];
        c0 + (c1 - c0) * (v - v0) / (v1 - v0)
    }

    /// Density on the segment containing `v` (right segment at a knot).
    pub fn pdf(&self, v: f64) -> f64 {
        let p = &self.points;
        if v < p[0].0 || v > p[p.len() - 1].0 {
            return 0.0;
        }
        let k = self.segment(v);
        (p[k + 1].1 - p[k].1) / (p[k + 1].0 - p[k].0)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let p = &self.points;
        let u = u.clamp(0.0, 1.0);
        let k = match p.binary_search_by(|x| x.1.total_cmp(&u)) {
            Ok(k) => return p[k].0,
            Err(k) => k.clamp(1, p.len() - 1) - 1,
        };
        let (v0, c0) = p[k];
        let (v1, c1) = p[k + 1];
        v0 + (v1 - v0) * (u - c0) / (c1 - c0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ValueDistribution {
    Exponential { mean: f64 },
    Uniform { lo: f64, hi: f64 },
    Tabulated(TabulatedCdf),
}

impl ValueDistribution {
    pub fn exponential(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return input(format!("exponential mean must be positive, got {mean}"));
        }
        Ok(ValueDistribution::Exponential { mean })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return input(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]"));
        }
        Ok(ValueDistribution::Uniform { lo, hi })
    }

    pub fn from_spec(spec: &DistSpec) -> Result<Self> {
        match spec {
            DistSpec::Exponential { mean } => Self::exponential(*mean),
            DistSpec::Uniform { lo, hi } => Self::uniform(*lo, *hi),
            DistSpec::Tabulated { points } => Ok(ValueDistribution::Tabulated(TabulatedCdf::new(points.clone())?)),
        }
    }

    pub fn spec(&self) -> DistSpec {
        match self {
            ValueDistribution::Exponential { mean } => DistSpec::Exponential { mean: *mean },
            ValueDistribution::Uniform { lo, hi } => DistSpec::Uniform { lo: *lo, hi: *hi },
            ValueDistribution::Tabulated(t) => DistSpec::Tabulated { points: t.points().to_vec() },
        }
    }

    /// Support bounds; the upper bound is infinite for the exponential.
    pub fn support(&self) -> (f64, f64) {
        match self {
            ValueDistribution::Exponential { .. } => (0.0, f64::INFINITY),
            ValueDistribution::Uniform { lo, hi } => (*lo, *hi),
            ValueDistribution::Tabulated(t) => (t.points[0].0, t.points[t.points.len() - 1].0),
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        match self {
            ValueDistribution::Exponential { mean } => {
                if v <= 0.0 {
                    0.0
                } else {
                    -(-v / mean).exp_m1()
                }
            }
            ValueDistribution::Uniform { lo, hi } => ((v - lo) / (hi - lo)).clamp(0.0, 1.0),
            ValueDistribution::Tabulated(t) => t.cdf(v),
        }
    }

    pub fn pdf(&self, v: f64) -> f64 {
        match self {
            ValueDistribution::Exponential { mean } => {
                if v < 0.0 {
                    0.0
                } else {
                    (-v / mean).exp() / mean
                }
            }
            ValueDistribution::Uniform { lo, hi } => {
                if v < *lo || v > *hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
            ValueDistribution::Tabulated(t) => t.pdf(v),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            ValueDistribution::Exponential { mean } => -mean * (-u).ln_1p(),
            ValueDistribution::Uniform { lo, hi } => lo + u * (hi - lo),
            ValueDistribution::Tabulated(t) => t.quantile(u),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.gen::<f64>())
    }

    /// Raw virtual value `v - (1 - F(v)) / f(v)`.
    pub fn virtual_value(&self, v: f64) -> f64 {
        match self {
            ValueDistribution::Exponential { mean } => v - mean,
            ValueDistribution::Uniform { hi, .. } => 2.0 * v - hi,
            ValueDistribution::Tabulated(t) => {
                let f = t.pdf(v);
                if f <= 0.0 {
                    v
                } else {
                    v - (1.0 - t.cdf(v)) / f
                }
            }
        }
    }
}

/// Ironed revenue-curve slopes on the quantile grid.
#[derive(Debug)]
struct Ironing {
    /// Hull slope on cell `j`, between grid points `j` and `j + 1`.
    slopes: Vec<f64>,
    /// Cell lies on a hull edge spanning several cells.
    flat: Vec<bool>,
    intervals: Vec<(f64, f64)>,
}

impl Ironing {
    fn build(t: &TabulatedCdf) -> Self {
        let n = IRONING_GRID;
        let step = 1.0 / (n - 1) as f64;
        let q: Vec<f64> = (0..n).map(|j| j as f64 * step).collect();
        let v: Vec<f64> = q.iter().map(|&qj| t.quantile(1.0 - qj)).collect();
        let r: Vec<f64> = q.iter().zip(&v).map(|(a, b)| a * b).collect();

        let mut hull: Vec<usize> = Vec::new();
        for j in 0..n {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let cross = (q[b] - q[a]) * (r[j] - r[a]) - (r[b] - r[a]) * (q[j] - q[a]);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(j);
        }

        let scale = v[0].max(1.0);
        let mut slopes = vec![0.0; n - 1];
        let mut flat = vec![false; n - 1];
        let mut intervals = Vec::new();
        for w in hull.windows(2) {
            let (a, b) = (w[0], w[1]);
            let s = (r[b] - r[a]) / (q[b] - q[a]);
            slopes[a..b].fill(s);
            if b > a + 1 {
                flat[a..b].fill(true);
                let gap = (a + 1..b)
                    .map(|j| r[a] + s * (q[j] - q[a]) - r[j])
                    .fold(0.0f64, f64::max);
                if gap > 1e-12 * scale {
                    intervals.push((v[b], v[a]));
                }
            }
        }
        intervals.reverse();
        Ironing { slopes, flat, intervals }
    }

    /// Flat cells take the hull slope; elsewhere the raw value is clamped
    /// between the neighbouring hull slopes.
    fn eval(&self, quantile: f64, raw: f64) -> f64 {
        let cells = self.slopes.len();
        let j = ((quantile.clamp(0.0, 1.0) * cells as f64).floor() as usize).min(cells - 1);
        if self.flat[j] {
            return self.slopes[j];
        }
        let lo = if j + 1 < cells { self.slopes[j + 1] } else { f64::NEG_INFINITY };
        let hi = if j > 0 { self.slopes[j - 1] } else { f64::INFINITY };
        raw.clamp(lo, hi)
    }
}

/// A distribution together with its (ironed) virtual value function.
///
/// Clones share the ironing table.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub struct VirtualValueProfile {
    dist: ValueDistribution,
    ironing: Option<Arc<Ironing>>,
}

impl PartialEq for VirtualValueProfile {
    fn eq(&self, o: &Self) -> bool {
        self.dist == o.dist
    }
}

impl TryFrom<DistSpec> for VirtualValueProfile {
    type Error = Error;
    fn try_from(s: DistSpec) -> Result<Self> {
        Ok(VirtualValueProfile::new(ValueDistribution::from_spec(&s)?))
    }
}

impl From<VirtualValueProfile> for DistSpec {
    fn from(p: VirtualValueProfile) -> Self {
        p.dist.spec()
    }
}

impl VirtualValueProfile {
    pub fn new(dist: ValueDistribution) -> Self {
        let ironing = match &dist {
            ValueDistribution::Tabulated(t) => Some(Arc::new(Ironing::build(t))),
            _ => None,
        };
        VirtualValueProfile { dist, ironing }
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Ok(Self::new(ValueDistribution::exponential(mean)?))
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self::new(ValueDistribution::uniform(lo, hi)?))
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Self::new(ValueDistribution::Tabulated(TabulatedCdf::new(points)?)))
    }

    pub fn distribution(&self) -> &ValueDistribution {
        &self.dist
    }

    pub fn spec(&self) -> DistSpec {
        self.dist.spec()
    }

    pub fn support(&self) -> (f64, f64) {
        self.dist.support()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.dist.sample(rng)
    }

    pub fn virtual_value(&self, v: f64) -> f64 {
        self.dist.virtual_value(v)
    }

    /// Ironed virtual value; equal to the raw one for the closed-form families.
    pub fn ironed_virtual_value(&self, v: f64) -> f64 {
        match &self.ironing {
            Some(ir) => ir.eval(1.0 - self.dist.cdf(v), self.dist.virtual_value(v)),
            None => self.dist.virtual_value(v),
        }
    }

    /// Value intervals on which the ironed virtual value is flat.
    pub fn ironed_intervals(&self) -> Vec<(f64, f64)> {
        self.ironing.as_ref().map(|i| i.intervals.clone()).unwrap_or_default()
    }

    /// `sup { v : ironed φ(v) < 0 }`, clamped to the support.
    pub fn monopoly_reserve(&self) -> f64 {
        match self.dist {
            ValueDistribution::Exponential { mean } => mean,
            ValueDistribution::Uniform { lo, hi } => lo.max(hi / 2.0),
            ValueDistribution::Tabulated(_) => self.lower_inverse(0.0),
        }
    }

    /// `sup { θ : ironed φ(θ) <= p }` on the support. Targets below the whole
    /// curve map to the lower support bound.
    pub fn inverse_virtual_value(&self, p: f64) -> f64 {
        let (lo, hi) = self.support();
        match self.dist {
            ValueDistribution::Exponential { mean } => (p + mean).max(lo),
            ValueDistribution::Uniform { hi, .. } => ((p + hi) / 2.0).clamp(lo, hi),
            ValueDistribution::Tabulated(_) => {
                if self.ironed_virtual_value(lo) > p {
                    return lo;
                }
                if self.ironed_virtual_value(hi) <= p {
                    return hi;
                }
                self.bisect(lo, hi, |x| x <= p)
            }
        }
    }

    /// `inf { θ : ironed φ(θ) >= t }` on the support.
    pub fn lower_inverse(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        match self.dist {
            ValueDistribution::Exponential { mean } => (t + mean).max(lo),
            ValueDistribution::Uniform { hi, .. } => ((t + hi) / 2.0).clamp(lo, hi),
            ValueDistribution::Tabulated(_) => {
                if self.ironed_virtual_value(lo) >= t {
                    return lo;
                }
                if self.ironed_virtual_value(hi) < t {
                    return hi;
                }
                self.bisect(lo, hi, |x| x < t)
            }
        }
    }

    /// Boundary of a monotone predicate on φ̄ that holds at `a` and fails at `b`.
    fn bisect(&self, mut a: f64, mut b: f64, below: impl Fn(f64) -> bool) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if below(self.ironed_virtual_value(m)) {
                a = m;
            } else {
                b = m;
            }
        }
        if below(self.ironed_virtual_value(b)) {
            b
        } else {
            a
        }
    }

    /// Smallest slope `(φ(b) - φ(a)) / (b - a)` between consecutive grid values.
    pub fn alpha_regularity(&self, grid: &[f64]) -> Result<f64> {
        if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return input("grid must have at least two strictly increasing values");
        }
        Ok(grid
            .windows(2)
            .map(|w| (self.virtual_value(w[1]) - self.virtual_value(w[0])) / (w[1] - w[0]))
            .fold(f64::INFINITY, f64::min))
    }
}

/// Largest monopoly reserve across profiles (0 for an empty list).
pub fn max_reserve(profiles: &[VirtualValueProfile]) -> f64 {
    profiles.iter().map(|p| p.monopoly_reserve()).fold(0.0, f64::max)
}
