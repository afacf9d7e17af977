//! Least-squares two-part approximation of unit-price curves.
//!
//! A two-part tariff charges `f + v * x` per month, so its unit price is
//! `f / x + v`. Given samples `(x_i, p_i)` of a plan's unit-price curve,
//! [`fit_two_part`] returns the `(f, v)` minimizing
//! `Q(f, v) = sum_i (f / x_i + v - p_i)^2` in closed form, and
//! [`brute_force_fit`] finds the same minimum by exhaustive grid search as an
//! independent check.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::tariff::{self, CapacityGB, Currency, PlanModel, PricingPlan, TariffError, UnitPricePoint};

/// Upper end of default grids for plans without a capacity limit.
pub const OPEN_ENDED_STOP_GB: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid sampling grid: {0}")]
    InvalidGrid(String),
    #[error("no grid point falls within the plan's capacity")]
    EmptySample,
    #[error("need at least two points to fit, got {0}")]
    TooFewPoints(usize),
    #[error("all sample capacities are equal; the fit is undetermined")]
    DegenerateDesign,
    #[error("sample point ({x}, {p}) is not finite with x > 0")]
    InvalidPoint { x: f64, p: f64 },
    #[error("invalid search box: {0}")]
    InvalidSearchBox(String),
    #[error(transparent)]
    Tariff(#[from] TariffError),
}

/// Capacities `start, start + step, ...` not exceeding `stop`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleGrid {
    start: CapacityGB,
    stop: CapacityGB,
    step: CapacityGB,
}

impl SampleGrid {
    pub fn new(start: CapacityGB, stop: CapacityGB, step: CapacityGB) -> Result<Self, FitError> {
        if start.is_zero() {
            return Err(FitError::InvalidGrid("start must be positive".into()));
        }
        if start > stop {
            return Err(FitError::InvalidGrid(format!("start {start} exceeds stop {stop}")));
        }
        if step.is_zero() {
            return Err(FitError::InvalidGrid("step must be positive".into()));
        }
        Ok(SampleGrid { start, stop, step })
    }

    pub fn from_gb(start: u64, stop: u64, step: u64) -> Result<Self, FitError> {
        SampleGrid::new(CapacityGB::from_gb(start), CapacityGB::from_gb(stop), CapacityGB::from_gb(step))
    }

    /// Parses `from:to:step`.
    pub fn parse(text: &str) -> Result<Self, FitError> {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(FitError::InvalidGrid(format!("expected <from>:<to>:<step>, got {text:?}")));
        };
        let field = |s: &str| CapacityGB::parse(s.trim()).map_err(|e| FitError::InvalidGrid(e.to_string()));
        SampleGrid::new(field(start)?, field(stop)?, field(step)?)
    }

    pub fn start(&self) -> &CapacityGB {
        &self.start
    }

    pub fn stop(&self) -> &CapacityGB {
        &self.stop
    }

    pub fn step(&self) -> &CapacityGB {
        &self.step
    }

    /// Grid capacities in ascending order, computed exactly as `start + i * step`.
    pub fn points(&self) -> Vec<CapacityGB> {
        let count = ((self.stop.gb() - self.start.gb()) / self.step.gb()).floor().to_integer();
        let mut out = Vec::new();
        let mut i = BigRational::zero();
        let limit = BigRational::from_integer(count);
        while i <= limit {
            let x = self.start.gb() + &i * self.step.gb();
            out.push(CapacityGB::new(x).expect("grid points are positive"));
            i += BigRational::one();
        }
        out
    }
}

/// Grid used when the caller gives none: 1 GB steps from the first charged
/// gigabyte up to the plan maximum, or up to [`OPEN_ENDED_STOP_GB`] for
/// plans without one.
pub fn default_grid(plan: &PricingPlan) -> Result<SampleGrid, FitError> {
    let open_stop = CapacityGB::from_gb(OPEN_ENDED_STOP_GB);
    let one = CapacityGB::from_gb(1);
    match &plan.model {
        PlanModel::Bundle(b) => {
            let first_charged = b.free_gb.gb().floor() + BigRational::one();
            let start = CapacityGB::new(first_charged).expect("positive");
            SampleGrid::new(start, b.max_capacity(), one)
        }
        PlanModel::BlockRate(b) => SampleGrid::new(one, b.max_capacity().min(open_stop), CapacityGB::from_gb(1)),
        PlanModel::TwoPart(_) | PlanModel::PerSeat(_) => SampleGrid::new(one, open_stop, CapacityGB::from_gb(1)),
        PlanModel::UnlimitedFlat(_) => Err(TariffError::UndefinedUnitPrice("plan has unlimited capacity").into()),
        PlanModel::CapacityOnly(_) => Err(TariffError::Unpriceable.into()),
    }
}

/// Unit prices of `plan` on `grid`, expressed in `currency`. Grid points
/// inside a bundle's free allowance (where the unit price is zero) and
/// beyond the plan's capacity are dropped.
pub fn sample_unit_curve(
    plan: &PricingPlan,
    grid: &SampleGrid,
    currency: Currency,
) -> Result<Vec<UnitPricePoint>, FitError> {
    match &plan.model {
        PlanModel::UnlimitedFlat(_) => {
            return Err(TariffError::UndefinedUnitPrice("plan has unlimited capacity").into());
        }
        PlanModel::CapacityOnly(_) => return Err(TariffError::Unpriceable.into()),
        _ => {}
    }
    let free = match &plan.model {
        PlanModel::Bundle(b) => b.free_gb.clone(),
        _ => CapacityGB::zero(),
    };
    let max = tariff::max_capacity(plan);
    let points: Vec<UnitPricePoint> = grid
        .points()
        .into_iter()
        .filter(|x| x > &free)
        .take_while(|x| max.as_ref().is_none_or(|m| x <= m))
        .map(|x| {
            let price = tariff::unit_price(plan, &x)?.convert(currency);
            Ok(UnitPricePoint { x, price })
        })
        .collect::<Result<_, TariffError>>()?;
    if points.is_empty() {
        return Err(FitError::EmptySample);
    }
    Ok(points)
}

/// A unit-price sample in floating point, as consumed by the fitters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub x: f64,
    pub p: f64,
}

impl FitPoint {
    pub fn new(x: f64, p: f64) -> Self {
        FitPoint { x, p }
    }
}

impl From<&UnitPricePoint> for FitPoint {
    fn from(point: &UnitPricePoint) -> Self {
        FitPoint { x: point.x.to_f64(), p: point.price.to_f64() }
    }
}

pub fn to_fit_points(points: &[UnitPricePoint]) -> Vec<FitPoint> {
    points.iter().map(FitPoint::from).collect()
}

/// Estimated two-part tariff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPartFit {
    /// Fixed monthly fee.
    pub f_hat: f64,
    /// Marginal price per GB per month.
    pub v_hat: f64,
    /// `Q(f_hat, v_hat)`.
    pub rss: f64,
    pub n: usize,
}

impl TwoPartFit {
    /// Set when either estimate came out negative. Such estimates are
    /// returned as computed; they are not a valid tariff.
    pub fn has_negative_estimate(&self) -> bool {
        self.f_hat < 0.0 || self.v_hat < 0.0
    }

    /// `(sum r_i, sum r_i / x_i)` with `r_i = f/x_i + v - p_i`. Both vanish at
    /// the least-squares optimum.
    pub fn normal_equation_residuals(&self, points: &[FitPoint]) -> (f64, f64) {
        let residuals = points.iter().map(|pt| (self.f_hat / pt.x + self.v_hat - pt.p, pt.x));
        let (plain, weighted): (Vec<f64>, Vec<f64>) = residuals.map(|(r, x)| (r, r / x)).unzip();
        (compensated_sum(plain), compensated_sum(weighted))
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for value in values {
        let t = sum + value;
        if sum.abs() >= value.abs() {
            carry += (sum - t) + value;
        } else {
            carry += (value - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn check_points(points: &[FitPoint]) -> Result<(), FitError> {
    match points.iter().find(|pt| !(pt.x.is_finite() && pt.x > 0.0 && pt.p.is_finite())) {
        Some(pt) => Err(FitError::InvalidPoint { x: pt.x, p: pt.p }),
        None => Ok(()),
    }
}

/// `sum_i (f / x_i + v - p_i)^2`.
pub fn residual_q(points: &[FitPoint], f: f64, v: f64) -> f64 {
    compensated_sum(points.iter().map(|pt| {
        let r = f / pt.x + v - pt.p;
        r * r
    }))
}

/// Closed-form least-squares estimate of `(f, v)`.
///
/// With `u_i = 1/x_i` this is ordinary regression of `p` on `u`:
/// `f = [n sum(p u) - sum(p) sum(u)] / [n sum(u^2) - sum(u)^2]` and
/// `v = [sum(p) - f sum(u)] / n`. Both sums are taken about their means,
/// which is algebraically identical and avoids cancellation when the
/// capacities are large and close together.
pub fn fit_two_part(points: &[FitPoint]) -> Result<TwoPartFit, FitError> {
    let n = points.len();
    if n < 2 {
        return Err(FitError::TooFewPoints(n));
    }
    check_points(points)?;
    if points.iter().all(|pt| pt.x == points[0].x) {
        return Err(FitError::DegenerateDesign);
    }
    let count = n as f64;
    let inv: Vec<f64> = points.iter().map(|pt| 1.0 / pt.x).collect();
    let mean_u = compensated_sum(inv.iter().copied()) / count;
    let mean_p = compensated_sum(points.iter().map(|pt| pt.p)) / count;
    let s_uu = compensated_sum(inv.iter().map(|u| (u - mean_u) * (u - mean_u)));
    let s_up = compensated_sum(inv.iter().zip(points).map(|(u, pt)| (u - mean_u) * (pt.p - mean_p)));
    if s_uu == 0.0 {
        return Err(FitError::DegenerateDesign);
    }
    let f_hat = s_up / s_uu;
    let v_hat = mean_p - f_hat * mean_u;
    Ok(TwoPartFit { f_hat, v_hat, rss: residual_q(points, f_hat, v_hat), n })
}

/// Rectangle of candidate `(f, v)` pairs for [`brute_force_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub f: (f64, f64),
    pub v: (f64, f64),
}

impl SearchBox {
    pub fn new(f: (f64, f64), v: (f64, f64)) -> Result<Self, FitError> {
        for (name, (lo, hi)) in [("f", f), ("v", v)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(FitError::InvalidSearchBox(format!("{name} range [{lo}, {hi}] is empty or not finite")));
            }
        }
        Ok(SearchBox { f, v })
    }

    /// Box suggested by the data alone: `f` between 0 and the largest sampled
    /// total price, `v` between 0 and the smallest sampled unit price (a
    /// non-negative fixed fee keeps `v` at or below every unit price).
    pub fn from_points(points: &[FitPoint]) -> Result<Self, FitError> {
        check_points(points)?;
        let max_total = points.iter().map(|pt| pt.p * pt.x).fold(0.0f64, f64::max);
        let min_unit = points.iter().map(|pt| pt.p).fold(f64::INFINITY, f64::min);
        SearchBox::new((0.0, max_total), (0.0, min_unit.max(0.0)))
    }
}

fn axis(range: (f64, f64), resolution: usize) -> Vec<f64> {
    let (lo, hi) = range;
    if lo == hi {
        return vec![lo];
    }
    let last = (resolution - 1) as f64;
    (0..resolution).map(|i| if i + 1 == resolution { hi } else { lo + (hi - lo) * (i as f64) / last }).collect()
}

/// `Q` over `(1/x, p)` pairs; multiplies where [`residual_q`] divides.
fn lattice_q(samples: &[(f64, f64)], f: f64, v: f64) -> f64 {
    compensated_sum(samples.iter().map(|&(u, p)| {
        let r = f * u + v - p;
        r * r
    }))
}

struct Pass {
    fs: Vec<f64>,
    vs: Vec<f64>,
    q: Vec<f64>,
    best: (usize, usize),
}

impl Pass {
    fn run(samples: &[(f64, f64)], area: &SearchBox, resolution: usize) -> Pass {
        let fs = axis(area.f, resolution);
        let vs = axis(area.v, resolution);
        let q: Vec<f64> = fs
            .par_iter()
            .flat_map_iter(|&f| vs.iter().map(move |&v| lattice_q(samples, f, v)))
            .collect();
        let mut best = 0;
        for (idx, value) in q.iter().enumerate() {
            // row-major in ascending (f, v): the first strict minimum wins ties
            if *value < q[best] {
                best = idx;
            }
        }
        let best = (best / vs.len(), best % vs.len());
        Pass { fs, vs, q, best }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.vs.len() + j]
    }

    /// Smallest box that must contain the continuous minimizer: every grid
    /// corner around it scores no worse than the worst neighbour of the best
    /// grid point. One extra cell of margin covers grid edges.
    fn refined(&self, outer: &SearchBox) -> SearchBox {
        let (bi, bj) = self.best;
        let (nf, nv) = (self.fs.len() as isize, self.vs.len() as isize);
        let mut threshold = self.at(bi, bj);
        for di in -1isize..=1 {
            for dj in -1isize..=1 {
                let (i, j) = (bi as isize + di, bj as isize + dj);
                if (0..nf).contains(&i) && (0..nv).contains(&j) {
                    threshold = threshold.max(self.at(i as usize, j as usize));
                }
            }
        }
        let (mut imin, mut imax, mut jmin, mut jmax) = (bi, bi, bj, bj);
        for i in 0..self.fs.len() {
            for j in 0..self.vs.len() {
                if self.at(i, j) <= threshold {
                    imin = imin.min(i);
                    imax = imax.max(i);
                    jmin = jmin.min(j);
                    jmax = jmax.max(j);
                }
            }
        }
        let span = |values: &[f64], lo: usize, hi: usize, bounds: (f64, f64)| {
            let lo = values[lo.saturating_sub(1)].max(bounds.0);
            let hi = values[(hi + 1).min(values.len() - 1)].min(bounds.1);
            (lo, hi)
        };
        SearchBox { f: span(&self.fs, imin, imax, outer.f), v: span(&self.vs, jmin, jmax, outer.v) }
    }
}

/// Exhaustive minimization of [`residual_q`] over a `resolution x resolution`
/// lattice spanning `area`, followed by `refinements` passes over
/// successively smaller boxes around the best candidate. Ties go to the
/// smallest `f`, then the smallest `v`. Never leaves `area`.
pub fn brute_force_fit(
    points: &[FitPoint],
    area: &SearchBox,
    resolution: usize,
    refinements: usize,
) -> Result<TwoPartFit, FitError> {
    if points.is_empty() {
        return Err(FitError::TooFewPoints(0));
    }
    if resolution < 2 {
        return Err(FitError::InvalidSearchBox(format!("resolution must be at least 2, got {resolution}")));
    }
    check_points(points)?;
    let area = SearchBox::new(area.f, area.v)?;
    let samples: Vec<(f64, f64)> = points.iter().map(|pt| (1.0 / pt.x, pt.p)).collect();
    let mut current = area;
    let mut pass = Pass::run(&samples, &current, resolution);
    for _ in 0..refinements {
        current = pass.refined(&area);
        pass = Pass::run(&samples, &current, resolution);
    }
    let (i, j) = pass.best;
    let (f_hat, v_hat) = (pass.fs[i], pass.vs[j]);
    Ok(TwoPartFit { f_hat, v_hat, rss: residual_q(points, f_hat, v_hat), n: points.len() })
}
