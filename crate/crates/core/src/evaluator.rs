//! Numeric assembly of the edge expansion and a finite-difference check of
//! how well a truncated series satisfies Laplace's equation.
//!
//! The series is
//! `τ = Σ (∂_θ^h A)(θ) · ρ^σ (ρ/R)^{h+f} · φ_{h,j,f}(φ)` over even `h` and
//! `h + f ≤ K`, with `A(θ) = cos(nθ)` and `σ = ±α_j`.
//!
//! The residual of a truncated series is around `ρ^{K+1}` smaller than the
//! individual Laplacian terms, far below what f64 differences resolve, so
//! the residual study runs in [`Hp`] arithmetic.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use serde_json::json;
use thiserror::Error;

use crate::exactnum::{rational_to_f64, ExtScalar, Rational};
use crate::geometry::Geometry;
use crate::recursion::{build_table, Kind, ShadowKey, ShadowTable, SolveError, TableExtent};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("table lacks {0}")]
    MissingShadow(ShadowKey),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

/// Scalar type the evaluator runs on.
pub trait Real:
    Clone
    + fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_f64(n as f64)
    }

    fn from_ext(c: &ExtScalar) -> Self {
        let a = Self::from_rational(&c.a);
        if c.b == Rational::from_integer(0.into()) {
            a
        } else {
            a + Self::from_rational(&c.b) * Self::from_int(3).sqrt()
        }
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

/// Working precision of [`Hp`] in bits.
pub const HP_BITS: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Binary floating point with [`HP_BITS`] bits of mantissa.
#[derive(Clone, Debug)]
pub struct Hp(BigFloat);

impl Hp {
    pub fn pi() -> Hp {
        Hp(with_consts(|cc| cc.pi(HP_BITS, RM)))
    }

    fn parse_int(s: &str) -> BigFloat {
        with_consts(|cc| BigFloat::parse(s, Radix::Dec, HP_BITS, RM, cc))
    }
}

impl PartialEq for Hp {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl PartialOrd for Hp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

macro_rules! hp_binop {
    ($tr:ident, $f:ident) => {
        impl $tr for Hp {
            type Output = Hp;
            fn $f(self, rhs: Hp) -> Hp {
                Hp(self.0.$f(&rhs.0, HP_BITS, RM))
            }
        }
    };
}
hp_binop!(Add, add);
hp_binop!(Sub, sub);
hp_binop!(Mul, mul);
hp_binop!(Div, div);

impl Neg for Hp {
    type Output = Hp;
    fn neg(self) -> Hp {
        Hp(self.0.neg())
    }
}

impl Real for Hp {
    fn from_f64(x: f64) -> Self {
        Hp(BigFloat::from_f64(x, HP_BITS))
    }
    fn from_int(n: i64) -> Self {
        Hp(BigFloat::from_i64(n, HP_BITS))
    }
    fn from_rational(r: &Rational) -> Self {
        let n = Hp::parse_int(&r.numer().to_string());
        let d = Hp::parse_int(&r.denom().to_string());
        Hp(n.div(&d, HP_BITS, RM))
    }
    fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        match self.0.as_raw_parts() {
            Some((m, _, sign, e, _)) => {
                // value = 0.m × 2^e with the top word holding the leading bits
                let top = *m.last().expect("nonempty mantissa") as f64;
                let v = top * 2f64.powi(e - 64);
                if sign.is_negative() {
                    -v
                } else {
                    v
                }
            }
            None if self.0.is_nan() => f64::NAN,
            None if self.0.is_inf_neg() => f64::NEG_INFINITY,
            None => f64::INFINITY,
        }
    }
    fn sin(&self) -> Self {
        Hp(with_consts(|cc| self.0.sin(HP_BITS, RM, cc)))
    }
    fn cos(&self) -> Self {
        Hp(with_consts(|cc| self.0.cos(HP_BITS, RM, cc)))
    }
    fn ln(&self) -> Self {
        Hp(with_consts(|cc| self.0.ln(HP_BITS, RM, cc)))
    }
    fn exp(&self) -> Self {
        Hp(with_consts(|cc| self.0.exp(HP_BITS, RM, cc)))
    }
    fn sqrt(&self) -> Self {
        Hp(self.0.sqrt(HP_BITS, RM))
    }
    fn abs(&self) -> Self {
        Hp(self.0.abs())
    }
}

/// Point in edge-local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePoint<T = f64> {
    pub rho: T,
    pub phi: T,
    pub theta: T,
}

impl EdgePoint<f64> {
    pub fn new(rho: f64, phi: f64, theta: f64) -> Self {
        EdgePoint { rho, phi, theta }
    }

    fn lift<T: Real>(&self) -> EdgePoint<T> {
        EdgePoint { rho: T::from_f64(self.rho), phi: T::from_f64(self.phi), theta: T::from_f64(self.theta) }
    }
}

/// Which truncated series to assemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSpec {
    pub geometry: Geometry,
    pub kind: Kind,
    pub j: u32,
    /// Edge radius `R`.
    pub radius: f64,
    /// Fourier mode `n` of `A(θ) = cos(nθ)`.
    pub mode: u32,
    /// Truncation order `K`: all `h + f ≤ K` with `h` even.
    pub order: u32,
}

impl SeriesSpec {
    pub fn new(geometry: Geometry, kind: Kind, j: u32, radius: f64, mode: u32, order: u32) -> Self {
        SeriesSpec { geometry, kind, j, radius, mode, order }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(EvalError::Domain(format!("edge radius must be positive, got {}", self.radius)));
        }
        if self.j == 0 {
            return Err(EvalError::Domain("j must be at least 1".into()));
        }
        Ok(())
    }

    pub fn keys(&self) -> Vec<ShadowKey> {
        let mut out = Vec::new();
        for h in (0..=self.order).step_by(2) {
            for f in 0..=self.order - h {
                out.push(ShadowKey::new(self.kind, h, self.j, f));
            }
        }
        out
    }

    /// `σ` as a rational: `α_j` for primals, `−α_j` for duals.
    pub fn exponent(&self) -> Rational {
        let a = self.geometry.eigenvalue(self.j);
        match self.kind {
            Kind::Primal => a,
            Kind::Dual => -a,
        }
    }

    /// Predicted log-log slope of the Laplacian residual, `σ + K − 1`.
    pub fn expected_slope(&self) -> f64 {
        rational_to_f64(&self.exponent()) + self.order as f64 - 1.0
    }

    /// Solves every shadow the series needs.
    pub fn build_table(&self) -> Result<ShadowTable, SolveError> {
        let extent = TableExtent::triangle(self.order);
        build_table(self.geometry, self.kind, &[self.j], extent)
    }

    pub fn check_point(&self, p: &EdgePoint) -> Result<(), EvalError> {
        let g = self.geometry;
        if !(p.rho.is_finite() && p.phi.is_finite() && p.theta.is_finite()) {
            return Err(EvalError::Domain("coordinates must be finite".into()));
        }
        if p.rho < 0.0 || p.rho >= self.radius {
            return Err(EvalError::Domain(format!("rho = {} outside [0, R) with R = {}", p.rho, self.radius)));
        }
        if p.phi < g.phi1() || p.phi > g.phi2() {
            return Err(EvalError::Domain(format!("phi = {} outside the wedge [{}, {}]", p.phi, g.phi1(), g.phi2())));
        }
        if p.theta < 0.0 || p.theta >= std::f64::consts::TAU {
            return Err(EvalError::Domain(format!("theta = {} outside [0, 2pi)", p.theta)));
        }
        Ok(())
    }
}

struct Term<T> {
    key: ShadowKey,
    power: u32,
    /// `(−n²)^{h/2}`, the θ-derivative factor.
    theta_factor: T,
    coeffs: Vec<(usize, T, T)>,
}

/// A series with all coefficients converted to `T`, ready for repeated
/// evaluation.
pub struct Series<T> {
    sigma: T,
    sigma_positive: bool,
    q: T,
    max_k: usize,
    radius: T,
    mode: T,
    terms: Vec<Term<T>>,
}

/// Per-`(h, f)` contribution at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct TermValue {
    pub key: ShadowKey,
    pub value: f64,
}

impl<T: Real> Series<T> {
    pub fn new(spec: &SeriesSpec, table: &ShadowTable) -> Result<Self, EvalError> {
        spec.validate()?;
        let n = spec.mode as i64;
        let mut terms = Vec::new();
        let mut max_k = 0;
        for key in spec.keys() {
            let poly = table.get(&key).ok_or(EvalError::MissingShadow(key))?;
            let half = key.h / 2;
            let factor = (-n * n).checked_pow(half).ok_or_else(|| EvalError::Numeric("mode too large".into()))?;
            let coeffs: Vec<(usize, T, T)> = poly
                .terms()
                .map(|(k, t)| (k as usize, T::from_ext(&t.sin), T::from_ext(&t.cos)))
                .collect();
            max_k = max_k.max(poly.max_freq().unwrap_or(0) as usize);
            terms.push(Term { key, power: key.h + key.f, theta_factor: T::from_int(factor), coeffs });
        }
        let sigma = spec.exponent();
        Ok(Series {
            sigma_positive: sigma > Rational::from_integer(0.into()),
            sigma: T::from_rational(&sigma),
            q: T::from_int(spec.geometry.freq_den() as i64),
            max_k,
            radius: T::from_f64(spec.radius),
            mode: T::from_int(n),
            terms,
        })
    }

    fn contributions(&self, p: &EdgePoint<T>) -> Vec<T> {
        let zero = T::from_int(0);
        if p.rho == zero {
            // ρ^σ → 0 for σ > 0; callers reject σ ≤ 0 at the edge
            return self.terms.iter().map(|_| zero.clone()).collect();
        }
        let base = (self.sigma.clone() * p.rho.ln()).exp();
        let x = p.rho.clone() / self.radius.clone();
        let s1 = (p.phi.clone() / self.q.clone()).sin();
        let c1 = (p.phi.clone() / self.q.clone()).cos();
        let mut s = vec![zero.clone(), s1.clone()];
        let mut c = vec![T::from_int(1), c1.clone()];
        for k in 2..=self.max_k {
            s.push(s[k - 1].clone() * c1.clone() + c[k - 1].clone() * s1.clone());
            c.push(c[k - 1].clone() * c1.clone() - s[k - 1].clone() * s1.clone());
        }
        let cos_mode = (self.mode.clone() * p.theta.clone()).cos();
        let mut powers = vec![T::from_int(1)];
        self.terms
            .iter()
            .map(|t| {
                while powers.len() <= t.power as usize {
                    let next = powers.last().unwrap().clone() * x.clone();
                    powers.push(next);
                }
                let mut angular = zero.clone();
                for (k, a, b) in &t.coeffs {
                    angular = angular + a.clone() * s[*k].clone() + b.clone() * c[*k].clone();
                }
                t.theta_factor.clone() * cos_mode.clone() * base.clone() * powers[t.power as usize].clone() * angular
            })
            .collect()
    }

    /// τ at `p`; no domain checks.
    pub fn eval(&self, p: &EdgePoint<T>) -> T {
        self.contributions(p).into_iter().fold(T::from_int(0), |acc, v| acc + v)
    }

    pub fn breakdown(&self, p: &EdgePoint<T>) -> Vec<TermValue> {
        self.terms
            .iter()
            .zip(self.contributions(p))
            .map(|(t, v)| TermValue { key: t.key, value: v.to_f64() })
            .collect()
    }
}

/// τ at `p` in f64.
pub fn eval_tau(spec: &SeriesSpec, table: &ShadowTable, p: &EdgePoint) -> Result<f64, EvalError> {
    let series = Series::<f64>::new(spec, table)?;
    check_eval_point(spec, &series, p)?;
    Ok(series.eval(p))
}

/// τ at `p` together with its per-`(h, f)` terms.
pub fn eval_tau_terms(spec: &SeriesSpec, table: &ShadowTable, p: &EdgePoint) -> Result<(f64, Vec<TermValue>), EvalError> {
    let series = Series::<f64>::new(spec, table)?;
    check_eval_point(spec, &series, p)?;
    Ok((series.eval(p), series.breakdown(p)))
}

fn check_eval_point<T: Real>(spec: &SeriesSpec, series: &Series<T>, p: &EdgePoint) -> Result<(), EvalError> {
    spec.check_point(p)?;
    if p.rho == 0.0 && !series.sigma_positive {
        return Err(EvalError::Domain("the dual series is singular at rho = 0".into()));
    }
    Ok(())
}

/// Finite-difference step sizes.
#[derive(Debug, Clone)]
pub struct Steps<T> {
    pub rho: T,
    pub phi: T,
    pub theta: T,
}

/// How the 1/r terms of the Laplacian are treated.
#[derive(Debug, Clone)]
pub enum Metric<T> {
    /// Around a circular edge of radius `R`, `r = R + ρ cos φ`.
    Edge { radius: T },
    /// `R → ∞`: the plain polar Laplacian in (ρ, φ).
    Planar,
}

/// Second-order central differences of
/// `u_ρρ + u_ρ/ρ + u_φφ/ρ² + (cos φ u_ρ − sin φ u_φ/ρ)/r + u_θθ/r²`.
///
/// `wedge` bounds φ; the stencil must stay two steps inside it.
pub fn laplacian_fd<T: Real>(
    u: impl Fn(&EdgePoint<T>) -> T,
    p: &EdgePoint<T>,
    steps: &Steps<T>,
    metric: &Metric<T>,
    wedge: Option<(T, T)>,
) -> Result<T, EvalError> {
    let two = T::from_int(2);
    if !(p.rho > two.clone() * steps.rho.clone()) {
        return Err(EvalError::Domain(format!("rho = {:e} is within two steps of the edge", p.rho.to_f64())));
    }
    if let Some((lo, hi)) = wedge {
        let margin = two.clone() * steps.phi.clone();
        if !(p.phi > lo + margin.clone() && p.phi < hi - margin) {
            return Err(EvalError::Domain(format!("phi = {} is within two steps of a face", p.phi.to_f64())));
        }
    }
    let at = |dr: &T, dp: &T, dt: &T| {
        u(&EdgePoint { rho: p.rho.clone() + dr.clone(), phi: p.phi.clone() + dp.clone(), theta: p.theta.clone() + dt.clone() })
    };
    let z = T::from_int(0);
    let (hr, hp, ht) = (&steps.rho, &steps.phi, &steps.theta);
    let u0 = at(&z, &z, &z);
    let second = |plus: T, minus: T, h: &T| (plus - two.clone() * u0.clone() + minus) / (h.clone() * h.clone());
    let first = |plus: T, minus: T, h: &T| (plus - minus) / (two.clone() * h.clone());

    let (r_p, r_m) = (at(hr, &z, &z), at(&-hr.clone(), &z, &z));
    let (p_p, p_m) = (at(&z, hp, &z), at(&z, &-hp.clone(), &z));
    let u_rr = second(r_p.clone(), r_m.clone(), hr);
    let u_r = first(r_p, r_m, hr);
    let u_pp = second(p_p.clone(), p_m.clone(), hp);
    let u_p = first(p_p, p_m, hp);
    let rho = p.rho.clone();
    let mut lap = u_rr + u_r.clone() / rho.clone() + u_pp / (rho.clone() * rho.clone());
    if let Metric::Edge { radius } = metric {
        let (t_p, t_m) = (at(&z, &z, ht), at(&z, &z, &-ht.clone()));
        let u_tt = second(t_p, t_m, ht);
        let r = radius.clone() + rho.clone() * p.phi.cos();
        if !(r > z) {
            return Err(EvalError::Domain("r = R + rho cos phi must be positive".into()));
        }
        lap = lap + (p.phi.cos() * u_r - p.phi.sin() * u_p / rho) / r.clone() + u_tt / (r.clone() * r);
    }
    Ok(lap)
}

/// `(1/ρ) ∂τ/∂φ` on both faces by one-sided three-point differences with
/// spacing `eps` (nodes at the face, one and two steps inside).
pub fn face_derivatives(spec: &SeriesSpec, table: &ShadowTable, rho: f64, theta: f64, eps: f64) -> Result<[f64; 2], EvalError> {
    let series = Series::<f64>::new(spec, table)?;
    let g = spec.geometry;
    for phi in [g.phi1(), g.phi2()] {
        check_eval_point(spec, &series, &EdgePoint::new(rho, phi, theta))?;
    }
    if !(eps > 0.0 && 2.0 * eps < g.phi2() - g.phi1()) {
        return Err(EvalError::Domain(format!("face step {eps} out of range")));
    }
    let u = |phi: f64| series.eval(&EdgePoint::new(rho, phi, theta));
    let lower = (-3.0 * u(g.phi1()) + 4.0 * u(g.phi1() + eps) - u(g.phi1() + 2.0 * eps)) / (2.0 * eps);
    let upper = (3.0 * u(g.phi2()) - 4.0 * u(g.phi2() - eps) + u(g.phi2() - 2.0 * eps)) / (2.0 * eps);
    Ok([lower / rho, upper / rho])
}

/// Outcome of a residual sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `(ρ, max |Δτ| over the probe set)`.
    pub rows: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub expected: f64,
}

impl ResidualReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rho,abs_residual\n");
        for (rho, res) in &self.rows {
            s.push_str(&format!("{rho:.12e},{res:.12e}\n"));
        }
        s
    }

    pub fn summary_json(&self) -> String {
        json!({"slope": self.slope, "intercept": self.intercept, "expected": self.expected}).to_string()
    }

    pub fn within(&self, tolerance: f64) -> bool {
        (self.slope - self.expected).abs() <= tolerance
    }
}

/// Fixed probe directions: four interior angles times two axial angles.
pub fn probe_set(g: Geometry) -> Vec<(f64, f64)> {
    let (lo, hi) = (g.phi1(), g.phi2());
    let mut out = Vec::new();
    for frac in [0.125, 0.375, 0.625, 0.875] {
        for theta in [0.4, 1.3] {
            out.push((lo + frac * (hi - lo), theta));
        }
    }
    out
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn fit_line(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Log-log slope of the Laplacian residual of the truncated series over
/// `samples` log-spaced radii in `[rho_min, rho_max]`. At each radius the
/// residual is the largest `|Δτ|` over [`probe_set`].
pub fn residual_slope(
    spec: &SeriesSpec,
    table: &ShadowTable,
    rho_min: f64,
    rho_max: f64,
    samples: usize,
) -> Result<ResidualReport, EvalError> {
    spec.validate()?;
    if !(rho_min > 0.0 && rho_min < rho_max) {
        return Err(EvalError::Domain(format!("need 0 < rho-min < rho-max, got [{rho_min}, {rho_max}]")));
    }
    if rho_max > spec.radius / 10.0 {
        return Err(EvalError::Domain(format!("rho-max = {rho_max} exceeds R/10 = {}", spec.radius / 10.0)));
    }
    if samples < 8 {
        return Err(EvalError::Domain(format!("need at least 8 samples, got {samples}")));
    }
    let series = Series::<Hp>::new(spec, table)?;
    let metric = Metric::Edge { radius: Hp::from_f64(spec.radius) };
    let rel = Hp::from_f64(1e-20);
    let g = spec.geometry;
    let wedge = Some((Hp::from_f64(g.phi1()), Hp::from_f64(g.phi2())));
    let probes = probe_set(g);
    let (l0, l1) = (rho_min.ln(), rho_max.ln());
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let rho = (l0 + (l1 - l0) * i as f64 / (samples - 1) as f64).exp();
        let steps = Steps { rho: Hp::from_f64(rho) * rel.clone(), phi: rel.clone(), theta: rel.clone() };
        let mut worst = 0.0f64;
        for &(phi, theta) in &probes {
            let p = EdgePoint::new(rho, phi, theta).lift::<Hp>();
            let lap = laplacian_fd(|q| series.eval(q), &p, &steps, &metric, wedge.clone())?;
            worst = worst.max(lap.abs().to_f64());
        }
        if !(worst.is_finite() && worst > 0.0) {
            return Err(EvalError::Numeric(format!("residual at rho = {rho:e} is {worst}")));
        }
        rows.push((rho, worst));
    }
    let logs: Vec<(f64, f64)> = rows.iter().map(|(r, v)| (r.ln(), v.ln())).collect();
    let (slope, intercept) = fit_line(&logs);
    Ok(ResidualReport { rows, slope, intercept, expected: spec.expected_slope() })
}
