//! Shadow hierarchies: right-hand sides, Helmholtz solves and Neumann closure.
//!
//! For a wedge with Neumann faces, the angular functions of the edge
//! expansion satisfy, for each key `(kind, h, j, f)`,
//!
//! ```text
//! λ²·y + y'' = rhs(key),    y'(φ₁) = y'(φ₂) = 0,    λ = σ + h + f
//! ```
//!
//! with `σ = α_j` for primal functions and `σ = −α_j` for duals. The
//! right-hand side only involves `(h, f−1)`, `(h, f−2)` and `(h−2, f)`,
//! so the table is filled by increasing `h` and `f`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::exactnum::{rat, rat_int, ExtScalar, Rational};
use crate::geometry::Geometry;
use crate::trigpoly::{ElemFactor, TrigPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Primal,
    Dual,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Primal => "primal",
            Kind::Dual => "dual",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "primal" => Ok(Kind::Primal),
            "dual" => Ok(Kind::Dual),
            other => Err(format!("unknown kind `{other}` (expected primal or dual)")),
        }
    }
}

/// Index of one shadow function. Ordered by `(kind, j, h, f)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShadowKey {
    pub kind: Kind,
    pub j: u32,
    pub h: u32,
    pub f: u32,
}

impl ShadowKey {
    pub fn new(kind: Kind, h: u32, j: u32, f: u32) -> Self {
        ShadowKey { kind, j, h, f }
    }

    pub fn primal(h: u32, j: u32, f: u32) -> Self {
        ShadowKey::new(Kind::Primal, h, j, f)
    }

    pub fn dual(h: u32, j: u32, f: u32) -> Self {
        ShadowKey::new(Kind::Dual, h, j, f)
    }

    fn validate(&self) -> Result<(), SolveError> {
        if self.j == 0 || self.h % 2 == 1 {
            return Err(SolveError::InvalidKey(*self));
        }
        Ok(())
    }

    /// `±α_j`.
    pub fn signed_exponent(&self, g: Geometry) -> Rational {
        let a = g.eigenvalue(self.j);
        match self.kind {
            Kind::Primal => a,
            Kind::Dual => -a,
        }
    }

    /// Helmholtz frequency `λ = ±α_j + h + f`.
    pub fn lambda(&self, g: Geometry) -> Rational {
        self.signed_exponent(g) + rat_int((self.h + self.f) as i64)
    }

    /// Keys whose functions enter this key's right-hand side.
    pub fn dependencies(&self) -> Vec<ShadowKey> {
        let mut deps = Vec::new();
        if self.f >= 1 {
            deps.push(ShadowKey { f: self.f - 1, ..*self });
        }
        if self.h >= 2 && self.f >= 2 {
            deps.push(ShadowKey { f: self.f - 2, ..*self });
        }
        if self.h >= 2 {
            deps.push(ShadowKey { h: self.h - 2, ..*self });
        }
        deps
    }
}

impl fmt::Display for ShadowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = match self.kind {
            Kind::Primal => "phi",
            Kind::Dual => "psi",
        };
        write!(f, "{sym}_{{{},{},{}}}", self.h, self.j, self.f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("dependency {0} is not in the table")]
    MissingDependency(ShadowKey),
    #[error("invalid key {0}: h must be even and j ≥ 1")]
    InvalidKey(ShadowKey),
    #[error("right-hand side resonates at frequency {0}")]
    ResonantTerm(String),
    #[error("degenerate Neumann system is inconsistent")]
    IncompatibleBC,
    #[error("Neumann system is singular at a non-eigen frequency")]
    SingularSystem,
    #[error("frequency {0} is off the 1/{1} lattice")]
    OffLattice(String, u32),
    #[error("solution fails its own {0} check")]
    Postcondition(&'static str),
    #[error("while solving {key}: {source}")]
    AtKey {
        key: ShadowKey,
        #[source]
        source: Box<SolveError>,
    },
}

impl SolveError {
    /// Key the failure is attached to, if any.
    pub fn key(&self) -> Option<ShadowKey> {
        match self {
            SolveError::AtKey { key, .. } => Some(*key),
            SolveError::MissingDependency(k) | SolveError::InvalidKey(k) => Some(*k),
            _ => None,
        }
    }

    /// The underlying failure with any key context stripped.
    pub fn root(&self) -> &SolveError {
        match self {
            SolveError::AtKey { source, .. } => source.root(),
            other => other,
        }
    }
}

/// How the boundary closure went for one key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveRecord {
    /// `|λ|` is a Neumann eigenvalue of the wedge.
    pub degenerate: bool,
    /// The kernel component was fixed to zero.
    pub kernel_dropped: bool,
}

/// Memo of solved shadow functions for one geometry.
#[derive(Debug, Clone)]
pub struct ShadowTable {
    geometry: Geometry,
    entries: BTreeMap<ShadowKey, TrigPoly>,
    solve_log: BTreeMap<ShadowKey, SolveRecord>,
}

impl ShadowTable {
    pub fn new(geometry: Geometry) -> Self {
        ShadowTable { geometry, entries: BTreeMap::new(), solve_log: BTreeMap::new() }
    }

    /// A table holding externally supplied functions (e.g. transcribed
    /// goldens). Nothing is solved.
    pub fn from_entries<I>(geometry: Geometry, entries: I) -> Self
    where
        I: IntoIterator<Item = (ShadowKey, TrigPoly)>,
    {
        ShadowTable { geometry, entries: entries.into_iter().collect(), solve_log: BTreeMap::new() }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn get(&self, key: &ShadowKey) -> Option<&TrigPoly> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &ShadowKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&ShadowKey, &TrigPoly)> {
        self.entries.iter()
    }

    pub fn record(&self, key: &ShadowKey) -> Option<SolveRecord> {
        self.solve_log.get(key).copied()
    }

    fn dep(&self, key: ShadowKey) -> Result<&TrigPoly, SolveError> {
        self.entries.get(&key).ok_or(SolveError::MissingDependency(key))
    }

    /// Solves `key` and everything it depends on, memoizing the results.
    pub fn solve(&mut self, key: ShadowKey) -> Result<&TrigPoly, SolveError> {
        key.validate()?;
        if !self.entries.contains_key(&key) {
            // Fill the (h, f) rectangle below the key in dependency order.
            for h in (0..=key.h).step_by(2) {
                for f in 0..=key.f {
                    let k = ShadowKey { h, f, ..key };
                    if self.entries.contains_key(&k) {
                        continue;
                    }
                    let (y, rec) =
                        solve_shadow(k, self).map_err(|e| SolveError::AtKey { key: k, source: Box::new(e) })?;
                    self.entries.insert(k, y);
                    self.solve_log.insert(k, rec);
                }
            }
        }
        Ok(&self.entries[&key])
    }
}

/// Right-hand side of the ODE for `key`, built from already known entries.
pub fn build_rhs(key: ShadowKey, table: &ShadowTable) -> Result<TrigPoly, SolveError> {
    key.validate()?;
    let g = table.geometry();
    let q = g.freq_den();
    let sigma = key.signed_exponent(g);
    let lambda = key.lambda(g);
    let one = rat_int(1);
    let two = rat_int(2);
    let mut rhs = TrigPoly::zero(q);

    if key.h == 0 {
        if key.f == 0 {
            return Ok(rhs);
        }
        let y = table.dep(ShadowKey { f: key.f - 1, ..key })?;
        let dy = y.diff();
        let inner = if key.f == 1 {
            // σ cosφ y − sinφ y'
            y.mul_elem(ElemFactor::Cos)
                .scale_rational(&sigma)
                .sub(&dy.mul_elem(ElemFactor::Sin))
                .expect("same lattice")
        } else {
            // (σ+f)(σ+f−1) cosφ y − sinφ y' + cosφ y''
            let c = &lambda * (&lambda - &one);
            y.mul_elem(ElemFactor::Cos)
                .scale_rational(&c)
                .sub(&dy.mul_elem(ElemFactor::Sin))
                .and_then(|p| p.add(&dy.diff().mul_elem(ElemFactor::Cos)))
                .expect("same lattice")
        };
        return Ok(inner.neg());
    }

    if key.f >= 1 {
        let y = table.dep(ShadowKey { f: key.f - 1, ..key })?;
        let dy = y.diff();
        let c = (&lambda - &one) * (&two * &lambda - &one);
        let part = y
            .mul_elem(ElemFactor::Cos)
            .scale_rational(&-c)
            .add(&dy.mul_elem(ElemFactor::Sin))
            .and_then(|p| p.sub(&dy.diff().mul_elem(ElemFactor::Cos).scale_rational(&two)))
            .expect("same lattice");
        rhs = rhs.add(&part).expect("same lattice");
    }
    if key.f >= 2 {
        let y = table.dep(ShadowKey { f: key.f - 2, ..key })?;
        let dy = y.diff();
        let c = (&lambda - &two) * (&lambda - &one);
        let part = y
            .mul_elem(ElemFactor::Cos2)
            .scale_rational(&-c)
            .add(&dy.mul_elem(ElemFactor::SinCos))
            .and_then(|p| p.sub(&dy.diff().mul_elem(ElemFactor::Cos2)))
            .expect("same lattice");
        rhs = rhs.add(&part).expect("same lattice");
    }
    // θ-coupling: the plain function of order h − 2.
    let lower = table.dep(ShadowKey { h: key.h - 2, ..key })?;
    Ok(rhs.sub(lower).expect("same lattice"))
}

/// Particular solution of `λ²y + y'' = rhs` by undetermined coefficients.
pub fn helmholtz_particular(lambda: &Rational, rhs: &TrigPoly) -> Result<TrigPoly, SolveError> {
    let q = rhs.freq_den();
    let l2 = lambda * lambda;
    let abs = lambda.abs();
    let mut out = Vec::with_capacity(rhs.len());
    for (k, t) in rhs.terms() {
        let m = rat(k as i64, q as i64);
        if m == abs {
            return Err(SolveError::ResonantTerm(crate::exactnum::format_rational(&m)));
        }
        let inv = (&l2 - &m * &m).recip();
        out.push((k, t.sin.scale(&inv), t.cos.scale(&inv)));
    }
    Ok(TrigPoly::from_terms(q, out))
}

/// Adds the homogeneous solution at `|λ|` that makes `y'` vanish on both
/// faces. At Neumann eigenvalues the kernel component is set to zero.
pub fn apply_neumann(
    lambda: &Rational,
    particular: &TrigPoly,
    g: Geometry,
) -> Result<(TrigPoly, SolveRecord), SolveError> {
    let q = g.freq_den();
    let abs = lambda.abs();
    let k_scaled = &abs * rat_int(q as i64);
    if !k_scaled.is_integer() {
        return Err(SolveError::OffLattice(crate::exactnum::format_rational(lambda), q));
    }
    let k = k_scaled.to_integer().to_u32().expect("frequency fits u32");
    let phis = [g.phi1_over_pi(), g.phi2_over_pi()];
    let dp = particular.diff();
    let d: Vec<ExtScalar> = phis
        .iter()
        .map(|phi| dp.eval_exact(phi).expect("faces are multiples of π/6 on the lattice"))
        .collect();
    let degenerate = g.is_neumann_eigen(lambda);

    if abs.is_zero() {
        // Constants are the kernel; y' = p' must already vanish.
        if d.iter().any(|x| !x.is_zero()) {
            return Err(SolveError::IncompatibleBC);
        }
        return Ok((particular.clone(), SolveRecord { degenerate: true, kernel_dropped: true }));
    }

    // Row i of the closure: |λ|·(cos(|λ|φᵢ)·A − sin(|λ|φᵢ)·B) = −dᵢ.
    let homog = TrigPoly::from_terms(q, [(k, ExtScalar::one(), ExtScalar::zero())]);
    let rows: Vec<(ExtScalar, ExtScalar)> = phis
        .iter()
        .map(|phi| {
            let c = homog.diff().eval_exact(phi).expect("lattice angle");
            let s = homog.eval_exact(phi).expect("lattice angle");
            (c.scale(&abs.recip()), -s)
        })
        .collect();
    let (r1, r2) = (&rows[0], &rows[1]);
    let det = &(&r1.0 * &r2.1) - &(&r1.1 * &r2.0);
    let abs_e = ExtScalar::from_rational(abs.clone());
    let rhs1 = (-&d[0]).checked_div(&abs_e).expect("λ ≠ 0");
    let rhs2 = (-&d[1]).checked_div(&abs_e).expect("λ ≠ 0");

    let (a, b, record) = if !degenerate {
        if det.is_zero() {
            return Err(SolveError::SingularSystem);
        }
        let inv = det.inv().expect("nonzero");
        let a = &(&(&rhs1 * &r2.1) - &(&r1.1 * &rhs2)) * &inv;
        let b = &(&(&r1.0 * &rhs2) - &(&rhs1 * &r2.0)) * &inv;
        (a, b, SolveRecord::default())
    } else {
        if !det.is_zero() {
            return Err(SolveError::SingularSystem);
        }
        // Rows are unit vectors spanning the range; the kernel is orthogonal
        // to them. Take (A, B) = t·r1 and check the second row.
        let t = rhs1;
        let dot = &(&r1.0 * &r2.0) + &(&r1.1 * &r2.1);
        if &t * &dot != rhs2 {
            return Err(SolveError::IncompatibleBC);
        }
        (&t * &r1.0, &t * &r1.1, SolveRecord { degenerate: true, kernel_dropped: true })
    };
    let y = particular
        .add(&TrigPoly::from_terms(q, [(k, a, b)]))
        .expect("same lattice");
    Ok((y, record))
}

/// Solves one key whose dependencies are already in `table`.
pub fn solve_shadow(key: ShadowKey, table: &ShadowTable) -> Result<(TrigPoly, SolveRecord), SolveError> {
    key.validate()?;
    let g = table.geometry();
    if key.h == 0 && key.f == 0 {
        return Ok((g.eigenfunction(key.j), SolveRecord::default()));
    }
    let lambda = key.lambda(g);
    let rhs = build_rhs(key, table)?;
    let particular = helmholtz_particular(&lambda, &rhs)?;
    let (y, record) = apply_neumann(&lambda, &particular, g)?;
    if !ode_residual(&lambda, &y, &rhs).is_zero() {
        return Err(SolveError::Postcondition("ODE residual"));
    }
    if !neumann_residuals(&y, g).iter().all(ExtScalar::is_zero) {
        return Err(SolveError::Postcondition("Neumann residual"));
    }
    Ok((y, record))
}

/// `λ²y + y'' − rhs`.
pub fn ode_residual(lambda: &Rational, y: &TrigPoly, rhs: &TrigPoly) -> TrigPoly {
    y.scale_rational(&(lambda * lambda))
        .add(&y.diff().diff())
        .and_then(|p| p.sub(rhs))
        .expect("same lattice")
}

/// `y'(φ₁)` and `y'(φ₂)`, exactly.
pub fn neumann_residuals(y: &TrigPoly, g: Geometry) -> [ExtScalar; 2] {
    let dy = y.diff();
    [g.phi1_over_pi(), g.phi2_over_pi()]
        .map(|phi| dy.eval_exact(&phi).expect("faces are lattice angles"))
}

/// Which `(h, f)` pairs a table covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableExtent {
    pub max_h: u32,
    pub max_f: u32,
    /// Optional cap on `h + f`.
    pub max_order: Option<u32>,
}

impl TableExtent {
    /// `h ≤ max_h`, `f ≤ max_f`.
    pub fn rectangle(max_h: u32, max_f: u32) -> Self {
        TableExtent { max_h, max_f, max_order: None }
    }

    /// `h + f ≤ order`.
    pub fn triangle(order: u32) -> Self {
        TableExtent { max_h: order - order % 2, max_f: order, max_order: Some(order) }
    }

    /// Keys of one `(kind, j)` family, ordered by `(h, f)`.
    pub fn keys(&self, kind: Kind, j: u32) -> Vec<ShadowKey> {
        let mut out = Vec::new();
        for h in (0..=self.max_h).step_by(2) {
            for f in 0..=self.max_f {
                if self.max_order.is_some_and(|m| h + f > m) {
                    continue;
                }
                out.push(ShadowKey::new(kind, h, j, f));
            }
        }
        out
    }
}

/// Solves every key of `extent` for each `j`. `max_h` must be even.
pub fn build_table(g: Geometry, kind: Kind, j_list: &[u32], extent: TableExtent) -> Result<ShadowTable, SolveError> {
    assert!(extent.max_h.is_multiple_of(2), "max_h must be even");
    let mut table = ShadowTable::new(g);
    let wanted: Vec<ShadowKey> = j_list.iter().flat_map(|&j| extent.keys(kind, j)).collect();
    for key in &wanted {
        table.solve(*key)?;
    }
    // Solving fills whole rectangles; keep exactly the requested keys.
    let keep: std::collections::BTreeSet<_> = wanted.into_iter().collect();
    table.entries.retain(|k, _| keep.contains(k));
    table.solve_log.retain(|k, _| keep.contains(k));
    Ok(table)
}

/// Checks the structural invariants of one solved entry. Returns a list of
/// violations (empty when everything holds).
pub fn check_invariants(key: ShadowKey, table: &ShadowTable) -> Vec<String> {
    let mut issues = Vec::new();
    let g = table.geometry();
    let Some(y) = table.get(&key) else {
        return vec![format!("{key} missing")];
    };
    let lambda = key.lambda(g);
    match build_rhs(key, table) {
        Ok(rhs) => {
            let lhs_lambda = if key.h == 0 && key.f == 0 { g.eigenvalue(key.j) } else { lambda.clone() };
            if !ode_residual(&lhs_lambda, y, &rhs).is_zero() {
                issues.push(format!("{key}: nonzero ODE residual"));
            }
        }
        Err(e) => issues.push(format!("{key}: {e}")),
    }
    if !neumann_residuals(y, g).iter().all(ExtScalar::is_zero) {
        issues.push(format!("{key}: nonzero endpoint derivative"));
    }
    let bound = (g.eigenvalue(key.j) + rat_int((key.h + key.f) as i64)) * rat_int(g.freq_den() as i64);
    if let Some(m) = y.max_freq() {
        if rat_int(m as i64) > bound {
            issues.push(format!("{key}: frequency {m}/{} above bound", g.freq_den()));
        }
    }
    if (key.h, key.f) != (0, 0) && g.is_neumann_eigen(&lambda) {
        let k = lambda.abs() * rat_int(g.freq_den() as i64);
        if let Some(k) = k.to_integer().to_u32() {
            if y.term(k).is_some() {
                issues.push(format!("{key}: kernel frequency present at degenerate level"));
            }
        }
    }
    issues
}
