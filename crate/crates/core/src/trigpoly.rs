//! Finite trigonometric polynomials on a fixed frequency lattice.
//!
//! A [`TrigPoly`] is `Σ_k s_k·sin(kφ/q) + c_k·cos(kφ/q)` with `k ≥ 0` an
//! integer and `q` the lattice denominator (2 for the crack, 3 for the
//! notch). Coefficients are exact elements of Q(√3).

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::exactnum::{rat, ExtScalar, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrigError {
    #[error("frequency denominators differ ({0} vs {1})")]
    FreqDenMismatch(u32, u32),
    #[error("angle {0}π is not a multiple of π/6 for every stored frequency")]
    UnsupportedEndpoint(String),
    #[error("malformed trig polynomial JSON: {0}")]
    Json(String),
}

/// Coefficient pair of one frequency.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TrigTerm {
    pub sin: ExtScalar,
    pub cos: ExtScalar,
}

impl TrigTerm {
    fn is_zero(&self) -> bool {
        self.sin.is_zero() && self.cos.is_zero()
    }
}

/// Elementary multipliers appearing in the shadow recursions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElemFactor {
    /// cos φ
    Cos,
    /// sin φ
    Sin,
    /// cos² φ
    Cos2,
    /// sin φ · cos φ
    SinCos,
}

impl ElemFactor {
    pub const ALL: [ElemFactor; 4] = [ElemFactor::Cos, ElemFactor::Sin, ElemFactor::Cos2, ElemFactor::SinCos];

    pub fn eval(self, phi: f64) -> f64 {
        match self {
            ElemFactor::Cos => phi.cos(),
            ElemFactor::Sin => phi.sin(),
            ElemFactor::Cos2 => phi.cos().powi(2),
            ElemFactor::SinCos => phi.sin() * phi.cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrigPoly {
    freq_den: u32,
    terms: BTreeMap<u32, TrigTerm>,
}

impl TrigPoly {
    pub fn zero(freq_den: u32) -> Self {
        assert!(freq_den > 0, "frequency denominator must be positive");
        TrigPoly { freq_den, terms: BTreeMap::new() }
    }

    /// `c·sin(kφ/q)`.
    pub fn sin_term(freq_den: u32, k: u32, c: ExtScalar) -> Self {
        let mut p = TrigPoly::zero(freq_den);
        p.accumulate(k as i64, c, ExtScalar::zero());
        p
    }

    /// `c·cos(kφ/q)`.
    pub fn cos_term(freq_den: u32, k: u32, c: ExtScalar) -> Self {
        let mut p = TrigPoly::zero(freq_den);
        p.accumulate(k as i64, ExtScalar::zero(), c);
        p
    }

    /// Builds from `(k, sin, cos)` triples; repeated frequencies are summed.
    pub fn from_terms<I>(freq_den: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (u32, ExtScalar, ExtScalar)>,
    {
        let mut p = TrigPoly::zero(freq_den);
        for (k, s, c) in terms {
            p.accumulate(k as i64, s, c);
        }
        p
    }

    pub fn freq_den(&self) -> u32 {
        self.freq_den
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending frequency order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &TrigTerm)> {
        self.terms.iter().map(|(&k, t)| (k, t))
    }

    pub fn term(&self, k: u32) -> Option<&TrigTerm> {
        self.terms.get(&k)
    }

    /// Largest stored frequency numerator.
    pub fn max_freq(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }

    /// Adds `sin·sin(kφ/q) + cos·cos(kφ/q)`, folding negative `k` and
    /// dropping `sin 0`.
    fn accumulate(&mut self, k: i64, sin: ExtScalar, cos: ExtScalar) {
        let (k, sin) = if k < 0 { (-k, -sin) } else { (k, sin) };
        let k = u32::try_from(k).expect("frequency out of range");
        let entry = self.terms.entry(k).or_default();
        if k != 0 {
            entry.sin += &sin;
        }
        entry.cos += &cos;
        if entry.is_zero() {
            self.terms.remove(&k);
        }
    }

    fn check_den(&self, other: &TrigPoly) -> Result<(), TrigError> {
        if self.freq_den != other.freq_den {
            return Err(TrigError::FreqDenMismatch(self.freq_den, other.freq_den));
        }
        Ok(())
    }

    pub fn add(&self, other: &TrigPoly) -> Result<TrigPoly, TrigError> {
        self.check_den(other)?;
        let mut out = self.clone();
        for (&k, t) in &other.terms {
            out.accumulate(k as i64, t.sin.clone(), t.cos.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TrigPoly) -> Result<TrigPoly, TrigError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TrigPoly {
        self.scale(&ExtScalar::from(-1))
    }

    pub fn scale(&self, c: &ExtScalar) -> TrigPoly {
        let mut out = TrigPoly::zero(self.freq_den);
        if c.is_zero() {
            return out;
        }
        for (&k, t) in &self.terms {
            out.accumulate(k as i64, &t.sin * c, &t.cos * c);
        }
        out
    }

    pub fn scale_rational(&self, r: &Rational) -> TrigPoly {
        self.scale(&ExtScalar::from_rational(r.clone()))
    }

    /// Product with `cos(dφ/q)`.
    fn mul_cos_shift(&self, d: i64) -> TrigPoly {
        let half = rat(1, 2);
        let mut out = TrigPoly::zero(self.freq_den);
        for (&k, t) in &self.terms {
            let k = k as i64;
            let s = t.sin.scale(&half);
            let c = t.cos.scale(&half);
            out.accumulate(k + d, s.clone(), c.clone());
            out.accumulate(k - d, s, c);
        }
        out
    }

    /// Product with `sin(dφ/q)`.
    fn mul_sin_shift(&self, d: i64) -> TrigPoly {
        let half = rat(1, 2);
        let mut out = TrigPoly::zero(self.freq_den);
        for (&k, t) in &self.terms {
            let k = k as i64;
            let s = t.sin.scale(&half);
            let c = t.cos.scale(&half);
            // sin a sin b = ½[cos(a−b) − cos(a+b)], cos a sin b = ½[sin(a+b) − sin(a−b)]
            out.accumulate(k + d, c.clone(), -&s);
            out.accumulate(k - d, -c, s);
        }
        out
    }

    pub fn mul_elem(&self, f: ElemFactor) -> TrigPoly {
        let q = self.freq_den as i64;
        match f {
            ElemFactor::Cos => self.mul_cos_shift(q),
            ElemFactor::Sin => self.mul_sin_shift(q),
            ElemFactor::Cos2 => {
                // cos²φ = (1 + cos 2φ)/2
                let half = rat(1, 2);
                let p = self.scale_rational(&half);
                p.add(&p.mul_cos_shift(2 * q)).expect("same lattice")
            }
            ElemFactor::SinCos => self.mul_sin_shift(2 * q).scale_rational(&rat(1, 2)),
        }
    }

    pub fn diff(&self) -> TrigPoly {
        let mut out = TrigPoly::zero(self.freq_den);
        for (&k, t) in &self.terms {
            let w = rat(k as i64, self.freq_den as i64);
            out.accumulate(k as i64, t.cos.scale(&-w.clone()), t.sin.scale(&w));
        }
        out
    }

    /// Exact value at `angle_over_pi · π`. Each `k/q · angle_over_pi` must
    /// be a multiple of 1/6 so that the sines and cosines lie in Q(√3).
    pub fn eval_exact(&self, angle_over_pi: &Rational) -> Result<ExtScalar, TrigError> {
        let mut acc = ExtScalar::zero();
        for (&k, t) in &self.terms {
            let sixths = angle_over_pi * rat(6 * k as i64, self.freq_den as i64);
            if !sixths.is_integer() {
                return Err(TrigError::UnsupportedEndpoint(crate::exactnum::format_rational(angle_over_pi)));
            }
            let n = sixths.to_integer().mod_floor(&12.into()).to_i64().expect("reduced mod 12");
            acc += &(&t.sin * &sin_pi_sixths(n));
            acc += &(&t.cos * &sin_pi_sixths(n + 3));
        }
        Ok(acc)
    }

    pub fn eval_float(&self, phi: f64) -> f64 {
        let q = self.freq_den as f64;
        self.terms
            .iter()
            .map(|(&k, t)| {
                let arg = k as f64 * phi / q;
                t.sin.to_f64() * arg.sin() + t.cos.to_f64() * arg.cos()
            })
            .sum()
    }

    /// `{"freq_den": q, "terms": [{"num": k, "sin": ["a","b"], "cos": ["a","b"]}, ...]}`
    pub fn to_json(&self) -> Value {
        let pair = |x: &ExtScalar| {
            json!([crate::exactnum::format_rational(&x.a), crate::exactnum::format_rational(&x.b)])
        };
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(&k, t)| json!({"num": k, "sin": pair(&t.sin), "cos": pair(&t.cos)}))
            .collect();
        json!({"freq_den": self.freq_den, "terms": terms})
    }

    pub fn from_json(v: &Value) -> Result<TrigPoly, TrigError> {
        let err = |m: &str| TrigError::Json(m.to_string());
        let q = v
            .get("freq_den")
            .and_then(Value::as_u64)
            .filter(|&q| q > 0)
            .ok_or_else(|| err("missing freq_den"))?;
        let mut p = TrigPoly::zero(q as u32);
        let terms = v.get("terms").and_then(Value::as_array).ok_or_else(|| err("missing terms"))?;
        for t in terms {
            let k = t.get("num").and_then(Value::as_u64).ok_or_else(|| err("missing num"))?;
            let read = |key: &str| -> Result<ExtScalar, TrigError> {
                let Some(pair) = t.get(key) else { return Ok(ExtScalar::zero()) };
                let arr = pair.as_array().filter(|a| a.len() == 2).ok_or_else(|| err("coefficient must be a pair"))?;
                let mut parts = arr.iter().map(|x| {
                    x.as_str()
                        .ok_or_else(|| err("coefficient must be a string"))
                        .and_then(|s| crate::exactnum::parse_rational(s).map_err(|e| TrigError::Json(e.to_string())))
                });
                let a = parts.next().expect("pair")?;
                let b = parts.next().expect("pair")?;
                Ok(ExtScalar::new(a, b))
            };
            p.accumulate(k as i64, read("sin")?, read("cos")?);
        }
        Ok(p)
    }
}

/// `sin(nπ/6)` as an element of Q(√3).
pub fn sin_pi_sixths(n: i64) -> ExtScalar {
    let half_r3 = ExtScalar::new(Rational::zero(), rat(1, 2));
    
    match n.rem_euclid(12) {
        0 | 6 => ExtScalar::zero(),
        1 | 5 => ExtScalar::from_rational(rat(1, 2)),
        2 | 4 => half_r3,
        3 => ExtScalar::one(),
        7 | 11 => ExtScalar::from_rational(rat(-1, 2)),
        8 | 10 => -half_r3,
        9 => ExtScalar::from(-1),
        _ => unreachable!(),
    }
}

/// `cos(nπ/6)`.
pub fn cos_pi_sixths(n: i64) -> ExtScalar {
    sin_pi_sixths(n + 3)
}

/// Emits the DSL term list: `c sin k/q ; c cos k/q ; ...`, or `0`.
impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&k, t) in &self.terms {
            for (name, c) in [("sin", &t.sin), ("cos", &t.cos)] {
                if c.is_zero() {
                    continue;
                }
                if !first {
                    write!(f, " ; ")?;
                }
                first = false;
                write!(f, "{} {} {}/{}", c, name, k, self.freq_den)?;
            }
        }
        Ok(())
    }
}

/// Frequency `k/q` as a reduced rational.
pub fn freq_value(k: u32, freq_den: u32) -> Rational {
    rat(k as i64, freq_den as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;
    use std::f64::consts::PI;

    fn q(a: i64, b: i64) -> ExtScalar {
        ExtScalar::from_rational(rat(a, b))
    }

    #[test]
    fn add_examples() {
        let s = TrigPoly::sin_term(2, 1, ExtScalar::one());
        assert!(s.add(&s.neg()).unwrap().is_zero());
        let a = TrigPoly::sin_term(2, 1, q(1, 4));
        let b = TrigPoly::sin_term(2, 1, q(1, 12));
        assert_eq!(a.add(&b).unwrap(), TrigPoly::sin_term(2, 1, q(1, 3)));
        let p = TrigPoly::sin_term(3, 2, ExtScalar::one())
            .add(&TrigPoly::cos_term(3, 2, ExtScalar::sqrt3().inv().unwrap()))
            .unwrap();
        let t = p.term(2).unwrap();
        assert_eq!(t.sin, ExtScalar::one());
        assert_eq!(t.cos, ExtScalar::from_ints((0, 1), (1, 3)));
        assert_eq!(
            TrigPoly::zero(2).add(&TrigPoly::zero(3)),
            Err(TrigError::FreqDenMismatch(2, 3))
        );
    }

    #[test]
    fn scale_examples() {
        let s = TrigPoly::sin_term(2, 3, ExtScalar::one());
        assert!(s.scale(&ExtScalar::zero()).is_zero());
        assert_eq!(s.scale(&q(-1, 4)), TrigPoly::sin_term(2, 3, q(-1, 4)));
        let t = TrigPoly::sin_term(3, 2, ExtScalar::one()).scale(&ExtScalar::sqrt3());
        assert_eq!(t.term(2).unwrap().sin, ExtScalar::sqrt3());
    }

    #[test]
    fn product_to_sum_examples() {
        let s = TrigPoly::sin_term(2, 1, ExtScalar::one());
        let expect = TrigPoly::from_terms(2, [(3, q(1, 2), ExtScalar::zero()), (1, q(-1, 2), ExtScalar::zero())]);
        assert_eq!(s.mul_elem(ElemFactor::Cos), expect);

        let c = TrigPoly::cos_term(2, 1, ExtScalar::one());
        let expect = TrigPoly::from_terms(2, [(3, q(1, 2), ExtScalar::zero()), (1, q(1, 2), ExtScalar::zero())]);
        assert_eq!(c.mul_elem(ElemFactor::Sin), expect);

        let expect = TrigPoly::from_terms(
            2,
            [
                (1, q(1, 2), ExtScalar::zero()),
                (5, q(1, 4), ExtScalar::zero()),
                (3, q(-1, 4), ExtScalar::zero()),
            ],
        );
        assert_eq!(s.mul_elem(ElemFactor::Cos2), expect);
    }

    #[test]
    fn cos2_example_matches_sampling() {
        // Brute-force check of the hand expansion at 100 points.
        let s = TrigPoly::sin_term(2, 1, ExtScalar::one()).mul_elem(ElemFactor::Cos2);
        for i in 0..100 {
            let phi = -PI + 2.0 * PI * i as f64 / 99.0;
            let direct = phi.cos().powi(2) * (phi / 2.0).sin();
            assert!((s.eval_float(phi) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn diff_examples() {
        let s = TrigPoly::sin_term(2, 1, ExtScalar::one());
        assert_eq!(s.diff(), TrigPoly::cos_term(2, 1, q(1, 2)));
        let s3 = TrigPoly::sin_term(2, 3, ExtScalar::one());
        assert_eq!(s3.diff().diff(), TrigPoly::sin_term(2, 3, q(-9, 4)));

        let p = TrigPoly::from_terms(3, [(2, ExtScalar::one(), ExtScalar::from_ints((0, 1), (1, 3)))]);
        let d = p.diff();
        let t = d.term(2).unwrap();
        assert_eq!(t.cos, q(2, 3));
        // −2/(3√3) = −2√3/9
        assert_eq!(t.sin, ExtScalar::from_ints((0, 1), (-2, 9)));
        let phi = 0.3;
        let fd = (p.eval_float(phi + 1e-6) - p.eval_float(phi - 1e-6)) / 2e-6;
        assert!((d.eval_float(phi) - fd).abs() < 1e-8);
    }

    #[test]
    fn exact_evaluation() {
        let s = TrigPoly::sin_term(2, 1, ExtScalar::one());
        assert_eq!(s.eval_exact(&rat(1, 1)).unwrap(), ExtScalar::one());
        let c = TrigPoly::cos_term(3, 2, ExtScalar::one());
        assert_eq!(c.eval_exact(&rat(-1, 1)).unwrap(), q(-1, 2));
        let p = TrigPoly::from_terms(3, [(2, ExtScalar::one(), ExtScalar::from_ints((0, 1), (1, 3)))]);
        assert!(p.diff().eval_exact(&rat(1, 2)).unwrap().is_zero());
        assert!(matches!(s.eval_exact(&rat(1, 7)), Err(TrigError::UnsupportedEndpoint(_))));
        // the empty polynomial is zero anywhere
        assert!(TrigPoly::zero(2).eval_exact(&rat(1, 7)).unwrap().is_zero());
    }

    #[test]
    fn float_evaluation() {
        let s = TrigPoly::sin_term(2, 1, ExtScalar::one());
        assert!((s.eval_float(PI / 3.0) - 0.5).abs() < 1e-15);
        let s = TrigPoly::sin_term(2, 1, q(1, 4));
        assert!((s.eval_float(PI) - 0.25).abs() < 1e-15);
        assert_eq!(TrigPoly::zero(3).eval_float(1.234), 0.0);
    }

    #[test]
    fn sixths_table_matches_libm() {
        for n in -24..24 {
            let x = n as f64 * PI / 6.0;
            assert!((sin_pi_sixths(n).to_f64() - x.sin()).abs() < 1e-14);
            assert!((cos_pi_sixths(n).to_f64() - x.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn display_and_json() {
        let p = TrigPoly::from_terms(3, [(2, ExtScalar::one(), ExtScalar::from_ints((0, 1), (1, 3)))]);
        assert_eq!(p.to_string(), "1 sin 2/3 ; 0+1/3r3 cos 2/3");
        assert_eq!(TrigPoly::zero(2).to_string(), "0");
        let back = TrigPoly::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        assert_eq!(
            p.to_json().to_string(),
            r#"{"freq_den":3,"terms":[{"cos":["0","1/3"],"num":2,"sin":["1","0"]}]}"#
        );
        assert!(TrigPoly::from_json(&json!({"terms": []})).is_err());
    }

    #[test]
    fn constant_term_has_no_sine() {
        // sin(φ/2)·sin(φ/2) would give a constant; via cos shift at k = d.
        let s = TrigPoly::sin_term(2, 2, ExtScalar::one()).mul_elem(ElemFactor::Sin);
        // sin φ · sin φ = (1 − cos 2φ)/2
        let expect = TrigPoly::from_terms(2, [(0, ExtScalar::zero(), q(1, 2)), (4, ExtScalar::zero(), q(-1, 2))]);
        assert_eq!(s, expect);
    }
}
