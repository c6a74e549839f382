//! The two wedge configurations and their Neumann eigenpairs.

use std::fmt;
use std::str::FromStr;

use num_traits::Signed;

use crate::exactnum::{rat, rat_int, Rational};
use crate::trigpoly::{cos_pi_sixths, sin_pi_sixths, TrigPoly};

/// Wedge around a circular edge, `φ₁ ≤ φ ≤ φ₂` in the meridian half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Geometry {
    /// Penny-shaped crack, φ ∈ [−π, π].
    Crack,
    /// 90° V-notch, φ ∈ [−π, π/2].
    VNotch90,
}

impl Geometry {
    pub const ALL: [Geometry; 2] = [Geometry::Crack, Geometry::VNotch90];

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Crack => "crack",
            Geometry::VNotch90 => "vnotch90",
        }
    }

    /// Lower face φ₁ as a multiple of π.
    pub fn phi1_over_pi(self) -> Rational {
        rat_int(-1)
    }

    /// Upper face φ₂ as a multiple of π.
    pub fn phi2_over_pi(self) -> Rational {
        match self {
            Geometry::Crack => rat_int(1),
            Geometry::VNotch90 => rat(1, 2),
        }
    }

    /// Opening angle ω = φ₂ − φ₁ as a multiple of π.
    pub fn opening_over_pi(self) -> Rational {
        self.phi2_over_pi() - self.phi1_over_pi()
    }

    pub fn phi1(self) -> f64 {
        -std::f64::consts::PI
    }

    pub fn phi2(self) -> f64 {
        match self {
            Geometry::Crack => std::f64::consts::PI,
            Geometry::VNotch90 => std::f64::consts::FRAC_PI_2,
        }
    }

    /// Frequency lattice denominator q: every frequency is k/q.
    pub fn freq_den(self) -> u32 {
        match self {
            Geometry::Crack => 2,
            Geometry::VNotch90 => 3,
        }
    }

    /// `α_j = j·π/ω`.
    pub fn eigenvalue(self, j: u32) -> Rational {
        assert!(j >= 1, "eigenvalue index starts at 1");
        rat_int(j as i64) / self.opening_over_pi()
    }

    /// `α_j` as a numerator over [`Geometry::freq_den`].
    pub fn eigenvalue_numerator(self, j: u32) -> u32 {
        match self {
            Geometry::Crack => j,
            Geometry::VNotch90 => 2 * j,
        }
    }

    /// Whether `λ = n·π/ω` for some integer `n ≥ 0`.
    pub fn is_neumann_eigen(self, lambda: &Rational) -> bool {
        (lambda.abs() * self.opening_over_pi()).is_integer()
    }

    /// Neumann eigenfunction `∝ cos(α_j(φ − φ₁))`, written as
    /// `A·sin(α_j φ) + B·cos(α_j φ)` with `A = 1` when `A ≠ 0`, else `B = 1`.
    pub fn eigenfunction(self, j: u32) -> TrigPoly {
        let k = self.eigenvalue_numerator(j);
        let q = self.freq_den();
        // cos(αφ − αφ₁) = cos(αφ₁)cos(αφ) + sin(αφ₁)sin(αφ); αφ₁ is a multiple of π/6.
        let sixths = self.eigenvalue(j) * self.phi1_over_pi() * rat_int(6);
        debug_assert!(sixths.is_integer());
        let n: i64 = sixths.to_integer().try_into().expect("small angle");
        let a = sin_pi_sixths(n);
        let b = cos_pi_sixths(n);
        let norm = if a.is_zero() { &b } else { &a };
        let inv = norm.inv().expect("eigenfunction has a nonzero coefficient");
        TrigPoly::from_terms(q, [(k, &a * &inv, &b * &inv)])
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Geometry {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "crack" => Ok(Geometry::Crack),
            "vnotch90" => Ok(Geometry::VNotch90),
            other => Err(format!("unknown geometry `{other}` (expected crack or vnotch90)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{rat, ExtScalar};

    #[test]
    fn eigenvalues() {
        assert_eq!(Geometry::Crack.eigenvalue(1), rat(1, 2));
        assert_eq!(Geometry::VNotch90.eigenvalue(2), rat(4, 3));
        assert_eq!(Geometry::VNotch90.eigenvalue(3), rat(2, 1));
        for g in Geometry::ALL {
            for j in 1..40 {
                assert!(g.eigenvalue(j + 1) > g.eigenvalue(j));
                assert_eq!(g.eigenvalue(j), rat(g.eigenvalue_numerator(j) as i64, g.freq_den() as i64));
            }
        }
    }

    #[test]
    fn eigenfunctions() {
        assert_eq!(Geometry::Crack.eigenfunction(1), TrigPoly::sin_term(2, 1, ExtScalar::one()));
        assert_eq!(
            Geometry::VNotch90.eigenfunction(1),
            TrigPoly::from_terms(3, [(2, ExtScalar::one(), ExtScalar::from_ints((0, 1), (1, 3)))])
        );
        assert_eq!(Geometry::VNotch90.eigenfunction(3), TrigPoly::cos_term(3, 6, ExtScalar::one()));
        assert_eq!(Geometry::Crack.eigenfunction(2), TrigPoly::cos_term(2, 2, ExtScalar::one()));
    }

    #[test]
    fn eigenfunctions_satisfy_neumann_and_ode() {
        for g in Geometry::ALL {
            for j in 1..=20 {
                let y = g.eigenfunction(j);
                let dy = y.diff();
                assert!(dy.eval_exact(&g.phi1_over_pi()).unwrap().is_zero(), "{g} j={j}");
                assert!(dy.eval_exact(&g.phi2_over_pi()).unwrap().is_zero(), "{g} j={j}");
                let a = g.eigenvalue(j);
                let res = y.scale_rational(&(&a * &a)).add(&dy.diff()).unwrap();
                assert!(res.is_zero(), "{g} j={j}");
            }
        }
    }

    #[test]
    fn neumann_eigen_detection() {
        assert!(Geometry::Crack.is_neumann_eigen(&rat(5, 2)));
        assert!(!Geometry::VNotch90.is_neumann_eigen(&rat(23, 3)));
        assert!(Geometry::VNotch90.is_neumann_eigen(&rat(8, 3)));
        assert!(Geometry::VNotch90.is_neumann_eigen(&rat(0, 1)));
        assert!(Geometry::VNotch90.is_neumann_eigen(&rat(-4, 3)));
        assert!(!Geometry::VNotch90.is_neumann_eigen(&rat(1, 3)));
    }

    #[test]
    fn names_round_trip() {
        for g in Geometry::ALL {
            assert_eq!(g.name().parse::<Geometry>().unwrap(), g);
        }
        assert!("wedge".parse::<Geometry>().is_err());
    }
}
