//! Rational maps of the Riemann sphere.

use crate::point::{Chart, ComplexPoint};
use crate::poly::{horner, horner_d, poly_roots, Poly, RootError};
use crate::scalar::Real;
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("{0} polynomial has no nonzero coefficient")]
    EmptyPolynomial(&'static str),
    #[error("numerator and denominator share a root (|P| = {residual:e} at a root of Q)")]
    CommonFactor { residual: f64 },
    #[error("map has degree {0}; dynamical operations need degree >= 2")]
    DegreeTooLow(usize),
    #[error("point is not fixed (spherical residual {residual:e})")]
    NotFixed { residual: f64 },
    #[error(transparent)]
    Root(#[from] RootError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FixedPointClass {
    Superattracting,
    Attracting,
    Indifferent,
    Repelling,
}

impl FixedPointClass {
    pub fn classify<T: Real>(multiplier: Complex<T>) -> Self {
        let m = multiplier.norm();
        let band = T::MULTIPLIER_BAND;
        if m <= band {
            FixedPointClass::Superattracting
        } else if m < T::one() - band {
            FixedPointClass::Attracting
        } else if (m - T::one()).abs() <= band {
            FixedPointClass::Indifferent
        } else {
            FixedPointClass::Repelling
        }
    }

    pub fn is_attracting(self) -> bool {
        matches!(self, FixedPointClass::Superattracting | FixedPointClass::Attracting)
    }

    pub fn name(self) -> &'static str {
        match self {
            FixedPointClass::Superattracting => "superattracting",
            FixedPointClass::Attracting => "attracting",
            FixedPointClass::Indifferent => "indifferent",
            FixedPointClass::Repelling => "repelling",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointInfo<T> {
    pub location: ComplexPoint<T>,
    pub multiplier: Complex<T>,
    pub class: FixedPointClass,
    pub multiplicity: usize,
}

/// `R = P/Q` with coprime `P`, `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap<T> {
    num: Poly<T>,
    den: Poly<T>,
    degree: usize,
    num_rev: Vec<Complex<T>>,
    den_rev: Vec<Complex<T>>,
}

/// Validates and trims coefficient lists (ascending degree) into a map.
/// Degree-one maps parse; dynamical operations reject them.
pub fn parse_map<T: Real>(num: &[Complex<T>], den: &[Complex<T>]) -> Result<RationalMap<T>, MapError> {
    RationalMap::new(num.to_vec(), den.to_vec())
}

impl<T: Real> RationalMap<T> {
    pub fn new(num: Vec<Complex<T>>, den: Vec<Complex<T>>) -> Result<Self, MapError> {
        let num = Poly::new(num);
        let den = Poly::new(den);
        if num.is_zero() {
            return Err(MapError::EmptyPolynomial("numerator"));
        }
        if den.is_zero() {
            return Err(MapError::EmptyPolynomial("denominator"));
        }
        let degree = num.degree().max(den.degree());
        let map = RationalMap {
            num_rev: num.reversed(degree),
            den_rev: den.reversed(degree),
            num,
            den,
            degree,
        };
        map.check_coprime()?;
        Ok(map)
    }

    /// Polynomial map from ascending real coefficients.
    pub fn polynomial(coeffs: &[T]) -> Result<Self, MapError> {
        let num = Poly::from_real(coeffs);
        RationalMap::new(num.coeffs().to_vec(), vec![Complex::new(T::one(), T::zero())])
    }

    pub fn from_real(num: &[T], den: &[T]) -> Result<Self, MapError> {
        RationalMap::new(
            Poly::from_real(num).coeffs().to_vec(),
            Poly::from_real(den).coeffs().to_vec(),
        )
    }

    fn check_coprime(&self) -> Result<(), MapError> {
        if self.den.degree() == 0 {
            return Ok(());
        }
        let scale = self.num.scale();
        let rev = self.num.reversed(self.num.degree());
        let mut worst = T::infinity();
        for (r, _) in poly_roots(self.den.coeffs())? {
            let v = if r.norm() <= T::one() {
                self.num.eval(r).norm()
            } else {
                horner(&rev, r.inv()).norm()
            };
            if v < worst {
                worst = v;
            }
        }
        if worst <= T::COPRIME * scale {
            return Err(MapError::CommonFactor {
                residual: (worst / scale).to_f64().unwrap_or(0.0),
            });
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num(&self) -> &Poly<T> {
        &self.num
    }

    pub fn den(&self) -> &Poly<T> {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == 0
    }

    /// Coefficients of `P/Q` when `Q` is constant.
    pub fn polynomial_coeffs(&self) -> Option<Vec<Complex<T>>> {
        if !self.is_polynomial() {
            return None;
        }
        let q = self.den.coeffs()[0];
        Some(self.num.coeffs().iter().map(|&c| c / q).collect())
    }

    pub fn require_dynamical(&self) -> Result<(), MapError> {
        if self.degree < 2 {
            Err(MapError::DegreeTooLow(self.degree))
        } else {
            Ok(())
        }
    }

    /// Numerator and denominator coefficients expressed in `chart`.
    fn chart_polys(&self, chart: Chart) -> (&[Complex<T>], &[Complex<T>]) {
        match chart {
            Chart::Z => (self.num.coeffs(), self.den.coeffs()),
            Chart::W => (&self.num_rev, &self.den_rev),
        }
    }

    /// `R(z)` on the whole sphere; the result is in its canonical chart.
    pub fn evaluate(&self, z: &ComplexPoint<T>) -> ComplexPoint<T> {
        let x = z.canonical();
        let (n, d) = self.chart_polys(x.chart);
        let u = x.coord();
        let a = horner(n, u);
        let b = horner(d, u);
        if a.norm_sqr() <= b.norm_sqr() {
            ComplexPoint::from_chart(a / b, Chart::Z)
        } else {
            ComplexPoint::from_chart(b / a, Chart::W)
        }
    }

    pub fn evaluate_finite(&self, z: Complex<T>) -> ComplexPoint<T> {
        self.evaluate(&ComplexPoint::finite(z))
    }

    /// Derivative of the map read in charts: input coordinate in `z.chart`,
    /// output coordinate in `out`.
    pub fn chart_derivative(&self, z: &ComplexPoint<T>, out: Chart) -> Complex<T> {
        let (n, d) = self.chart_polys(z.chart);
        let u = z.coord();
        let (a, da) = horner_d(n, u);
        let (b, db) = horner_d(d, u);
        match out {
            Chart::Z => (da * b - a * db) / (b * b),
            Chart::W => (db * a - b * da) / (a * a),
        }
    }

    /// Derivative at a fixed point, read in the point's canonical chart.
    pub fn multiplier(&self, fixed: &ComplexPoint<T>) -> Result<Complex<T>, MapError> {
        let p = fixed.canonical();
        let residual = self.evaluate(&p).chordal(&p);
        if residual.is_nan() || residual > T::FIXED_RESIDUAL {
            return Err(MapError::NotFixed {
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.chart_derivative(&p, p.chart))
    }

    /// Fixed points with multiplicity: roots of `P - zQ`, plus infinity when
    /// `deg P > deg Q`.
    pub fn fixed_points(&self) -> Result<Vec<FixedPointInfo<T>>, MapError> {
        self.require_dynamical()?;
        let f = self.num.combine(
            Complex::new(T::one(), T::zero()),
            &self.den.shift(),
            Complex::new(T::one(), T::zero()),
        );
        let mut out = Vec::new();
        if f.degree() >= 1 {
            for (r, mult) in poly_roots(f.coeffs())? {
                out.push(self.fixed_info(ComplexPoint::finite(r).canonical(), mult)?);
            }
        }
        if self.num.degree() > self.den.degree() {
            let mult = self.degree + 1 - f.degree();
            out.push(self.fixed_info(ComplexPoint::infinity(), mult)?);
        }
        Ok(out)
    }

    fn fixed_info(&self, location: ComplexPoint<T>, multiplicity: usize) -> Result<FixedPointInfo<T>, MapError> {
        let multiplier = self.multiplier(&location)?;
        Ok(FixedPointInfo {
            location,
            multiplier,
            class: FixedPointClass::classify(multiplier),
            multiplicity,
        })
    }

    /// Distinct critical points: roots of `P'Q - PQ'`, plus infinity when the
    /// local degree there exceeds one.
    pub fn critical_points(&self) -> Result<Vec<ComplexPoint<T>>, MapError> {
        Ok(self
            .critical_points_with_multiplicity()?
            .into_iter()
            .map(|(p, _)| p)
            .collect())
    }

    pub fn critical_points_with_multiplicity(&self) -> Result<Vec<(ComplexPoint<T>, usize)>, MapError> {
        self.require_dynamical()?;
        let one = Complex::new(T::one(), T::zero());
        let wronskian = self
            .num
            .derivative()
            .mul(&self.den)
            .combine(one, &self.num.mul(&self.den.derivative()), one);
        let mut out = Vec::new();
        if wronskian.degree() >= 1 {
            for (r, mult) in poly_roots(wronskian.coeffs())? {
                out.push((ComplexPoint::finite(r).canonical(), mult));
            }
        }
        let finite = if wronskian.is_zero() { 0 } else { wronskian.degree() };
        let at_infinity = 2 * self.degree - 2 - finite;
        if at_infinity > 0 {
            out.push((ComplexPoint::infinity(), at_infinity));
        }
        Ok(out)
    }

    /// Solutions of `R(w) = c` with multiplicity; the multiplicities always
    /// sum to the degree.
    pub fn preimages(&self, c: &ComplexPoint<T>) -> Result<Vec<(ComplexPoint<T>, usize)>, MapError> {
        let c = c.canonical();
        let one = Complex::new(T::one(), T::zero());
        let f = match c.chart {
            Chart::Z => self.num.combine(one, &self.den, c.coord()),
            Chart::W => self.num.combine(c.coord(), &self.den, one),
        };
        let mut out = Vec::new();
        let finite = if f.is_zero() { 0 } else { f.degree() };
        if finite >= 1 {
            for (r, mult) in poly_roots(f.coeffs())? {
                out.push((ComplexPoint::finite(r).canonical(), mult));
            }
        }
        if finite < self.degree {
            out.push((ComplexPoint::infinity(), self.degree - finite));
        }
        Ok(out)
    }
}
