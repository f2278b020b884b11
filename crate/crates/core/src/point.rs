//! Points of the Riemann sphere in one of two affine charts.

use crate::scalar::Real;
use num_complex::Complex;
use std::fmt;

/// Chart modulus beyond which a coordinate is moved to the other chart.
pub const CHART_EXTENT: f64 = 1.5;

/// Affine chart of the sphere: `Z` is the ordinary coordinate, `W` is `w = 1/z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Chart {
    Z,
    W,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::Z => Chart::W,
            Chart::W => Chart::Z,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Chart::Z => 0,
            Chart::W => 1,
        }
    }

    pub fn from_index(i: usize) -> Chart {
        if i == 0 {
            Chart::Z
        } else {
            Chart::W
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chart::Z => write!(f, "z"),
            Chart::W => write!(f, "w"),
        }
    }
}

/// A point of the sphere, stored as a coordinate in a chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexPoint<T> {
    pub re: T,
    pub im: T,
    pub chart: Chart,
}

impl<T: Real> ComplexPoint<T> {
    pub fn new(re: T, im: T, chart: Chart) -> Self {
        ComplexPoint { re, im, chart }
    }

    pub fn finite(z: Complex<T>) -> Self {
        ComplexPoint::new(z.re, z.im, Chart::Z)
    }

    pub fn from_chart(coord: Complex<T>, chart: Chart) -> Self {
        ComplexPoint::new(coord.re, coord.im, chart)
    }

    pub fn infinity() -> Self {
        ComplexPoint::new(T::zero(), T::zero(), Chart::W)
    }

    pub fn coord(&self) -> Complex<T> {
        Complex::new(self.re, self.im)
    }

    pub fn modulus(&self) -> T {
        self.coord().norm()
    }

    pub fn is_infinity(&self) -> bool {
        self.chart == Chart::W && self.re == T::zero() && self.im == T::zero()
    }

    pub fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    /// The same point expressed in `chart`. Converting the origin of one
    /// chart yields an infinite coordinate in the other.
    pub fn in_chart(&self, chart: Chart) -> Self {
        if chart == self.chart {
            return *self;
        }
        let c = self.coord();
        if c.re == T::zero() && c.im == T::zero() {
            return ComplexPoint::new(T::infinity(), T::zero(), chart);
        }
        ComplexPoint::from_chart(c.inv(), chart)
    }

    /// Chart `Z` when `|z| <= 1`, chart `W` otherwise; the coordinate then has
    /// modulus at most one.
    pub fn canonical(&self) -> Self {
        if !self.is_finite_value() {
            return ComplexPoint::new(T::zero(), T::zero(), self.chart.other());
        }
        let m = self.modulus();
        match self.chart {
            Chart::Z if m <= T::one() => *self,
            Chart::W if m < T::one() => *self,
            _ => self.in_chart(self.chart.other()),
        }
    }

    /// Value as a finite complex number; `None` at infinity.
    pub fn to_finite(&self) -> Option<Complex<T>> {
        match self.chart {
            Chart::Z => Some(self.coord()),
            Chart::W => {
                if self.is_infinity() {
                    None
                } else {
                    Some(self.coord().inv())
                }
            }
        }
    }

    /// Image on the unit sphere under inverse stereographic projection.
    pub fn to_sphere(&self) -> [T; 3] {
        let two = T::lit(2.0);
        let c = self.coord();
        if !self.is_finite_value() {
            let north = if self.chart == Chart::Z { T::one() } else { -T::one() };
            return [T::zero(), T::zero(), north];
        }
        let r2 = c.norm_sqr();
        let den = T::one() + r2;
        match self.chart {
            Chart::Z => [two * c.re / den, two * c.im / den, (r2 - T::one()) / den],
            Chart::W => [two * c.re / den, -two * c.im / den, (T::one() - r2) / den],
        }
    }

    /// Chordal distance on the unit sphere (at most 2).
    pub fn chordal(&self, other: &Self) -> T {
        chordal3(&self.to_sphere(), &other.to_sphere())
    }

    /// Conformal factor `2/(1+|u|^2)` of the chordal metric in this chart.
    pub fn chart_factor(&self) -> T {
        let two = T::lit(2.0);
        two / (T::one() + self.coord().norm_sqr())
    }

    /// Total order used for deterministic sorting.
    pub fn sort_key(&self) -> (Chart, T, T) {
        (self.chart, self.re, self.im)
    }
}

pub fn chordal3<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

impl<T: Real> fmt::Display for ComplexPoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinity() {
            return write!(f, "inf");
        }
        match self.to_finite() {
            Some(z) => write!(f, "{}{:+}i", z.re, z.im),
            None => write!(f, "inf"),
        }
    }
}
