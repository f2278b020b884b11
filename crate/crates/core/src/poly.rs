//! Dense complex polynomials and an Ehrlich-Aberth root finder.
//!
//! Coefficients are stored in ascending order (`a0 + a1 z + ...`). Roots of
//! modulus above one are handled through the reversed polynomial
//! `w^n p(1/w)` so that evaluation never leaves the unit disc.

use crate::scalar::Real;
use num_complex::Complex;
use thiserror::Error;

/// Iteration cap of the simultaneous iteration.
pub const MAX_ITERATIONS: usize = 500;

const POLISH_STEPS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("polynomial has degree {0}, need at least 1")]
    DegreeTooLow(usize),
    #[error("root finder did not converge (worst residual {worst_residual:e})")]
    NoConvergence { worst_residual: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Poly<T> {
    /// Builds a polynomial, trimming zero high-order coefficients. The zero
    /// polynomial is stored as a single zero coefficient.
    pub fn new(mut coeffs: Vec<Complex<T>>) -> Self {
        while coeffs.len() > 1 && is_zero(coeffs[coeffs.len() - 1]) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex::new(T::zero(), T::zero()));
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[T]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex::new(c, T::zero())).collect())
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && is_zero(self.coeffs[0])
    }

    pub fn leading(&self) -> Complex<T> {
        self.coeffs[self.coeffs.len() - 1]
    }

    /// Largest coefficient modulus.
    pub fn scale(&self) -> T {
        self.coeffs
            .iter()
            .map(|c| c.norm())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        horner(&self.coeffs, z)
    }

    /// Value and first derivative.
    pub fn eval_d(&self, z: Complex<T>) -> (Complex<T>, Complex<T>) {
        horner_d(&self.coeffs, z)
    }

    pub fn derivative(&self) -> Poly<T> {
        if self.coeffs.len() == 1 {
            return Poly::new(vec![]);
        }
        let d = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * T::from_usize(i).unwrap())
            .collect();
        Poly::new(d)
    }

    /// Coefficients of `w^n p(1/w)` for `n >= degree`, i.e. the polynomial in
    /// the chart at infinity, padded to length `n + 1`.
    pub fn reversed(&self, n: usize) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); n + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[n - i] = c;
        }
        out
    }

    pub fn mul(&self, other: &Poly<T>) -> Poly<T> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Poly::new(out)
    }

    /// `a * self - b * other`.
    pub fn combine(&self, a: Complex<T>, other: &Poly<T>, b: Complex<T>) -> Poly<T> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex::new(T::zero(), T::zero());
        let out = (0..n)
            .map(|i| {
                let x = self.coeffs.get(i).copied().unwrap_or(zero);
                let y = other.coeffs.get(i).copied().unwrap_or(zero);
                a * x - b * y
            })
            .collect();
        Poly::new(out)
    }

    /// `z * self`.
    pub fn shift(&self) -> Poly<T> {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(Complex::new(T::zero(), T::zero()));
        out.extend_from_slice(&self.coeffs);
        Poly::new(out)
    }
}

fn is_zero<T: Real>(c: Complex<T>) -> bool {
    c.re == T::zero() && c.im == T::zero()
}

pub(crate) fn horner<T: Real>(coeffs: &[Complex<T>], z: Complex<T>) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

pub(crate) fn horner_d<T: Real>(coeffs: &[Complex<T>], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    let mut p = zero;
    let mut dp = zero;
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Evaluation helper that stays inside the unit disc: for `|z| > 1` the
/// reversed coefficients are evaluated at `1/z`.
struct Evaluator<'a, T> {
    fwd: &'a [Complex<T>],
    rev: Vec<Complex<T>>,
    n: usize,
}

impl<'a, T: Real> Evaluator<'a, T> {
    fn new(fwd: &'a [Complex<T>]) -> Self {
        let n = fwd.len() - 1;
        let rev = fwd.iter().rev().copied().collect();
        Evaluator { fwd, rev, n }
    }

    /// Newton correction `p(z)/p'(z)`.
    fn ratio(&self, z: Complex<T>) -> Complex<T> {
        if z.norm_sqr() <= T::one() {
            let (p, dp) = horner_d(self.fwd, z);
            p / dp
        } else {
            let w = z.inv();
            let (q, dq) = horner_d(&self.rev, w);
            let n = T::from_usize(self.n).unwrap();
            z * q / (q * n - w * dq)
        }
    }

    /// Residual in the chart where the root has modulus at most one.
    fn residual(&self, z: Complex<T>) -> T {
        if z.norm_sqr() <= T::one() {
            horner(self.fwd, z).norm()
        } else {
            horner(&self.rev, z.inv()).norm()
        }
    }
}

/// All roots of the polynomial with ascending coefficients `coeffs`, merged
/// by multiplicity and sorted by `(re, im)`.
pub fn poly_roots<T: Real>(coeffs: &[Complex<T>]) -> Result<Vec<(Complex<T>, usize)>, RootError> {
    let p = Poly::new(coeffs.to_vec());
    if p.degree() == 0 {
        return Err(RootError::DegreeTooLow(0));
    }
    let scale = p.scale();
    let c = p.coeffs();
    let zero_mult = c.iter().take_while(|&&a| is_zero(a)).count();
    let core = &c[zero_mult..];
    let mut roots: Vec<Complex<T>> = match core.len() - 1 {
        0 => Vec::new(),
        1 => vec![-core[0] / core[1]],
        _ => aberth(core),
    };
    let eval = Evaluator::new(core);
    for r in roots.iter_mut() {
        *r = polish(&eval, *r);
    }
    let mut merged = merge_roots(&eval, roots, scale);
    if zero_mult > 0 {
        merged.push((Complex::new(T::zero(), T::zero()), zero_mult));
    }

    let full = Evaluator::new(c);
    let tol = T::ROOT_RESIDUAL * scale;
    let mut worst = T::zero();
    for &(r, _) in &merged {
        let res = full.residual(r);
        if !worst.is_nan() && (res.is_nan() || res > worst) {
            worst = res;
        }
    }
    if worst.is_nan() || worst > tol {
        return Err(RootError::NoConvergence {
            worst_residual: (worst / scale).to_f64().unwrap_or(f64::NAN),
        });
    }
    merged.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap()
            .then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });
    Ok(merged)
}

fn aberth<T: Real>(coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = coeffs.len() - 1;
    let eval = Evaluator::new(coeffs);
    let a0 = coeffs[0].norm();
    let an = coeffs[n].norm();
    let radius = (a0 / an).powf(T::one() / T::from_usize(n).unwrap());
    let offset = T::lit(0.4);
    let mut z: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let t = T::TAU() * T::from_usize(k).unwrap() / T::from_usize(n).unwrap() + offset;
            Complex::from_polar(radius, t)
        })
        .collect();
    let mut done = vec![false; n];
    let stop = T::epsilon() * T::lit(4.0);
    for _ in 0..MAX_ITERATIONS {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let ratio = eval.ratio(z[i]);
            if !ratio.re.is_finite() || !ratio.im.is_finite() {
                // exact hit on a root (p = 0) or a critical point (p' = 0)
                if eval.residual(z[i]) == T::zero() {
                    done[i] = true;
                    continue;
                }
                z[i] = z[i] + Complex::new(stop.sqrt(), stop.sqrt());
                all = false;
                continue;
            }
            let mut sum = Complex::new(T::zero(), T::zero());
            for j in 0..n {
                if j != i {
                    sum = sum + (z[i] - z[j]).inv();
                }
            }
            let step = ratio / (Complex::new(T::one(), T::zero()) - ratio * sum);
            if !step.re.is_finite() || !step.im.is_finite() {
                all = false;
                continue;
            }
            z[i] = z[i] - step;
            if step.norm() <= stop * T::one().max(z[i].norm()) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    z
}

fn polish<T: Real>(eval: &Evaluator<'_, T>, mut z: Complex<T>) -> Complex<T> {
    let mut best = eval.residual(z);
    for _ in 0..POLISH_STEPS {
        if best == T::zero() {
            break;
        }
        let ratio = eval.ratio(z);
        if !ratio.re.is_finite() || !ratio.im.is_finite() {
            break;
        }
        let cand = z - ratio;
        let res = eval.residual(cand);
        if res < best {
            best = res;
            z = cand;
        } else {
            break;
        }
    }
    z
}

fn root_gap<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    let m = a.norm().min(b.norm()).max(T::one());
    (a - b).norm() / m
}

/// Groups roots closer than the merge tolerance, then collapses wider clusters
/// whose centroid is itself a root (numerically split multiple roots).
fn merge_roots<T: Real>(
    eval: &Evaluator<'_, T>,
    roots: Vec<Complex<T>>,
    scale: T,
) -> Vec<(Complex<T>, usize)> {
    let mut groups: Vec<(Complex<T>, usize)> = Vec::new();
    for r in roots {
        match groups.iter_mut().find(|g| root_gap(g.0, r) <= T::ROOT_MERGE) {
            Some(g) => {
                let m = T::from_usize(g.1).unwrap();
                g.0 = (g.0 * m + r) / (m + T::one());
                g.1 += 1;
            }
            None => groups.push((r, 1)),
        }
    }
    let tol = T::ROOT_RESIDUAL * scale;
    loop {
        let mut merged_any = false;
        'outer: for i in 0..groups.len() {
            for j in (i + 1)..groups.len() {
                if root_gap(groups[i].0, groups[j].0) <= T::ROOT_CLUSTER {
                    let (mi, mj) = (T::from_usize(groups[i].1).unwrap(), T::from_usize(groups[j].1).unwrap());
                    let centroid = (groups[i].0 * mi + groups[j].0 * mj) / (mi + mj);
                    if eval.residual(centroid) <= tol {
                        groups[i] = (centroid, groups[i].1 + groups[j].1);
                        groups.remove(j);
                        merged_any = true;
                        break 'outer;
                    }
                }
            }
        }
        if !merged_any {
            break;
        }
    }
    for g in groups.iter_mut().filter(|g| g.1 > 1) {
        g.0 = refine_multiple(eval.fwd, g.0, g.1);
    }
    groups
}

/// Newton on the `(m-1)`-th derivative, where an `m`-fold root is simple.
fn refine_multiple<T: Real>(coeffs: &[Complex<T>], z0: Complex<T>, m: usize) -> Complex<T> {
    let mut d = Poly::new(coeffs.to_vec());
    for _ in 1..m {
        d = d.derivative();
    }
    if d.degree() == 0 {
        return z0;
    }
    let mut z = z0;
    let mut best = d.eval(z).norm();
    for _ in 0..POLISH_STEPS {
        let (v, dv) = d.eval_d(z);
        let cand = z - v / dv;
        if !cand.re.is_finite() || !cand.im.is_finite() {
            break;
        }
        let res = d.eval(cand).norm();
        if res < best {
            best = res;
            z = cand;
        } else {
            break;
        }
    }
    z
}
