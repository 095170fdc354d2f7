//! SISO linear time-invariant plants.
//!
//! Transfer functions are stored with a monic denominator. Realizations use
//! the controllable canonical layout
//!
//! ```text
//! A = [-a1 -a2 ... -an]    b = [1 0 ... 0]^T
//!     [ 1   0  ...  0 ]
//!     [      ...      ]
//!     [ 0  ...  1   0 ]
//! ```
//!
//! with `den = s^n + a1 s^(n-1) + ... + an`.

use nalgebra::{Complex, DMatrix, DVector, RowDVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly;

#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TransferFunction {
    /// Builds `num(s)/den(s)` from descending coefficient lists. Leading
    /// zeros are dropped and both polynomials are scaled so `den` is monic.
    pub fn new(num: &[f64], den: &[f64]) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient list".into()));
        }
        if num.iter().chain(den).any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let den = poly::trim(den);
        if poly::is_zero(&den) {
            return Err(Error::ZeroPolynomial);
        }
        let num = poly::trim(num);
        if !poly::is_zero(&num) && num.len() > den.len() {
            return Err(Error::Improper {
                num_degree: num.len() - 1,
                den_degree: den.len() - 1,
            });
        }
        let lead = den[0];
        Ok(Self {
            num: num.iter().map(|c| c / lead).collect(),
            den: den.iter().map(|c| c / lead).collect(),
        })
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    /// Degree of the denominator.
    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    /// `deg(den) - deg(num)`; `None` for the zero transfer function.
    pub fn relative_degree(&self) -> Option<usize> {
        if poly::is_zero(&self.num) {
            None
        } else {
            Some(self.den.len() - self.num.len())
        }
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r >= 1)
    }

    pub fn eval(&self, s: Complex<f64>) -> Complex<f64> {
        let horner = |p: &[f64]| {
            p.iter()
                .fold(Complex::new(0.0, 0.0), |acc, &c| acc * s + c)
        };
        horner(&self.num) / horner(&self.den)
    }

    pub fn frequency_response(&self, omega: f64) -> Complex<f64> {
        self.eval(Complex::new(0.0, omega))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>, d: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || c.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, b has {} rows, c has {} columns",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn output(&self, x: &DVector<f64>, u: f64) -> f64 {
        self.c.dot(&x.transpose()) + self.d * u
    }

    pub fn derivative(&self, x: &DVector<f64>, u: f64) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    /// `c (sI - A)^-1 b + d` evaluated at `s = j omega`.
    pub fn frequency_response(&self, omega: f64) -> Result<Complex<f64>> {
        let n = self.order();
        let s = Complex::new(0.0, omega);
        let m = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
            let diag = if i == j { s } else { Complex::new(0.0, 0.0) };
            diag - Complex::new(self.a[(i, j)], 0.0)
        });
        let rhs = self.b.map(|v| Complex::new(v, 0.0));
        let x = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("sI - A at omega = {omega}")))?;
        let y = self
            .c
            .iter()
            .zip(x.iter())
            .fold(Complex::new(0.0, 0.0), |acc, (&c, &xi)| acc + xi * c);
        Ok(y + self.d)
    }

    fn check_state(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} entries, system order is {}",
                x.len(),
                self.order()
            )));
        }
        Ok(())
    }
}

/// Controllable canonical realization.
pub fn tf_to_statespace(tf: &TransferFunction) -> StateSpace {
    let n = tf.order();
    let den = tf.den();
    let mut num = vec![0.0; n + 1 - tf.num().len()];
    num.extend_from_slice(tf.num());
    let d = num[0];

    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        a[(0, j)] = -den[j + 1];
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    if n > 0 {
        b[0] = 1.0;
    }
    let c = RowDVector::from_fn(n, |_, j| num[j + 1] - d * den[j + 1]);
    StateSpace { a, b, c, d }
}

/// Routh–Hurwitz test: true iff every root of `den` has a strictly negative
/// real part.
pub fn is_hurwitz(den: &[f64]) -> Result<bool> {
    if den.is_empty() || poly::is_zero(den) {
        return Err(Error::ZeroPolynomial);
    }
    let p = poly::trim(den);
    let sign = p[0].signum();
    let p: Vec<f64> = p.iter().map(|c| c * sign).collect();
    let n = p.len() - 1;
    if n == 0 {
        return Ok(true);
    }
    if p.iter().any(|&c| c <= 0.0) {
        return Ok(false);
    }

    let mut upper: Vec<f64> = p.iter().step_by(2).copied().collect();
    let mut lower: Vec<f64> = p.iter().skip(1).step_by(2).copied().collect();
    for _ in 1..n {
        if lower[0] <= 0.0 {
            return Ok(false);
        }
        let width = upper.len().max(lower.len());
        let at = |row: &[f64], j: usize| row.get(j).copied().unwrap_or(0.0);
        let next: Vec<f64> = (0..width.saturating_sub(1))
            .map(|j| (lower[0] * at(&upper, j + 1) - upper[0] * at(&lower, j + 1)) / lower[0])
            .collect();
        upper = lower;
        lower = if next.is_empty() { vec![0.0] } else { next };
    }
    Ok(lower[0] > 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SprVerdict {
    StrictlyPositiveReal,
    PositiveRealOnly,
    NotPositiveReal,
}

impl std::fmt::Display for SprVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SprVerdict::StrictlyPositiveReal => "StrictlyPositiveReal",
            SprVerdict::PositiveRealOnly => "PositiveRealOnly",
            SprVerdict::NotPositiveReal => "NotPositiveReal",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprCertificate {
    pub hurwitz: bool,
    /// `p(x)` in descending powers of `x = omega^2`, where
    /// `Re G(j omega) = p(omega^2) / |den(j omega)|^2`.
    pub realpart_poly: Vec<f64>,
    /// Infimum of `p` over `x >= 0` (`-inf` when `p` is unbounded below).
    pub min_nonneg_value: f64,
    pub relative_degree: Option<usize>,
    pub verdict: SprVerdict,
    pub reason: Option<String>,
}

/// Real-part numerator of `G(j omega)` as a polynomial in `omega^2`.
pub fn realpart_poly(tf: &TransferFunction) -> Vec<f64> {
    // Re G(jw) |D(jw)|^2 = Re N(jw) D(-jw) = even part of N(s) D(-s) at s = jw.
    let prod = poly::mul(tf.num(), &poly::reflect(tf.den()));
    let deg = prod.len() - 1;
    let mut ascending: Vec<f64> = (0..=deg / 2)
        .map(|m| {
            let c = poly::coeff(&prod, 2 * m);
            if m % 2 == 1 {
                -c
            } else {
                c
            }
        })
        .collect();
    ascending.reverse();
    poly::trim(&ascending)
}

/// Roots of `p` on `[0, inf)`: closed form up to degree 2, Sturm isolation
/// above that.
fn nonneg_roots(p: &[f64]) -> Vec<f64> {
    let p = poly::trim(p);
    match p.len() - 1 {
        0 => Vec::new(),
        1 => {
            let r = -p[1] / p[0];
            if r >= 0.0 {
                vec![r]
            } else {
                Vec::new()
            }
        }
        2 => {
            let (a, b, c) = (p[0], p[1], p[2]);
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return Vec::new();
            }
            // Cancellation-free quadratic roots.
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let mut roots = Vec::new();
            if q != 0.0 {
                roots.push(q / a);
                roots.push(c / q);
            } else {
                roots.push(0.0);
            }
            roots.retain(|&r| r >= 0.0);
            roots.sort_by(|x, y| x.total_cmp(y));
            roots.dedup();
            roots
        }
        _ => poly::real_roots_in(&p, 0.0, poly::cauchy_bound(&p), 1e-14),
    }
}

fn min_over_nonneg(p: &[f64]) -> f64 {
    let p = poly::trim(p);
    if p.len() > 1 && p[0] < 0.0 {
        return f64::NEG_INFINITY;
    }
    nonneg_roots(&poly::derivative(&p))
        .into_iter()
        .chain(std::iter::once(0.0))
        .map(|x| poly::eval(&p, x))
        .fold(f64::INFINITY, f64::min)
}

/// Frequency-domain strict positive realness test.
pub fn spr_test(tf: &TransferFunction) -> SprCertificate {
    let hurwitz = is_hurwitz(tf.den()).expect("denominator is nonzero by construction");
    let p = realpart_poly(tf);
    let min_nonneg_value = min_over_nonneg(&p);
    let relative_degree = tf.relative_degree();
    let n = tf.order();

    let strictly_positive = poly::eval(&p, 0.0) > 0.0 && p[0] > 0.0 && nonneg_roots(&p).is_empty();
    let limit_ok = match relative_degree {
        Some(0) => true,
        Some(1) => p.len() == n && p[0] > 0.0,
        _ => false,
    };

    let (verdict, reason) = if relative_degree.is_none() {
        (SprVerdict::NotPositiveReal, Some("zero transfer function".to_string()))
    } else if relative_degree.is_some_and(|r| r >= 2) {
        (
            SprVerdict::NotPositiveReal,
            Some(format!(
                "relative degree {} exceeds 1",
                relative_degree.unwrap_or_default()
            )),
        )
    } else if !hurwitz {
        (SprVerdict::NotPositiveReal, Some("denominator is not Hurwitz".to_string()))
    } else if strictly_positive && limit_ok && min_nonneg_value > 0.0 {
        (SprVerdict::StrictlyPositiveReal, None)
    } else if min_nonneg_value >= 0.0 {
        let why = if !limit_ok {
            "omega^2 Re G(j omega) vanishes at high frequency"
        } else {
            "Re G(j omega) touches zero"
        };
        (SprVerdict::PositiveRealOnly, Some(why.to_string()))
    } else {
        (
            SprVerdict::NotPositiveReal,
            Some("Re G(j omega) is negative somewhere".to_string()),
        )
    };

    SprCertificate {
        hurwitz,
        realpart_poly: p,
        min_nonneg_value,
        relative_degree,
        verdict,
        reason,
    }
}

/// Candidate certificate for the positive-real matrix conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct KypSolution {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub l: RowDVector<f64>,
    pub w: f64,
}

pub const KYP_DEFAULT_TOL: f64 = 1e-8;

fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn positive_definite(m: &DMatrix<f64>) -> bool {
    m.nrows() == 0 || m.clone().cholesky().is_some()
}

/// Checks `A'P + PA = -Q - l'l`, `Pb = c' - l'w`, `2d = w^2` within `tol`
/// (Frobenius norm of each residual) and positive definiteness of `P`, `Q`.
/// `P` and `Q` are symmetrized before use.
pub fn kyp_verify(ss: &StateSpace, sol: &KypSolution, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = ss.order();
    let dims_ok = sol.p.shape() == (n, n) && sol.q.shape() == (n, n) && sol.l.len() == n;
    if !dims_ok {
        return Err(Error::DimensionMismatch(format!(
            "system order {n}, P {:?}, Q {:?}, l has {} columns",
            sol.p.shape(),
            sol.q.shape(),
            sol.l.len()
        )));
    }
    let p = symmetric_part(&sol.p);
    let q = symmetric_part(&sol.q);
    let lt_l = sol.l.transpose() * &sol.l;

    let lyap = ss.a.transpose() * &p + &p * &ss.a + &q + lt_l;
    let coupling = &p * &ss.b - ss.c.transpose() + sol.l.transpose() * sol.w;
    let feedthrough = 2.0 * ss.d - sol.w * sol.w;

    Ok(lyap.norm() <= tol
        && coupling.norm() <= tol
        && feedthrough.abs() <= tol
        && positive_definite(&p)
        && positive_definite(&q))
}

/// One classical RK4 step of `x' = Ax + bu` with `u` held over the step.
pub fn rk4_step(ss: &StateSpace, x: &DVector<f64>, u: f64, dt: f64) -> Result<DVector<f64>> {
    ss.check_state(x)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    Ok(rk4_unchecked(ss, x, u, dt))
}

pub(crate) fn rk4_unchecked(ss: &StateSpace, x: &DVector<f64>, u: f64, dt: f64) -> DVector<f64> {
    let k1 = ss.derivative(x, u);
    let k2 = ss.derivative(&(x + &k1 * (0.5 * dt)), u);
    let k3 = ss.derivative(&(x + &k2 * (0.5 * dt)), u);
    let k4 = ss.derivative(&(x + &k3 * dt), u);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// The second-order plant used throughout the experiments:
/// `(75 s + 4900) / (s^2 + 98 s + 4900)`.
pub fn second_order_plant() -> TransferFunction {
    TransferFunction::new(&[75.0, 4900.0], &[1.0, 98.0, 4900.0]).expect("valid plant")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector, RowDVector};

    #[test]
    fn normalizes_to_monic() {
        let tf = TransferFunction::new(&[0.0, 2.0, 6.0], &[2.0, 6.0]).unwrap();
        assert_eq!(tf.num(), &[1.0, 3.0]);
        assert_eq!(tf.den(), &[1.0, 3.0]);
        assert_eq!(tf.relative_degree(), Some(0));
    }

    #[test]
    fn rejects_improper_and_zero() {
        assert!(matches!(
            TransferFunction::new(&[1.0, 0.0, 0.0], &[1.0, 1.0]),
            Err(Error::Improper { num_degree: 2, den_degree: 1 })
        ));
        assert_eq!(TransferFunction::new(&[1.0], &[0.0, 0.0]), Err(Error::ZeroPolynomial));
        assert_eq!(is_hurwitz(&[0.0]), Err(Error::ZeroPolynomial));
    }

    #[test]
    fn canonical_form_of_plant() {
        let ss = tf_to_statespace(&second_order_plant());
        assert_eq!(ss.a, dmatrix![-98.0, -4900.0; 1.0, 0.0]);
        assert_eq!(ss.b, dvector![1.0, 0.0]);
        assert_eq!(ss.c, RowDVector::from_row_slice(&[75.0, 4900.0]));
        assert_eq!(ss.d, 0.0);
    }

    #[test]
    fn canonical_form_of_integrator() {
        let ss = tf_to_statespace(&TransferFunction::new(&[1.0], &[1.0, 0.0]).unwrap());
        assert_eq!(ss.a, dmatrix![0.0]);
        assert_eq!(ss.b, dvector![1.0]);
        assert_eq!(ss.c, RowDVector::from_row_slice(&[1.0]));
        assert_eq!(ss.d, 0.0);
    }

    #[test]
    fn biproper_realization_keeps_feedthrough() {
        let tf = TransferFunction::new(&[2.0, 6.0], &[1.0, 3.0]).unwrap();
        let ss = tf_to_statespace(&tf);
        assert_eq!(ss.d, 2.0);
        assert_eq!(ss.c[0], 0.0);
    }

    #[test]
    fn hurwitz_examples() {
        assert!(is_hurwitz(&[1.0, 98.0, 4900.0]).unwrap());
        assert!(!is_hurwitz(&[1.0, -1.0]).unwrap());
        assert!(is_hurwitz(&[3.0]).unwrap());
        // s^3 + s^2 + s + 1 has roots on the imaginary axis.
        assert!(!is_hurwitz(&[1.0, 1.0, 1.0, 1.0]).unwrap());
        // (s+1)(s+2)(s+3)
        assert!(is_hurwitz(&[1.0, 6.0, 11.0, 6.0]).unwrap());
        // negative leading coefficient, same roots
        assert!(is_hurwitz(&[-1.0, -6.0, -11.0, -6.0]).unwrap());
    }

    #[test]
    fn plant_is_spr() {
        let cert = spr_test(&second_order_plant());
        assert!(cert.hurwitz);
        assert_eq!(cert.realpart_poly, vec![2450.0, 24_010_000.0]);
        assert_eq!(cert.min_nonneg_value, 24_010_000.0);
        assert_eq!(cert.relative_degree, Some(1));
        assert_eq!(cert.verdict, SprVerdict::StrictlyPositiveReal);
    }

    #[test]
    fn first_order_lag_is_spr() {
        let cert = spr_test(&TransferFunction::new(&[1.0], &[1.0, 1.0]).unwrap());
        assert_eq!(cert.realpart_poly, vec![1.0]);
        assert_eq!(cert.verdict, SprVerdict::StrictlyPositiveReal);
    }

    #[test]
    fn non_minimum_phase_is_not_pr() {
        let tf = TransferFunction::new(&[1.0, -1.0], &[1.0, 1.0]).unwrap();
        let cert = spr_test(&tf);
        assert_relative_eq!(tf.frequency_response(0.0).re, -1.0);
        assert_eq!(cert.verdict, SprVerdict::NotPositiveReal);
        assert!(cert.min_nonneg_value < 0.0);
    }

    #[test]
    fn relative_degree_two_rejected() {
        let cert = spr_test(&TransferFunction::new(&[1.0], &[1.0, 2.0, 1.0]).unwrap());
        assert_eq!(cert.verdict, SprVerdict::NotPositiveReal);
        assert!(cert.reason.unwrap().contains("relative degree"));
    }

    #[test]
    fn unstable_denominator_rejected() {
        let cert = spr_test(&TransferFunction::new(&[1.0], &[1.0, -1.0]).unwrap());
        assert!(!cert.hurwitz);
        assert_eq!(cert.verdict, SprVerdict::NotPositiveReal);
    }

    #[test]
    fn vanishing_high_frequency_limit_is_pr_only() {
        // (s + 3)/(s^2 + 3s + 2): p(x) = 6 + (3 - 3) x, so omega^2 Re G -> 0.
        let tf = TransferFunction::new(&[1.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        let cert = spr_test(&tf);
        assert_eq!(cert.realpart_poly, vec![6.0]);
        assert_eq!(cert.verdict, SprVerdict::PositiveRealOnly);
    }

    fn first_order() -> StateSpace {
        StateSpace::new(dmatrix![-1.0], dvector![1.0], RowDVector::from_row_slice(&[1.0]), 0.0)
            .unwrap()
    }

    fn scalar_solution(q: f64) -> KypSolution {
        KypSolution {
            p: dmatrix![1.0],
            q: dmatrix![q],
            l: RowDVector::from_row_slice(&[0.0]),
            w: 0.0,
        }
    }

    #[test]
    fn kyp_scalar_examples() {
        let ss = first_order();
        assert!(kyp_verify(&ss, &scalar_solution(2.0), KYP_DEFAULT_TOL).unwrap());
        assert!(!kyp_verify(&ss, &scalar_solution(5.0), KYP_DEFAULT_TOL).unwrap());
    }

    #[test]
    fn kyp_plant_certificate() {
        // P b = c' fixes the first column of P; P22 = 847700 makes Q diagonal.
        let ss = tf_to_statespace(&second_order_plant());
        let sol = KypSolution {
            p: dmatrix![75.0, 4900.0; 4900.0, 847_700.0],
            q: dmatrix![4900.0, 0.0; 0.0, 48_020_000.0],
            l: RowDVector::from_row_slice(&[0.0, 0.0]),
            w: 0.0,
        };
        assert!(kyp_verify(&ss, &sol, KYP_DEFAULT_TOL).unwrap());
        let mut bad = sol.clone();
        bad.p[(1, 1)] = 100_000.0; // P no longer positive definite
        assert!(!kyp_verify(&ss, &bad, KYP_DEFAULT_TOL).unwrap());
    }

    #[test]
    fn kyp_rejects_bad_input() {
        let ss = first_order();
        assert!(matches!(
            kyp_verify(&ss, &scalar_solution(2.0), 0.0),
            Err(Error::InvalidArgument(_))
        ));
        let wrong = KypSolution {
            p: DMatrix::identity(2, 2),
            q: DMatrix::identity(2, 2),
            l: RowDVector::zeros(2),
            w: 0.0,
        };
        assert!(matches!(kyp_verify(&ss, &wrong, 1e-8), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn rk4_examples() {
        let zero = StateSpace::new(
            DMatrix::zeros(2, 2),
            dvector![1.0, 0.0],
            RowDVector::from_row_slice(&[1.0, 0.0]),
            0.0,
        )
        .unwrap();
        let x = dvector![0.3, -2.0];
        assert_eq!(rk4_step(&zero, &x, 0.0, 0.1).unwrap(), x);

        let decay = first_order();
        let next = rk4_step(&decay, &dvector![1.0], 0.0, 0.1).unwrap();
        assert!((next[0] - 0.904_837_5).abs() < 1e-7);
        assert!((next[0] - (-0.1_f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn rk4_rejects_bad_state() {
        let ss = first_order();
        assert!(rk4_step(&ss, &dvector![1.0, 2.0], 0.0, 0.1).is_err());
        assert!(rk4_step(&ss, &dvector![1.0], 0.0, 0.0).is_err());
    }
}
