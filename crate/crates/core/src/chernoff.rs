//! Chernoff tail bound for the KL divergence of multinomial arms and the
//! critical value `t_alpha`.
//!
//! For `d` cells and `n` draws, `G_{d,n}(λ) = Σ_m n!/(n^m (n-m)!) C(m+d-2, d-2) λ^m`
//! bounds the moment generating function of `n·KL(p̂‖p)`; the joint tail
//! over arms is `min_λ exp(-λt) Π_z G_{d,n_z}(λ)`.

use serde::Serialize;

use crate::error::{Error, Result};

const GRID_POINTS: usize = 512;
const GOLDEN_TOL: f64 = 1e-10;
const T_TOL: f64 = 1e-8;
const T_BRACKET_CAP: f64 = 1e6;

/// `log` of the coefficients `a_0..=a_n` of `G_{d,n}`.
fn log_coefficients(d: usize, n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut log_a = 0.0;
    out.push(log_a);
    let nf = n as f64;
    let df = d as f64;
    for m in 0..n {
        let mf = m as f64;
        log_a += ((nf - mf) / nf).ln() + ((mf + df - 1.0) / (mf + 1.0)).ln();
        out.push(log_a);
    }
    out
}

fn log_poly(log_coeffs: &[f64], lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let ll = lambda.ln();
    let terms = log_coeffs.iter().enumerate().map(|(m, &a)| a + m as f64 * ll);
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    max + terms.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn check_args(d: usize, n: u64, lambda: f64) -> Result<()> {
    if d < 2 || n < 1 {
        return Err(Error::DomainError(format!(
            "need d >= 2 and n >= 1, got d={d}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::DomainError(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(())
}

/// `log G_{d,n}(λ)`.
pub fn log_g_polynomial(d: usize, n: u64, lambda: f64) -> Result<f64> {
    check_args(d, n, lambda)?;
    Ok(log_poly(&log_coefficients(d, n), lambda))
}

/// `G_{d,n}(λ)`.
pub fn g_polynomial(d: usize, n: u64, lambda: f64) -> Result<f64> {
    log_g_polynomial(d, n, lambda).map(f64::exp)
}

#[derive(Debug, Clone)]
pub struct ChernoffSpec {
    d: usize,
    arm_sizes: Vec<u64>,
    alpha: f64,
    /// Coefficient tables, one per distinct arm size, with multiplicity.
    tables: Vec<(Vec<f64>, usize)>,
}

impl ChernoffSpec {
    pub fn new(d: usize, arm_sizes: Vec<u64>, alpha: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::DomainError(format!("cell count d={d} must be at least 2")));
        }
        if arm_sizes.is_empty() || arm_sizes.contains(&0) {
            return Err(Error::DomainError(
                "every arm needs at least one observation".into(),
            ));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::DomainError(format!("alpha {alpha} outside (0, 1]")));
        }
        let mut sorted = arm_sizes.clone();
        sorted.sort_unstable();
        let mut tables: Vec<(Vec<f64>, usize)> = Vec::new();
        let mut last = None;
        for n in sorted {
            if last == Some(n) {
                tables.last_mut().expect("previous table").1 += 1;
            } else {
                tables.push((log_coefficients(d, n), 1));
                last = Some(n);
            }
        }
        Ok(Self {
            d,
            arm_sizes,
            alpha,
            tables,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn arm_sizes(&self) -> &[u64] {
        &self.arm_sizes
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.d, self.arm_sizes.clone(), alpha)
    }

    /// `Σ_z log G_{d,n_z}(λ)`.
    pub fn log_product(&self, lambda: f64) -> f64 {
        self.tables
            .iter()
            .map(|(t, mult)| *mult as f64 * log_poly(t, lambda))
            .sum()
    }

    fn log_objective(&self, t: f64, lambda: f64) -> f64 {
        self.log_product(lambda) - lambda * t
    }

    /// Minimizing `λ` and the log of the minimum.
    fn minimize(&self, t: f64) -> (f64, f64) {
        let step = 1.0 / (GRID_POINTS - 1) as f64;
        let mut best = (0.0, 0.0);
        for i in 1..GRID_POINTS {
            let lambda = i as f64 * step;
            let v = self.log_objective(t, lambda);
            if v < best.1 {
                best = (lambda, v);
            }
        }
        if best.0 == 0.0 {
            // the objective may still dip just right of zero
            let v = self.golden(t, 0.0, step);
            return if v.1 < 0.0 { v } else { (0.0, 0.0) };
        }
        let lo = (best.0 - step).max(0.0);
        let hi = (best.0 + step).min(1.0);
        let refined = self.golden(t, lo, hi);
        if refined.1 < best.1 {
            refined
        } else {
            best
        }
    }

    fn golden(&self, t: f64, mut a: f64, mut b: f64) -> (f64, f64) {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.log_objective(t, c);
        let mut fd = self.log_objective(t, d);
        while b - a > GOLDEN_TOL {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.log_objective(t, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.log_objective(t, d);
            }
        }
        let lambda = 0.5 * (a + b);
        (lambda, self.log_objective(t, lambda))
    }

    /// `min_{λ∈[0,1]} exp(-λt) Π_z G_{d,n_z}(λ)`.
    pub fn tail_rhs(&self, t: f64) -> f64 {
        self.tail_rhs_at(t).0
    }

    /// The tail bound together with the minimizing `λ`.
    pub fn tail_rhs_at(&self, t: f64) -> (f64, f64) {
        let (lambda, log_v) = self.minimize(t.max(0.0));
        (log_v.exp().min(1.0), lambda)
    }

    /// Smallest `t` with `tail_rhs(t) <= alpha`.
    pub fn find_t_alpha(&self) -> Result<CriticalValue> {
        if self.alpha >= 1.0 {
            return Ok(CriticalValue {
                t_alpha: 0.0,
                achieved_rhs: 1.0,
                lambda_star: 0.0,
            });
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.tail_rhs(hi) > self.alpha {
            lo = hi;
            hi *= 2.0;
            if hi > T_BRACKET_CAP {
                return Err(Error::NoConvergence(format!(
                    "no t below {T_BRACKET_CAP} reaches alpha={}",
                    self.alpha
                )));
            }
        }
        while hi - lo > T_TOL {
            let mid = 0.5 * (lo + hi);
            if self.tail_rhs(mid) > self.alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (achieved_rhs, lambda_star) = self.tail_rhs_at(hi);
        Ok(CriticalValue {
            t_alpha: hi,
            achieved_rhs,
            lambda_star,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalValue {
    pub t_alpha: f64,
    pub achieved_rhs: f64,
    pub lambda_star: f64,
}

pub fn tail_rhs(spec: &ChernoffSpec, t: f64) -> f64 {
    spec.tail_rhs(t)
}

pub fn find_t_alpha(spec: &ChernoffSpec) -> Result<CriticalValue> {
    spec.find_t_alpha()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_polynomials() {
        for (d, n) in [(2, 1), (6, 92), (36, 10_000)] {
            assert_eq!(g_polynomial(d, n, 0.0).unwrap(), 1.0);
            assert!(log_g_polynomial(d, n, 1.0).unwrap().is_finite());
        }
        assert!((g_polynomial(2, 1, 0.5).unwrap() - 1.5).abs() < 1e-12);
        assert!((g_polynomial(2, 2, 1.0).unwrap() - 2.5).abs() < 1e-12);
        // d=3, n=2: 1 + 2λ + 1.5λ²
        assert!((g_polynomial(3, 2, 0.5).unwrap() - 2.375).abs() < 1e-12);
        assert!(g_polynomial(2, 1, 1.5).is_err());
        assert!(g_polynomial(1, 1, 0.5).is_err());
    }

    #[test]
    fn tail_is_one_at_zero_and_decreasing() {
        let spec = ChernoffSpec::new(6, vec![92, 108, 114], 0.05).unwrap();
        assert_eq!(spec.tail_rhs(0.0), 1.0);
        let mut prev = 1.0;
        for i in 1..60 {
            let v = spec.tail_rhs(i as f64);
            assert!(v <= prev);
            prev = v;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn critical_values() {
        let spec = ChernoffSpec::new(6, vec![92, 108, 114], 0.05).unwrap();
        let c = spec.find_t_alpha().unwrap();
        assert!(c.achieved_rhs <= 0.05 + 1e-9);
        assert!(spec.tail_rhs(c.t_alpha - 1e-6) > 0.05);
        let c10 = spec.with_alpha(0.10).unwrap().find_t_alpha().unwrap();
        assert!(c.t_alpha > c10.t_alpha);
        let one = spec.with_alpha(1.0).unwrap().find_t_alpha().unwrap();
        assert_eq!(one.t_alpha, 0.0);
        assert!(ChernoffSpec::new(6, vec![0], 0.05).is_err());
        assert!(ChernoffSpec::new(6, vec![5], 0.0).is_err());
    }
}
