//! Special functions: normal and Student's-t quantiles, the regularized
//! incomplete beta function and its inverse.
//!
//! Everything here targets roughly 1e-12 absolute accuracy, which is what
//! the exact coverage computations need.

use crate::error::NumericError;

const CF_MAX_ITER: usize = 100_000;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Quantile of the standard normal distribution.
///
/// Acklam's rational approximation (relative error ~1e-9) followed by one
/// Halley step on `Φ(x) − p`, which brings the result to full double
/// precision away from the extreme tails.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement. Work with the smaller tail to avoid cancellation.
    let e = if x < 0.0 {
        0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - p
    } else {
        (1.0 - p) - 0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Two-sided normal critical value `z_δ`, the `(1 − δ/2)` quantile for
/// confidence level `gamma = 1 − δ`.
pub fn z_two_sided(gamma: f64) -> f64 {
    normal_quantile(1.0 - (1.0 - gamma) / 2.0)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn inc_beta(x: f64, a: f64, b: f64) -> Result<f64, NumericError> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(NumericError::Domain {
            what: "inc_beta",
            detail: format!("x={x}, a={a}, b={b}"),
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    // The continued fraction converges fast for x < (a+1)/(a+b+2);
    // otherwise use I_x(a,b) = 1 − I_{1−x}(b,a).
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * beta_cf(x, a, b)? / a)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a)? / b)
    }
}

/// Continued fraction for the incomplete beta function, modified Lentz.
fn beta_cf(x: f64, a: f64, b: f64) -> Result<f64, NumericError> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(NumericError::NoConvergence {
        what: "incomplete beta continued fraction",
        detail: format!("x={x}, a={a}, b={b}"),
    })
}

/// `p`-quantile of the Beta(`alpha`, `beta`) distribution: the `x` with
/// `I_x(alpha, beta) = p`.
///
/// Bracketed bisection on `[0, 1]` down to floating-point resolution,
/// then a Newton polish that is only accepted while it stays inside the
/// bracket.
pub fn beta_quantile(p: f64, alpha: f64, beta: f64) -> Result<f64, NumericError> {
    if !(0.0..=1.0).contains(&p) || !(alpha > 0.0 && beta > 0.0) {
        return Err(NumericError::Domain {
            what: "beta_quantile",
            detail: format!("p={p}, alpha={alpha}, beta={beta}"),
        });
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut iters = 0;
    while hi - lo > 1e-15 * hi.max(1e-300) && iters < 2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inc_beta(mid, alpha, beta)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    if iters >= 2000 {
        return Err(NumericError::NoConvergence {
            what: "beta_quantile bisection",
            detail: format!("p={p}, alpha={alpha}, beta={beta}"),
        });
    }
    let mut x = 0.5 * (lo + hi);
    let ln_b = ln_beta(alpha, beta);
    for _ in 0..3 {
        let f = inc_beta(x, alpha, beta)? - p;
        let ln_pdf = (alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_b;
        let pdf = ln_pdf.exp();
        if !(pdf.is_finite() && pdf > 0.0) {
            break;
        }
        let next = x - f / pdf;
        if !(next >= lo && next <= hi) || next == x {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Two-sided Student's-t critical value: the `(1 − δ/2)` quantile of the
/// t distribution with `dof` degrees of freedom.
///
/// Uses `P(|T| > t) = I_{ν/(ν+t²)}(ν/2, 1/2)`.
pub fn t_two_sided(gamma: f64, dof: f64) -> Result<f64, NumericError> {
    if !(dof > 0.0) || !(gamma > 0.0 && gamma < 1.0) {
        return Err(NumericError::Domain {
            what: "t_two_sided",
            detail: format!("gamma={gamma}, dof={dof}"),
        });
    }
    let delta = 1.0 - gamma;
    let x = beta_quantile(delta, dof / 2.0, 0.5)?;
    Ok((dof * (1.0 / x - 1.0)).sqrt())
}

/// Natural log of the binomial pmf `C(k, s) p^s (1−p)^(k−s)`.
pub fn ln_binomial_pmf(k: u64, s: u64, p: f64) -> f64 {
    debug_assert!(s <= k);
    let kf = k as f64;
    let sf = s as f64;
    let ln_choose = libm::lgamma(kf + 1.0) - libm::lgamma(sf + 1.0) - libm::lgamma(kf - sf + 1.0);
    let mut out = ln_choose;
    if s > 0 {
        out += sf * p.ln();
    }
    if s < k {
        out += (kf - sf) * (-p).ln_1p();
    }
    out
}

/// Binomial pmf computed via log-gamma.
pub fn binomial_pmf(k: u64, s: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return if s == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if s == k { 1.0 } else { 0.0 };
    }
    ln_binomial_pmf(k, s, p).exp()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_known_values() {
        assert!((normal_quantile(0.95) - 1.644_853_626_951_472_2).abs() < 1e-13);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-13);
        assert!((normal_quantile(0.5)).abs() < 1e-15);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-14, "p={p}");
        }
    }

    #[test]
    fn inc_beta_matches_statrs() {
        for &(x, a, b) in &[
            (0.3, 2.0, 5.0),
            (0.9, 0.5, 0.5),
            (0.5, 51.0, 50.0),
            (0.01, 1.0, 200.0),
            (0.6017, 51.0, 50.0),
            (0.999, 3000.0, 2.0),
        ] {
            let ours = inc_beta(x, a, b).unwrap();
            let theirs = statrs::function::beta::beta_reg(a, b, x);
            assert!((ours - theirs).abs() < 1e-12, "x={x} a={a} b={b}: {ours} vs {theirs}");
        }
    }

    #[test]
    fn inc_beta_rejects_bad_domain() {
        assert!(inc_beta(1.5, 1.0, 1.0).is_err());
        assert!(inc_beta(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn beta_quantile_uniform_and_closed_form() {
        assert!((beta_quantile(0.5, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        for &n in &[1.0f64, 5.0, 20.0, 1000.0] {
            for &p in &[0.025f64, 0.3, 0.975] {
                let want = 1.0 - (1.0 - p).powf(1.0 / n);
                let got = beta_quantile(p, 1.0, n).unwrap();
                assert!((got - want).abs() < 1e-13, "n={n} p={p}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn beta_quantile_inverts_inc_beta() {
        for &(p, a, b) in &[(0.975, 51.0, 50.0), (0.05, 3.0, 98.0), (0.5, 4851.0, 4851.0)] {
            let x = beta_quantile(p, a, b).unwrap();
            assert!((inc_beta(x, a, b).unwrap() - p).abs() < 1e-12);
        }
        assert!((beta_quantile(0.975, 51.0, 50.0).unwrap() - 0.6017).abs() < 5e-5);
    }

    #[test]
    fn t_quantile_values() {
        // t_{0.95, 3}
        assert!((t_two_sided(0.9, 3.0).unwrap() - 2.353_363_434_801_823).abs() < 1e-9);
        let t = t_two_sided(0.95, 10.0).unwrap();
        let oracle = statrs::distribution::ContinuousCDF::inverse_cdf(
            &statrs::distribution::StudentsT::new(0.0, 1.0, 10.0).unwrap(),
            0.975,
        );
        assert!((t - oracle).abs() < 1e-8);
        let big = t_two_sided(0.9, 999_999.0).unwrap();
        assert!((big - z_two_sided(0.9)).abs() < 1e-3);
    }

    #[test]
    fn pmf_matches_exact_rationals() {
        // p = 3/10 so that every term is an exact u128 rational.
        for k in 0u32..=30 {
            for s in 0..=k {
                let choose: u128 = (0..s).fold(1u128, |acc, i| acc * (k - i) as u128 / (i + 1) as u128);
                let num = choose * 3u128.pow(s) * 7u128.pow(k - s);
                let den = 10u128.pow(k);
                let exact = num as f64 / den as f64;
                let got = binomial_pmf(k as u64, s as u64, 0.3);
                assert!(
                    ((got - exact) / exact).abs() < 1e-12,
                    "k={k} s={s}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn kahan_sum_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-17);
        }
        assert!((s.value() - (1.0 + 1e-14)).abs() < 1e-16);
    }
}
