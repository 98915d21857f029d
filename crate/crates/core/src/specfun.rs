//! Special functions: the modified Bessel function `K_ν` of real order, the
//! Gaussian heat kernel of `Δ` and the shifted logarithm `Log r = log(e-1+r)`.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

/// Real order of a modified Bessel function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::domain("bessel_k", format!("order {nu} is not finite")));
        }
        Ok(BesselOrder(nu))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Taylor coefficients of `1/Γ(z) = Σ c_k z^k` (k = 1..=26).
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// Temme's auxiliary gamma quantities for `|mu| <= 1/2`:
/// `(g1, g2, 1/Γ(1+mu), 1/Γ(1-mu))` with
/// `g1 = (1/Γ(1-mu) - 1/Γ(1+mu)) / (2 mu)` and `g2 = (1/Γ(1-mu) + 1/Γ(1+mu)) / 2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    // 1/Γ(1+z) = Σ_k c_k z^(k-1); split into even and odd powers of mu.
    let mu2 = mu * mu;
    let mut even = 0.0; // Σ_{k odd} c_k mu^(k-1)
    let mut odd = 0.0; // Σ_{k even} c_k mu^(k-2)
    for (i, &c) in RECIP_GAMMA.iter().enumerate().rev() {
        let k = i + 1;
        if k % 2 == 1 {
            even = even * mu2 + c;
        } else {
            odd = odd * mu2 + c;
        }
    }
    let recip_plus = even + mu * odd;
    let recip_minus = even - mu * odd;
    (-odd, even, recip_plus, recip_minus)
}

/// `(e^x K_mu(x), e^x K_{mu+1}(x))` by Temme's series, `|mu| <= 1/2`, `0 < x <= 2`.
fn k_scaled_temme(mu: f64, x: f64) -> (f64, f64) {
    let half_x = 0.5 * x;
    let pi_mu = PI * mu;
    let fact = if pi_mu.abs() < f64::EPSILON {
        1.0
    } else {
        pi_mu / pi_mu.sin()
    };
    let d = -half_x.ln();
    let e = mu * d;
    let fact2 = if e.abs() < f64::EPSILON {
        1.0
    } else {
        e.sinh() / e
    };
    let (gam1, gam2, recip_plus, recip_minus) = temme_gammas(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / recip_plus;
    let mut q = 0.5 / (ee * recip_minus);
    let mut c = 1.0;
    let quarter_x2 = half_x * half_x;
    let mut sum1 = p;
    for i in 1..500 {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu * mu);
        c *= quarter_x2 / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    let scale = x.exp();
    (sum * scale, sum1 * 2.0 / x * scale)
}

/// `(e^x K_mu(x), e^x K_{mu+1}(x))` by Steed's continued fraction, `x > 2`.
fn k_scaled_steed(mu: f64, x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..100_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    let h = a1 * h;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    (k_mu, k_mu1)
}

/// `e^x K_nu(x)` for `x > 0`, any finite real order.
fn k_scaled(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (mut k, mut k1) = if x <= 2.0 {
        k_scaled_temme(mu, x)
    } else {
        k_scaled_steed(mu, x)
    };
    // Upward recurrence K_{m+1} = K_{m-1} + (2m/x) K_m is stable for K.
    for i in 1..=(n as usize) {
        let next = 2.0 * (mu + i as f64) / x * k1 + k;
        k = k1;
        k1 = next;
    }
    k
}

fn check_bessel_args(nu: BesselOrder, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("bessel_k", format!("argument x={x} must be positive")));
    }
    let _ = nu;
    Ok(())
}

/// Modified Bessel function of the second kind `K_ν(x)`.
///
/// Underflows to `0.0` for large arguments; use [`log_bessel_k`] when the
/// magnitude matters there.
pub fn bessel_k(nu: BesselOrder, x: f64) -> Result<f64> {
    check_bessel_args(nu, x)?;
    Ok(k_scaled(nu.value(), x) * (-x).exp())
}

/// `ln K_ν(x)`, finite for every `x > 0` where `K_ν` is representable on a log scale.
pub fn log_bessel_k(nu: BesselOrder, x: f64) -> Result<f64> {
    check_bessel_args(nu, x)?;
    Ok(k_scaled(nu.value(), x).ln() - x)
}

/// Exponentially scaled `e^x K_ν(x)`.
pub fn bessel_k_scaled(nu: BesselOrder, x: f64) -> Result<f64> {
    check_bessel_args(nu, x)?;
    Ok(k_scaled(nu.value(), x))
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("gaussian_q", format!("time t={t} must be positive")));
    }
    Ok(())
}

/// Squared Euclidean distance between two points of equal dimension.
pub fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `ln q(t,x,y)` in terms of the distance `|x-y|`.
pub fn log_gaussian_q_dist(d: usize, t: f64, dist: f64) -> Result<f64> {
    check_time(t)?;
    Ok(-(d as f64) / 2.0 * (4.0 * PI * t).ln() - dist * dist / (4.0 * t))
}

/// Gaussian kernel of `Δ`: `q(t,x,y) = (4πt)^{-d/2} exp(-|x-y|²/(4t))`.
pub fn gaussian_q(d: usize, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(log_gaussian_q(d, t, x, y)?.exp())
}

pub fn log_gaussian_q(d: usize, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != d || y.len() != d {
        return Err(Error::domain(
            "gaussian_q",
            format!("points of length {} and {} in dimension {d}", x.len(), y.len()),
        ));
    }
    log_gaussian_q_dist(d, t, dist2(x, y).sqrt())
}

/// `Log r = log(e - 1 + r)` for `r >= 0`.
pub fn log_shift(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain("log_shift", format!("r={r} must be nonnegative")));
    }
    Ok((E - 1.0 + r).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(nu: f64) -> BesselOrder {
        BesselOrder::new(nu).unwrap()
    }

    /// `∫_0^∞ e^{-x cosh s} cosh(ν s) ds` by the trapezoid rule, which converges
    /// geometrically for this analytic, rapidly decaying integrand.
    fn k_quadrature(nu: f64, x: f64) -> f64 {
        let h = 0.005f64;
        // integrate e^{-x (cosh s - 1)} cosh(ν s) and restore e^{-x} at the end
        let mut sum = 0.5;
        let mut s = h;
        loop {
            let base = -x * (s.cosh() - 1.0);
            let term = 0.5 * ((base + nu * s).exp() + (base - nu * s).exp());
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            s += h;
        }
        sum * h * (-x).exp()
    }

    #[test]
    fn half_integer_closed_form() {
        let expected = (PI / 2.0).sqrt() * (-1.0f64).exp();
        let k = bessel_k(order(0.5), 1.0).unwrap();
        assert!((k - expected).abs() / expected < 1e-12);
        assert!((k - 0.461_069).abs() < 1e-6);
        for &x in &[1e-6, 0.01, 0.5, 1.9, 2.1, 10.0, 300.0] {
            let closed = (PI / (2.0 * x)).sqrt() * (-x).exp();
            let k = bessel_k(order(0.5), x).unwrap();
            assert!((k - closed).abs() / closed < 1e-10, "x={x}: {k} vs {closed}");
        }
    }

    #[test]
    fn zero_order_against_quadrature() {
        let q = k_quadrature(0.0, 1.0);
        assert!((q - 0.421_024).abs() < 1e-6);
        let k = bessel_k(order(0.0), 1.0).unwrap();
        assert!((k - q).abs() / q < 1e-10, "{k} vs {q}");
    }

    #[test]
    fn real_orders_against_quadrature() {
        for &nu in &[-2.0, -1.3, -1.0, -0.5, -0.25, 0.0, 0.1, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0, 2.5] {
            for &x in &[1e-3, 0.1, 0.9, 2.0, 2.0001, 3.5, 20.0, 150.0, 600.0] {
                let q = k_quadrature(nu, x);
                let k = bessel_k(order(nu), x).unwrap();
                assert!((k - q).abs() / q < 1e-10, "nu={nu} x={x}: {k} vs {q}");
            }
        }
    }

    #[test]
    fn symmetry_in_order() {
        for &nu in &[0.25, 0.5, 1.0, 1.7, 2.0] {
            for &x in &[0.01, 1.0, 5.0] {
                let a = bessel_k(order(nu), x).unwrap();
                let b = bessel_k(order(-nu), x).unwrap();
                assert!((a - b).abs() <= 1e-12 * a);
            }
        }
    }

    #[test]
    fn log_scale_survives_underflow() {
        let x = 2.0e4;
        assert_eq!(bessel_k(order(0.5), x).unwrap(), 0.0);
        let lk = log_bessel_k(order(0.5), x).unwrap();
        let closed = 0.5 * (PI / (2.0 * x)).ln() - x;
        assert!((lk - closed).abs() < 1e-10 * closed.abs());
    }

    #[test]
    fn bessel_domain_errors() {
        assert!(bessel_k(order(1.0), 0.0).is_err());
        assert!(bessel_k(order(1.0), -1.0).is_err());
        assert!(BesselOrder::new(f64::NAN).is_err());
        assert!(BesselOrder::new(f64::INFINITY).is_err());
    }

    #[test]
    fn gaussian_values() {
        let q = gaussian_q(1, 1.0, &[0.3], &[0.3]).unwrap();
        assert!((q - (4.0 * PI).powf(-0.5)).abs() < 1e-15);
        assert!((q - 0.282_095).abs() < 1e-6);
        let q3 = gaussian_q(3, 1.0, &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!((q3 - 0.017_482).abs() < 1e-6);
        assert!(gaussian_q(2, 0.0, &[0.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(gaussian_q(2, 1.0, &[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn gaussian_semigroup_1d() {
        // ∫ q(s,x,z) q(t-s,z,y) dz on a fine grid
        let (s, t, x, y) = (0.3, 1.0, 0.2, -0.7);
        let h = 1e-3;
        let mut sum = 0.0;
        let mut z = -20.0;
        while z <= 20.0 {
            sum += gaussian_q(1, s, &[x], &[z]).unwrap() * gaussian_q(1, t - s, &[z], &[y]).unwrap();
            z += h;
        }
        let lhs = sum * h;
        let rhs = gaussian_q(1, t, &[x], &[y]).unwrap();
        assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn log_shift_values() {
        assert!((log_shift(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((log_shift(0.0).unwrap() - 0.541_325).abs() < 1e-6);
        assert!((log_shift(10.0).unwrap() - 2.461_150_171_734_475).abs() < 1e-12);
        assert!(log_shift(-1e-9).is_err());
    }

    proptest::proptest! {
        #[test]
        fn gaussian_symmetric_and_peaked(t in 0.01f64..10.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let qab = gaussian_q(1, t, &[a], &[b]).unwrap();
            let qba = gaussian_q(1, t, &[b], &[a]).unwrap();
            proptest::prop_assert!((qab - qba).abs() <= 1e-15 * qab.max(1e-300));
            proptest::prop_assert!(gaussian_q(1, t, &[a], &[a]).unwrap() >= qab);
        }

        #[test]
        fn log_shift_increasing(r in 0.0f64..1e6, dr in 1e-6f64..10.0) {
            proptest::prop_assert!(log_shift(r + dr).unwrap() > log_shift(r).unwrap());
        }
    }
}
