//! Error-function family.
//!
//! `erf`/`erfc` come from libm (full relative accuracy down to underflow).
//! The scaled `erfcx(z) = exp(z^2) erfc(z)` switches to a Lentz continued
//! fraction for z >= 5 so that it never forms exp(z^2) for large z.

use std::f64::consts::PI;

const SQRT_PI: f64 = 1.772_453_850_905_516;

const CF_SWITCH: f64 = 5.0;
const CF_MAX_TERMS: usize = 500;
const CF_EPS: f64 = 4.0 * f64::EPSILON;
const TINY: f64 = 1e-300;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function exp(z^2) erfc(z).
pub fn erfcx(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < CF_SWITCH {
        if z < -26.0 {
            return f64::INFINITY;
        }
        return (z * z).exp() * libm::erfc(z);
    }
    erfcx_cf(z)
}

// erfc(z) e^{z^2} sqrt(pi) = 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
fn erfcx_cf(z: f64) -> f64 {
    // modified Lentz on b0 + a1/(b1 + a2/(b2 + ...)), b = z, a_k = k/2
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..CF_MAX_TERMS {
        let a = k as f64 * 0.5;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    1.0 / (SQRT_PI * f)
}

/// `2 z^2 (1 - S)` and `S` where `S = sqrt(pi) z erfcx(z)`, by the
/// asymptotic series. Only valid for large z (terms shrink until k ~ z^2).
fn asymptotic_pair(z: f64) -> (f64, f64) {
    let inv = 1.0 / (2.0 * z * z);
    let mut s = 1.0;
    let mut num = 0.0;
    let mut term = 1.0; // (2k-1)!! / (2z^2)^k, k = 0
    let mut k = 0usize;
    loop {
        k += 1;
        let next = term * (2 * k - 1) as f64 * inv;
        // num carries the series divided by inv, so it sets the cutoff
        if next >= term || next / inv < 1e-18 {
            break;
        }
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        s += sign * next;
        // numerator term is (2k-1)!!/(2z^2)^(k-1), alternating from +1
        num -= sign * next / inv;
        term = next;
        if k > 200 {
            break;
        }
    }
    (num, s)
}

const XI_ASYMPTOTIC: f64 = 10.0;

/// Inhomogeneous/homogeneous interpolation coefficient
/// `xi = (2/sqrt(pi)) z e^{-z^2} / erfc(z) - 2 z^2`, `z = beta/alpha`.
pub fn xi_of_z(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z >= XI_ASYMPTOTIC {
        let (num, s) = asymptotic_pair(z);
        return num / s;
    }
    2.0 / PI.sqrt() * z / erfcx(z) - 2.0 * z * z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // 30-digit reference values
    #[allow(clippy::excessive_precision)]
    const ERFC_REF: &[(f64, f64, f64)] = &[
        (0.001, 0.998871621209030763620051522343, 0.998872620081151408627898302931),
        (0.1, 0.887537083981715107796724928256, 0.896456979969126641931883748644),
        (0.5, 0.479500122186953462317253346108, 0.615690344192925874870793422684),
        (1.0, 0.157299207050285130658779364917, 0.427583576155807004410750344491),
        (2.0, 0.00467773498104726583793074363275, 0.255395676310505743865088580909),
        (3.5, 7.43098372341412745523683756096e-7, 0.155293655608894297402726497582),
        (5.0, 1.53745979442803485018834348538e-12, 0.110704637733068626370212086492),
        (10.0, 2.08848758376254475700078629496e-45, 0.0561409927438225858575173872205),
        (27.0, 5.23704892378925568501606768285e-319, 0.0208816079904209406740944901929),
        (100.0, 0.0, 0.00564161378298943290355645700695),
    ];

    #[test]
    fn erfc_and_erfcx_reference() {
        for &(z, ec, ex) in ERFC_REF {
            if ec > 1e-300 {
                assert!(rel(erfc(z), ec) < 1e-13, "erfc({z})");
            }
            assert!(rel(erfcx(z), ex) < 1e-13, "erfcx({z}) = {}", erfcx(z));
        }
    }

    #[test]
    fn erfcx_continuous_at_switch() {
        let a = erfcx(CF_SWITCH - 1e-14);
        let b = erfcx(CF_SWITCH + 1e-14);
        assert!(rel(a, b) < 1e-13);
    }

    #[test]
    fn xi_reference() {
        let x = xi_of_z(8.27 / 4.54);
        assert!(rel(x, 0.814_296_198_567_577_5) < 1e-12, "{x}");
    }

    #[test]
    fn xi_limits() {
        let z = 1e-6;
        assert!(rel(xi_of_z(z), 2.0 * z / PI.sqrt()) < 1e-5);
        assert!((xi_of_z(1e4) - 1.0).abs() < 1e-7);
        for z in [3e4, 4e4, 1e5, 1e7] {
            assert!(xi_of_z(z) < 1.0, "{z}");
            assert!(((1.0 - xi_of_z(z)) * z * z - 1.0).abs() < 1e-3, "{z}");
        }
        // 1 - 1/z^2 + O(z^-4)
        let z = 50.0;
        assert!(((1.0 - xi_of_z(z)) - 1.0 / (z * z)).abs() < 1e-6);
    }

    #[test]
    fn xi_pinned_values() {
        let cases = [
            (0.01, 0.011_211_423_178_006_206),
            (0.5, 0.416_352_820_649_349_2),
            (3.0, 0.911_261_067_009_703_3),
            (9.999, 0.990_239_261_848_604_2),
            (10.0, 0.990_241_167_346_042_3),
            (50.0, 0.999_600_399_409_127),
            (1000.0, 0.999_999_000_002_5),
        ];
        for (z, v) in cases {
            assert!(rel(xi_of_z(z), v) < 1e-12, "{z}: {}", xi_of_z(z));
        }
    }

    #[test]
    fn xi_continuous_at_asymptotic_switch() {
        let a = xi_of_z(XI_ASYMPTOTIC - 1e-9);
        let b = xi_of_z(XI_ASYMPTOTIC + 1e-9);
        assert!((a - b).abs() < 1e-11, "{a} {b}");
    }
}
