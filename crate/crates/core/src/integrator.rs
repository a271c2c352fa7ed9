//! Autonomous ODE stepping: Dormand-Prince 5(4) with Hairer's stiffness
//! test, and an L-stable Rosenbrock 2(3) (Shampine-Reichelt) to fall back on.

use nalgebra::{DMatrix, DVector};

/// Hairer & Wanner II, h*lambda bound for DOPRI5.
pub const STIFF_HLAMBDA: f64 = 3.25;
pub const STIFF_STEPS: u32 = 15;
pub const NONSTIFF_RESET: u32 = 6;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const MAX_REJECTS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dopri5,
    Rosenbrock23,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
    pub jacobians: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepError {
    StepTooSmall { t: f64, h: f64 },
    NonFinite { t: f64 },
    Singular { t: f64 },
}

pub struct Integrator<F, const N: usize>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    f: F,
    tol: Tolerance<N>,
    pub method: Method,
    pub t: f64,
    pub y: [f64; N],
    pub h: f64,
    h_min: f64,
    /// FSAL derivative at (t, y).
    fy: [f64; N],
    stiff_hits: u32,
    nonstiff_hits: u32,
    /// Set once DOPRI5 has detected stiffness and handed over.
    pub switched: bool,
    pub stats: Stats,
}

fn err_norm<const N: usize>(e: &[f64; N], y0: &[f64; N], y1: &[f64; N], tol: &Tolerance<N>) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let sc = tol.atol[i] + tol.rtol * y0[i].abs().max(y1[i].abs());
        let r = e[i] / sc;
        s += r * r;
    }
    (s / N as f64).sqrt()
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Forward-difference Jacobian.
pub fn numeric_jacobian<F, const N: usize>(f: &F, y: &[f64; N], fy: &[f64; N], scale: &[f64; N]) -> DMatrix<f64>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut j = DMatrix::zeros(N, N);
    let eps = f64::EPSILON.sqrt();
    for c in 0..N {
        let d = eps * y[c].abs().max(scale[c]);
        let mut yp = *y;
        yp[c] += d;
        let d = yp[c] - y[c];
        let fp = f(&yp);
        for r in 0..N {
            j[(r, c)] = (fp[r] - fy[r]) / d;
        }
    }
    j
}

impl<F, const N: usize> Integrator<F, N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    pub fn new(f: F, y0: [f64; N], h0: f64, tol: Tolerance<N>, method: Method) -> Self {
        let fy = f(&y0);
        Self {
            f,
            tol,
            method,
            t: 0.0,
            y: y0,
            h: h0,
            h_min: 1e-22,
            fy,
            stiff_hits: 0,
            nonstiff_hits: 0,
            switched: false,
            stats: Stats {
                evaluations: 1,
                ..Stats::default()
            },
        }
    }

    pub fn derivative(&self) -> &[f64; N] {
        &self.fy
    }

    pub fn rhs(&self) -> &F {
        &self.f
    }

    /// Replace the current state (e.g. after an external correction).
    pub fn reset_state(&mut self, y: [f64; N]) {
        self.y = y;
        self.fy = (self.f)(&y);
        self.stats.evaluations += 1;
    }

    /// Take one accepted step.
    pub fn step(&mut self) -> Result<(), StepError> {
        match self.method {
            Method::Dopri5 => self.step_dopri5(),
            Method::Rosenbrock23 => self.step_rosenbrock(),
        }
    }

    fn step_dopri5(&mut self) -> Result<(), StepError> {
        const C2: f64 = 1.0 / 5.0;
        const A31: f64 = 3.0 / 40.0;
        const A32: f64 = 9.0 / 40.0;
        const A41: f64 = 44.0 / 45.0;
        const A42: f64 = -56.0 / 15.0;
        const A43: f64 = 32.0 / 9.0;
        const A51: f64 = 19372.0 / 6561.0;
        const A52: f64 = -25360.0 / 2187.0;
        const A53: f64 = 64448.0 / 6561.0;
        const A54: f64 = -212.0 / 729.0;
        const A61: f64 = 9017.0 / 3168.0;
        const A62: f64 = -355.0 / 33.0;
        const A63: f64 = 46732.0 / 5247.0;
        const A64: f64 = 49.0 / 176.0;
        const A65: f64 = -5103.0 / 18656.0;
        const B1: f64 = 35.0 / 384.0;
        const B3: f64 = 500.0 / 1113.0;
        const B4: f64 = 125.0 / 192.0;
        const B5: f64 = -2187.0 / 6784.0;
        const B6: f64 = 11.0 / 84.0;
        const E1: f64 = 71.0 / 57600.0;
        const E3: f64 = -71.0 / 16695.0;
        const E4: f64 = 71.0 / 1920.0;
        const E5: f64 = -17253.0 / 339200.0;
        const E6: f64 = 22.0 / 525.0;
        const E7: f64 = -1.0 / 40.0;

        let mut rejects = 0;
        let mut fac_max = FAC_MAX;
        loop {
            let h = self.h;
            if h < self.h_min {
                return Err(StepError::StepTooSmall { t: self.t, h });
            }
            let y = &self.y;
            let k1 = self.fy;
            let k2 = (self.f)(&axpy(y, h, &[(C2, &k1)]));
            let k3 = (self.f)(&axpy(y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = (self.f)(&axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = (self.f)(&axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let y6 = axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            let k6 = (self.f)(&y6);
            let y7 = axpy(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = (self.f)(&y7);
            self.stats.evaluations += 6;

            let mut e = [0.0; N];
            for i in 0..N {
                e[i] = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let err = if finite(&y7) && finite(&k7) {
                err_norm(&e, y, &y7, &self.tol)
            } else {
                f64::INFINITY
            };

            if err <= 1.0 {
                // stiffness estimate h*|lambda| ~ h ||k7 - k6|| / ||y7 - y6||
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..N {
                    num += (k7[i] - k6[i]).powi(2);
                    den += (y7[i] - y6[i]).powi(2);
                }
                if den > 0.0 && h * (num / den).sqrt() > STIFF_HLAMBDA {
                    self.nonstiff_hits = 0;
                    self.stiff_hits += 1;
                    if self.stiff_hits >= STIFF_STEPS {
                        self.method = Method::Rosenbrock23;
                        self.switched = true;
                    }
                } else {
                    self.nonstiff_hits += 1;
                    if self.nonstiff_hits >= NONSTIFF_RESET {
                        self.stiff_hits = 0;
                    }
                }
                self.t += h;
                self.y = y7;
                self.fy = k7;
                self.stats.accepted += 1;
                let fac = if err == 0.0 {
                    fac_max
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, fac_max)
                };
                self.h = h * fac;
                return Ok(());
            }
            self.stats.rejected += 1;
            rejects += 1;
            if rejects > MAX_REJECTS {
                return Err(if err.is_finite() {
                    StepError::StepTooSmall { t: self.t, h }
                } else {
                    StepError::NonFinite { t: self.t }
                });
            }
            fac_max = 1.0;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            self.h = h * fac;
        }
    }

    fn step_rosenbrock(&mut self) -> Result<(), StepError> {
        let d = 1.0 / (2.0 + std::f64::consts::SQRT_2);
        let e32 = 6.0 + std::f64::consts::SQRT_2;

        let scale = self.tol.atol.map(|a| a / self.tol.rtol);
        let jac = numeric_jacobian(&self.f, &self.y, &self.fy, &scale);
        self.stats.jacobians += 1;
        self.stats.evaluations += N as u64;

        let mut rejects = 0;
        let mut fac_max = FAC_MAX;
        loop {
            let h = self.h;
            if h < self.h_min {
                return Err(StepError::StepTooSmall { t: self.t, h });
            }
            let w = DMatrix::<f64>::identity(N, N) - &jac * (h * d);
            let lu = w.lu();
            let solve = |rhs: [f64; N]| -> Option<[f64; N]> {
                let x = lu.solve(&DVector::from_column_slice(&rhs))?;
                let mut out = [0.0; N];
                out.copy_from_slice(x.as_slice());
                Some(out)
            };
            let f0 = self.fy;
            let k1 = solve(f0).ok_or(StepError::Singular { t: self.t })?;
            let f1 = (self.f)(&axpy(&self.y, h, &[(0.5, &k1)]));
            let mut r2 = [0.0; N];
            for i in 0..N {
                r2[i] = f1[i] - k1[i];
            }
            let mut k2 = solve(r2).ok_or(StepError::Singular { t: self.t })?;
            for i in 0..N {
                k2[i] += k1[i];
            }
            let ynew = axpy(&self.y, h, &[(1.0, &k2)]);
            let f2 = (self.f)(&ynew);
            let mut r3 = [0.0; N];
            for i in 0..N {
                r3[i] = f2[i] - e32 * (k2[i] - f1[i]) - 2.0 * (k1[i] - f0[i]);
            }
            let k3 = solve(r3).ok_or(StepError::Singular { t: self.t })?;
            self.stats.evaluations += 2;

            let mut e = [0.0; N];
            for i in 0..N {
                e[i] = h / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
            }
            let err = if finite(&ynew) && finite(&f2) {
                err_norm(&e, &self.y, &ynew, &self.tol)
            } else {
                f64::INFINITY
            };
            if err <= 1.0 {
                self.t += h;
                self.y = ynew;
                self.fy = f2;
                self.stats.accepted += 1;
                let fac = if err == 0.0 {
                    fac_max
                } else {
                    (SAFETY * err.powf(-1.0 / 3.0)).clamp(FAC_MIN, fac_max)
                };
                self.h = h * fac;
                return Ok(());
            }
            self.stats.rejected += 1;
            rejects += 1;
            if rejects > MAX_REJECTS {
                return Err(if err.is_finite() {
                    StepError::StepTooSmall { t: self.t, h }
                } else {
                    StepError::NonFinite { t: self.t }
                });
            }
            fac_max = 1.0;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-1.0 / 3.0)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            self.h = h * fac;
        }
    }
}
