//! Fourth-order exponential time differencing Runge-Kutta with the
//! phi-functions evaluated by contour averaging.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Explicit RK4 real-axis stability bound; an explicitly treated linear
/// damping `-mu` needs `mu * dt` below it.
pub const RK4_STABILITY_LIMIT: f64 = 2.785;

/// Per-mode coefficients for a diagonal linear symbol. The symbol is real,
/// so every coefficient is real.
#[derive(Debug, Clone, PartialEq)]
pub struct EtdrkCoefficients {
    pub dt: f64,
    pub e_half: Vec<f64>,
    pub e_full: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
    pub q: Vec<f64>,
    pub contour_points: usize,
    pub contour_radius: f64,
}

impl EtdrkCoefficients {
    pub fn len(&self) -> usize {
        self.e_full.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e_full.is_empty()
    }
}

pub fn etdrk4_coefficients(symbol: &[f64], dt: f64, m: usize, radius: f64) -> Result<EtdrkCoefficients> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if m < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 contour points, got {m}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("contour radius must be positive, got {radius}")));
    }
    let roots: Vec<Complex64> = (1..=m)
        .map(|j| {
            let theta = std::f64::consts::PI * (2.0 * j as f64 - 1.0) / m as f64;
            Complex64::from_polar(radius, theta)
        })
        .collect();
    let n = symbol.len();
    let mut c = EtdrkCoefficients {
        dt,
        e_half: Vec::with_capacity(n),
        e_full: Vec::with_capacity(n),
        f1: Vec::with_capacity(n),
        f2: Vec::with_capacity(n),
        f3: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        contour_points: m,
        contour_radius: radius,
    };
    let inv_m = 1.0 / m as f64;
    for &lam in symbol {
        let z = lam * dt;
        c.e_half.push((0.5 * z).exp());
        c.e_full.push(z.exp());
        let (mut q, mut f1, mut f2, mut f3) = (0.0, 0.0, 0.0, 0.0);
        for r in &roots {
            let lr = z + r;
            let e = lr.exp();
            let lr3 = lr * lr * lr;
            q += (((0.5 * lr).exp() - 1.0) / lr).re;
            f1 += ((-4.0 - lr + e * (4.0 - 3.0 * lr + lr * lr)) / lr3).re;
            f2 += ((2.0 + lr + e * (lr - 2.0)) / lr3).re;
            f3 += ((-4.0 - 3.0 * lr - lr * lr + e * (4.0 - lr)) / lr3).re;
        }
        c.q.push(dt * q * inv_m);
        c.f1.push(dt * f1 * inv_m);
        c.f2.push(dt * f2 * inv_m);
        c.f3.push(dt * f3 * inv_m);
    }
    Ok(c)
}

/// Stage buffers reused across steps.
#[derive(Debug, Clone)]
pub struct Etdrk4Workspace {
    nv: Vec<Complex64>,
    na: Vec<Complex64>,
    nb: Vec<Complex64>,
    nc: Vec<Complex64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
}

impl Etdrk4Workspace {
    pub fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            nv: z.clone(),
            na: z.clone(),
            nb: z.clone(),
            nc: z.clone(),
            a: z.clone(),
            b: z.clone(),
            c: z,
        }
    }
}

/// One step from time `t`. `nonlinear(stage_time, state, out)` evaluates the
/// explicit part. `step` is only used for error reporting.
pub fn etdrk4_step<F>(
    v: &mut [Complex64],
    co: &EtdrkCoefficients,
    ws: &mut Etdrk4Workspace,
    t: f64,
    step: usize,
    mut nonlinear: F,
) -> Result<()>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
{
    let dt = co.dt;
    nonlinear(t, v, &mut ws.nv)?;
    for i in 0..v.len() {
        ws.a[i] = co.e_half[i] * v[i] + co.q[i] * ws.nv[i];
    }
    nonlinear(t + 0.5 * dt, &ws.a, &mut ws.na)?;
    for i in 0..v.len() {
        ws.b[i] = co.e_half[i] * v[i] + co.q[i] * ws.na[i];
    }
    nonlinear(t + 0.5 * dt, &ws.b, &mut ws.nb)?;
    for i in 0..v.len() {
        ws.c[i] = co.e_half[i] * ws.a[i] + co.q[i] * (2.0 * ws.nb[i] - ws.nv[i]);
    }
    nonlinear(t + dt, &ws.c, &mut ws.nc)?;
    let mut finite = true;
    for i in 0..v.len() {
        v[i] = co.e_full[i] * v[i]
            + ws.nv[i] * co.f1[i]
            + 2.0 * (ws.na[i] + ws.nb[i]) * co.f2[i]
            + ws.nc[i] * co.f3[i];
        finite &= v[i].re.is_finite() && v[i].im.is_finite();
    }
    if finite {
        Ok(())
    } else {
        Err(Error::NonFinite { step })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `phi_k(z) = sum_j z^j / (j+k)!`, adequate for `|z| <= 1`.
    fn phi(k: u32, z: f64) -> f64 {
        let mut fact = (1..=k).map(f64::from).product::<f64>();
        let mut sum = 0.0;
        let mut zj = 1.0;
        for j in 0..40u32 {
            sum += zj / fact;
            zj *= z;
            fact *= f64::from(j + k + 1);
        }
        sum
    }

    #[test]
    fn zero_symbol_matches_taylor_limits() {
        let dt = 0.25;
        let c = etdrk4_coefficients(&[0.0], dt, 32, 1.0).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(c.f1[0], dt / 6.0) < 1e-12);
        assert!(rel(c.f2[0], dt / 6.0) < 1e-12);
        assert!(rel(c.f3[0], dt / 6.0) < 1e-12);
        assert!(rel(c.q[0], dt / 2.0) < 1e-12);
    }

    #[test]
    fn coefficients_match_series_oracle() {
        let dt = 0.25;
        for lam in [-3.0, -1.0, -0.1, 0.5, 2.0] {
            let z = lam * dt;
            let c = etdrk4_coefficients(&[lam], dt, 32, 1.0).unwrap();
            let (p1, p2, p3) = (phi(1, z), phi(2, z), phi(3, z));
            let f1 = dt * (p1 - 3.0 * p2 + 4.0 * p3);
            let f2 = dt * (p2 - 2.0 * p3);
            let f3 = dt * (4.0 * p3 - p2);
            let q = 0.5 * dt * phi(1, 0.5 * z);
            for (a, b) in [(c.f1[0], f1), (c.f2[0], f2), (c.f3[0], f3), (c.q[0], q)] {
                assert!((a - b).abs() <= 1e-12 * b.abs(), "{lam}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn exponential_is_exact() {
        let c = etdrk4_coefficients(&[-1.0], 0.25, 32, 1.0).unwrap();
        assert!((c.e_full[0] - (-0.25f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn contour_resolution_independence() {
        let sym: Vec<f64> = (0..65).map(|k| (k * k) as f64 - 0.3 * (k as f64).powi(4)).collect();
        let a = etdrk4_coefficients(&sym, 0.25, 32, 1.0).unwrap();
        let b = etdrk4_coefficients(&sym, 0.25, 64, 1.0).unwrap();
        for (x, y) in [(&a.f1, &b.f1), (&a.f2, &b.f2), (&a.f3, &b.f3), (&a.q, &b.q)] {
            for (p, q) in x.iter().zip(y.iter()) {
                assert!((p - q).abs() <= 1e-12 * q.abs().max(1e-300), "{p} vs {q}");
            }
        }
        assert_eq!(a, etdrk4_coefficients(&sym, 0.25, 32, 1.0).unwrap());
    }

    #[test]
    fn zero_nonlinearity_is_pure_exponential() {
        let sym = [0.0, -0.5, 0.7, -40.0];
        let c = etdrk4_coefficients(&sym, 0.1, 32, 1.0).unwrap();
        let mut v: Vec<Complex64> = (0..4).map(|k| Complex64::new(1.0 + k as f64, 0.5)).collect();
        let start = v.clone();
        let mut ws = Etdrk4Workspace::new(4);
        etdrk4_step(&mut v, &c, &mut ws, 0.0, 0, |_, _, out| {
            out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
            Ok(())
        })
        .unwrap();
        for i in 0..4 {
            assert_eq!(v[i], start[i] * c.e_full[i]);
        }
    }

    #[test]
    fn fourth_order_on_scalar_ode() {
        let lam = -2.0;
        let u0 = 0.5;
        // u' = lam u + u^2 has u(t) = lam u0 e^{lam t} / (lam + u0 (1 - e^{lam t}))
        let exact = |t: f64| {
            let e = (lam * t).exp();
            lam * u0 * e / (lam + u0 * (1.0 - e))
        };
        let run = |dt: f64| {
            let c = etdrk4_coefficients(&[lam], dt, 32, 1.0).unwrap();
            let mut v = vec![Complex64::new(u0, 0.0)];
            let mut ws = Etdrk4Workspace::new(1);
            let steps = (1.0 / dt).round() as usize;
            for s in 0..steps {
                etdrk4_step(&mut v, &c, &mut ws, s as f64 * dt, s, |_, x, out| {
                    out[0] = x[0] * x[0];
                    Ok(())
                })
                .unwrap();
            }
            (v[0].re - exact(1.0)).abs()
        };
        let order = (run(0.05) / run(0.025)).log2();
        assert!(order > 3.8, "order {order}");
    }
}
