//! Retardation-free reduction `z u'' + u' + sin u = 0`, `u(0) = θ0`, in the
//! self-similar variable `z = x t` (with `t` in units of `1/Γ`).

use super::asymptotic::hermite5;
use super::{sin_rel, MftError};

/// Seed point of the series start.
pub const Z_START: f64 = 1e-6;
const RTOL: f64 = 1e-12;
const ATOL: f64 = 1e-14;

/// Dense solution `u(z)` on `[0, z_max]`.
#[derive(Clone, Debug)]
pub struct SineGordonSolution {
    pub theta0: f64,
    z: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
}

/// Taylor coefficients `u = θ0 + a1 z + a2 z² + a3 z³` of the regular solution.
fn series(theta0: f64) -> [f64; 4] {
    let (s, c) = (sin_rel(theta0), theta0.cos());
    [theta0, -s, s * c / 4.0, (s * s * s / 2.0 - s * c * c / 4.0) / 9.0]
}

fn rhs(z: f64, y: [f64; 2]) -> [f64; 2] {
    [y[1], -(y[1] + sin_rel(y[0])) / z]
}

/// Solve from the series start at `Z_START` with adaptive Dormand–Prince 5(4).
pub fn solve_sine_gordon_ode(theta0: f64, z_max: f64) -> Result<SineGordonSolution, MftError> {
    if theta0 == std::f64::consts::PI {
        return Err(MftError::Adynamical);
    }
    if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
        return Err(MftError::Theta0(theta0));
    }
    if !(z_max > Z_START && z_max.is_finite()) {
        return Err(MftError::Domain(format!("z_max = {z_max} must exceed {Z_START}")));
    }
    let a = series(theta0);
    let z0 = Z_START;
    let mut y = [
        a[0] + z0 * (a[1] + z0 * (a[2] + z0 * a[3])),
        a[1] + z0 * (2.0 * a[2] + 3.0 * z0 * a[3]),
    ];
    let mut z = z0;
    let mut sol = SineGordonSolution { theta0, z: vec![z], u: vec![y[0]], du: vec![y[1]] };
    let mut h: f64 = 1e-6;
    let mut k1 = rhs(z, y);
    while z < z_max {
        h = h.min(z_max - z);
        let (y5, err, k7) = dopri_step(z, y, h, k1);
        let sc = |i: usize| ATOL + RTOL * y[i].abs().max(y5[i].abs());
        let e = ((err[0] / sc(0)).powi(2) + (err[1] / sc(1)).powi(2)).sqrt() / 2f64.sqrt();
        if !e.is_finite() {
            return Err(MftError::NonFinite(format!("sine-gordon step at z = {z}")));
        }
        if e <= 1.0 {
            z += h;
            y = y5;
            k1 = k7;
            sol.z.push(z);
            sol.u.push(y[0]);
            sol.du.push(y[1]);
        }
        let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        // keep dense output resolving the oscillation
        h = h.min(0.05 * (1.0 + z.sqrt()));
    }
    Ok(sol)
}

fn dopri_step(z: f64, y: [f64; 2], h: f64, k1: [f64; 2]) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let add = |c: &[(f64, [f64; 2])]| -> [f64; 2] {
        let mut out = y;
        for (w, k) in c {
            out[0] += h * w * k[0];
            out[1] += h * w * k[1];
        }
        out
    };
    let k2 = rhs(z + h / 5.0, add(&[(1.0 / 5.0, k1)]));
    let k3 = rhs(z + 3.0 * h / 10.0, add(&[(3.0 / 40.0, k1), (9.0 / 40.0, k2)]));
    let k4 = rhs(z + 4.0 * h / 5.0, add(&[(44.0 / 45.0, k1), (-56.0 / 15.0, k2), (32.0 / 9.0, k3)]));
    let k5 = rhs(
        z + 8.0 * h / 9.0,
        add(&[(19372.0 / 6561.0, k1), (-25360.0 / 2187.0, k2), (64448.0 / 6561.0, k3), (-212.0 / 729.0, k4)]),
    );
    let k6 = rhs(
        z + h,
        add(&[
            (9017.0 / 3168.0, k1),
            (-355.0 / 33.0, k2),
            (46732.0 / 5247.0, k3),
            (49.0 / 176.0, k4),
            (-5103.0 / 18656.0, k5),
        ]),
    );
    let y5 = add(&[
        (35.0 / 384.0, k1),
        (500.0 / 1113.0, k3),
        (125.0 / 192.0, k4),
        (-2187.0 / 6784.0, k5),
        (11.0 / 84.0, k6),
    ]);
    let k7 = rhs(z + h, y5);
    let e = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let ks = [k1, k2, k3, k4, k5, k6, k7];
    let mut err = [0.0; 2];
    for (w, k) in e.iter().zip(ks) {
        err[0] += h * w * k[0];
        err[1] += h * w * k[1];
    }
    (y5, err, k7)
}

impl SineGordonSolution {
    pub fn z_max(&self) -> f64 {
        *self.z.last().unwrap()
    }

    /// `(u, u', u'')` at `z`.
    pub fn eval(&self, z: f64) -> (f64, f64, f64) {
        assert!((0.0..=self.z_max() * (1.0 + 1e-12)).contains(&z), "z = {z} outside [0, {}]", self.z_max());
        if z < Z_START {
            let a = series(self.theta0);
            return (
                a[0] + z * (a[1] + z * (a[2] + z * a[3])),
                a[1] + z * (2.0 * a[2] + 3.0 * z * a[3]),
                2.0 * a[2] + 6.0 * z * a[3],
            );
        }
        let i = match self.z.binary_search_by(|p| p.total_cmp(&z)) {
            Ok(i) => i.min(self.z.len() - 2),
            Err(i) => (i - 1).min(self.z.len() - 2),
        };
        let (z0, z1) = (self.z[i], self.z[i + 1]);
        let h = z1 - z0;
        let s = ((z - z0) / h).clamp(0.0, 1.0);
        let d2 = |j: usize| rhs(self.z[j], [self.u[j], self.du[j]])[1];
        let (c0, c1) = (d2(i), d2(i + 1));
        let u = hermite5(s, h, self.u[i], self.du[i], c0, self.u[i + 1], self.du[i + 1], c1);
        // u' interpolated from the cubic Hermite of (u', u'') at the ends
        let du = cubic_hermite(s, h, self.du[i], c0, self.du[i + 1], c1);
        let d2u = rhs(z, [u, du])[1];
        (u, du, d2u)
    }

    pub fn u(&self, z: f64) -> f64 {
        self.eval(z).0
    }

    /// `θ(x, t) = u(x t)` with `t` in units of `1/Γ`.
    pub fn theta(&self, x: f64, t: f64) -> f64 {
        self.u(x * t)
    }

    /// Scaled profile `R(z) = -sin u(z) u'(z)`, so that `r_n(t) = (n Γ / 2) R(n Γ t)`.
    pub fn profile(&self, z: f64) -> f64 {
        let (u, du, _) = self.eval(z);
        -sin_rel(u) * du
    }

    /// `r_n(t) = -(1/2) sin u(nΓt) · n · u'(nΓt) · Γ`.
    pub fn site_rate(&self, n: f64, t: f64, gamma: f64) -> f64 {
        0.5 * n * gamma * self.profile(n * gamma * t)
    }

    /// Location of the first maximum of the profile `R(z)`.
    pub fn z_peak(&self) -> f64 {
        // first local maximum over accepted nodes, refined by golden section
        let r: Vec<f64> = self.z.iter().map(|&z| self.profile(z)).collect();
        let i = (1..r.len() - 1).find(|&i| r[i] >= r[i - 1] && r[i] >= r[i + 1]).expect("profile has no interior maximum");
        let (mut a, mut b) = (self.z[i - 1], self.z[i + 1]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let (c, d) = (b - g * (b - a), a + g * (b - a));
            if self.profile(c) > self.profile(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    /// Accepted integration nodes `(z, u, u')`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.z.iter().zip(&self.u).zip(&self.du).map(|((z, u), d)| (*z, *u, *d))
    }
}

fn cubic_hermite(s: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    /// Regular solution of the linearised equation `z u'' + u' + u = 0`:
    /// `θ0 Σ (-z)^k / (k!)² = θ0 J0(2√z)`.
    fn bessel_series(theta0: f64, z: f64) -> f64 {
        let (mut term, mut sum) = (1.0f64, 1.0f64);
        for k in 1..200 {
            term *= -z / (k as f64 * k as f64);
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        theta0 * sum
    }

    #[test]
    fn initial_conditions() {
        let s = solve_sine_gordon_ode(0.7 * PI, 5.0).unwrap();
        let (u, du, _) = s.eval(0.0);
        assert!((u - 0.7 * PI).abs() < 1e-15);
        assert!((du + (0.7 * PI).sin()).abs() < 1e-10);
        let (u, du, _) = s.eval(Z_START);
        let (u2, du2, _) = s.eval(Z_START * (1.0 + 1e-9));
        assert!((u - u2).abs() < 1e-12 && (du - du2).abs() < 1e-9);
    }

    #[test]
    fn small_angle_bessel_limit() {
        let theta0 = 1e-3;
        let s = solve_sine_gordon_ode(theta0, 30.0).unwrap();
        for i in 0..=300 {
            let z = i as f64 * 0.1;
            let want = bessel_series(theta0, z);
            assert!((s.u(z) - want).abs() < 1e-6 * theta0, "z={z}: {} vs {want}", s.u(z));
            assert!(s.u(z).abs() <= theta0 * (1.0 + 1e-6));
        }
    }

    #[test]
    fn residual_of_dense_output() {
        let s = solve_sine_gordon_ode(0.5 * PI, 40.0).unwrap();
        // finite-difference residual of z u'' + u' + sin u
        let h = 1e-3;
        for i in 1..400 {
            let z = 0.1 * i as f64;
            let (um, u0, up) = (s.u(z - h), s.u(z), s.u(z + h));
            let res = z * (up - 2.0 * u0 + um) / (h * h) + (up - um) / (2.0 * h) + u0.sin();
            assert!(res.abs() < 1e-4, "z={z}: {res}");
        }
    }

    #[test]
    fn dicke_scaling_of_rates() {
        let s = solve_sine_gordon_ode(0.7 * PI, 200.0).unwrap();
        for (n, m) in [(10.0, 4.0), (7.0, 3.0)] {
            for i in 0..50 {
                let t = 0.05 * i as f64;
                let lhs = s.site_rate(n, t, 1.3);
                let rhs = n / m * s.site_rate(m, n * t / m, 1.3);
                assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn first_peak_is_interior() {
        let s = solve_sine_gordon_ode(0.7 * PI, 20.0).unwrap();
        let zp = s.z_peak();
        assert!(zp > 0.0 && zp < 5.0);
        let r = s.profile(zp);
        assert!(r > s.profile(zp * 0.99) && r > s.profile(zp * 1.01));
    }

    #[test]
    fn inverted_start_is_adynamical() {
        assert!(matches!(solve_sine_gordon_ode(PI, 1.0), Err(MftError::Adynamical)));
    }
}
