//! Continuum mean-field equation `[(Γτ) ∂²_t + ∂_t ∂_x] θ + sin θ = 0` with
//! `θ(x, 0) = θ(0, t) = θ0`.
//!
//! With `w = ∂_t θ` the second equation `(Γτ) ∂_t w + ∂_x w = -sin θ` is a
//! transport equation along the downstream characteristics `dt/dx = Γτ`. Each
//! node is updated by tracing its characteristic back to the previous time row
//! or the previous spatial column, whichever it crosses first, and integrating
//! `dw/ds = -sin θ` with the trapezoidal rule; `θ` follows from `∂_t θ = w`.

use super::{sin_rel, MftError};

/// Uniform rectangular grid `x_i = i dx`, `t_j = j dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdeGrid {
    pub dx: f64,
    pub dt: f64,
}

impl PdeGrid {
    pub fn uniform(h: f64) -> Self {
        Self { dx: h, dt: h }
    }

    /// Grid of constant resolution in the delay-free variables `x √(Γτ)`, `t / √(Γτ)`.
    pub fn scaled(h: f64, gamma_tau: f64) -> Self {
        if gamma_tau == 0.0 {
            return Self::uniform(h);
        }
        let s = gamma_tau.sqrt();
        Self { dx: h / s, dt: h * s }
    }
}

/// `θ` and `w = ∂_t θ` on the nodes, row-major in time.
#[derive(Clone, Debug)]
pub struct ContinuumSolution {
    pub theta0: f64,
    pub gamma_tau: f64,
    pub grid: PdeGrid,
    pub nx: usize,
    pub nt: usize,
    theta: Vec<f64>,
    w: Vec<f64>,
}

/// Solve on `[0, x_max] × [0, t_max]` (x in units of the spacing, t in units of `1/Γ`).
pub fn solve_continuum_pde(
    theta0: f64,
    gamma_tau: f64,
    x_max: f64,
    t_max: f64,
    grid: PdeGrid,
) -> Result<ContinuumSolution, MftError> {
    if !(theta0 > 0.0 && theta0 <= std::f64::consts::PI) {
        return Err(MftError::Theta0(theta0));
    }
    if !(gamma_tau >= 0.0 && gamma_tau.is_finite()) {
        return Err(MftError::GammaTau(gamma_tau));
    }
    if !(grid.dx > 0.0 && grid.dt > 0.0 && x_max > 0.0 && t_max > 0.0) {
        return Err(MftError::Domain(format!("grid {grid:?} on [0, {x_max}] x [0, {t_max}]")));
    }
    // the domain is covered up to a node at or beyond each edge
    let nodes = |len: f64, h: f64| (len / h - 1e-9).ceil().max(0.0) as usize + 1;
    let nx = nodes(x_max, grid.dx);
    let nt = nodes(t_max, grid.dt);
    if nx < 2 || nt < 2 || nx.saturating_mul(nt) > 400_000_000 {
        return Err(MftError::Domain(format!("{nx} x {nt} nodes")));
    }
    let g = gamma_tau;
    let (dx, dt) = (grid.dx, grid.dt);
    let mut theta = vec![theta0; nx * nt];
    let mut w = vec![0.0; nx * nt];
    let s0 = sin_rel(theta0);
    if g == 0.0 {
        // without inertia the initial w is fixed by ∂_x w = -sin θ0
        for i in 0..nx {
            w[i] = -(i as f64) * dx * s0;
        }
    }
    // characteristic length back to row j (dt / g) or column i-1 (dx)
    let through_row = g * dx > dt;
    let (s_back, frac) = if through_row { (dt / g, dt / (g * dx)) } else { (dx, g * dx / dt) };
    for j in 0..nt - 1 {
        let (prev, next) = theta.split_at_mut((j + 1) * nx);
        let prev = &prev[j * nx..];
        let next = &mut next[..nx];
        let (wp, wn) = w.split_at_mut((j + 1) * nx);
        let wp = &wp[j * nx..];
        let wn = &mut wn[..nx];
        next[0] = theta0;
        wn[0] = 0.0;
        for i in 1..nx {
            // foot point of the characteristic, linear interpolation along the crossed edge
            let (th_f, w_f) = if through_row {
                (frac * prev[i - 1] + (1.0 - frac) * prev[i], frac * wp[i - 1] + (1.0 - frac) * wp[i])
            } else {
                (frac * prev[i - 1] + (1.0 - frac) * next[i - 1], frac * wp[i - 1] + (1.0 - frac) * wn[i - 1])
            };
            let sf = sin_rel(th_f);
            let mut th = prev[i] + dt * wp[i];
            let mut wv = wp[i];
            for _ in 0..20 {
                let wv_new = w_f - 0.5 * s_back * (sf + sin_rel(th));
                let th_new = prev[i] + 0.5 * dt * (wp[i] + wv_new);
                let done = (th_new - th).abs() <= 1e-15 * (1.0 + th.abs());
                th = th_new;
                wv = wv_new;
                if done {
                    break;
                }
            }
            if !th.is_finite() || !wv.is_finite() || wv.abs() > 1e12 {
                return Err(MftError::Instability {
                    x: i as f64 * dx,
                    t: (j + 1) as f64 * dt,
                    courant: g * dx / dt,
                });
            }
            next[i] = th;
            wn[i] = wv;
        }
    }
    Ok(ContinuumSolution { theta0, gamma_tau, grid, nx, nt, theta, w })
}

impl ContinuumSolution {
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.grid.dx
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.grid.dt
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.nt - 1)
    }

    pub fn theta_at(&self, i: usize, j: usize) -> f64 {
        self.theta[j * self.nx + i]
    }

    pub fn theta_dot_at(&self, i: usize, j: usize) -> f64 {
        self.w[j * self.nx + i]
    }

    /// `r = -(1/2) sin θ ∂_t θ`.
    pub fn rate_at(&self, i: usize, j: usize) -> f64 {
        -0.5 * sin_rel(self.theta_at(i, j)) * self.theta_dot_at(i, j)
    }

    fn bilinear(&self, x: f64, t: f64, f: impl Fn(usize, usize) -> f64) -> f64 {
        let eps = 1e-9;
        assert!(
            x >= -eps && t >= -eps && x <= self.x_max() * (1.0 + eps) + eps && t <= self.t_max() * (1.0 + eps) + eps,
            "({x}, {t}) outside the grid"
        );
        let fx = (x / self.grid.dx).max(0.0);
        let ft = (t / self.grid.dt).max(0.0);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (ft.floor() as usize).min(self.nt - 2);
        let (a, b) = ((fx - i as f64).clamp(0.0, 1.0), (ft - j as f64).clamp(0.0, 1.0));
        (1.0 - a) * (1.0 - b) * f(i, j) + a * (1.0 - b) * f(i + 1, j) + (1.0 - a) * b * f(i, j + 1) + a * b * f(i + 1, j + 1)
    }

    /// Bilinear interpolant of `θ`.
    pub fn theta(&self, x: f64, t: f64) -> f64 {
        self.bilinear(x, t, |i, j| self.theta_at(i, j))
    }

    /// Bilinear interpolant of `r`.
    pub fn rate(&self, x: f64, t: f64) -> f64 {
        self.bilinear(x, t, |i, j| self.rate_at(i, j))
    }

    /// `r(x, t_j)` on the time grid.
    pub fn rate_series(&self, x: f64) -> Vec<f64> {
        (0..self.nt).map(|j| self.rate(x, self.t(j))).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nt).map(|j| self.t(j)).collect()
    }

    /// Largest defect of the boundary rows `θ(x, 0) = θ(0, t) = θ0`.
    pub fn boundary_defect(&self) -> f64 {
        let row = (0..self.nx).map(|i| (self.theta_at(i, 0) - self.theta0).abs());
        let col = (0..self.nt).map(|j| (self.theta_at(0, j) - self.theta0).abs());
        row.chain(col).fold(0.0, f64::max)
    }

    /// Rows `(x, t, θ, r)` of the stored field, subsampled by `stride`.
    pub fn field_rows(&self, stride_x: usize, stride_t: usize) -> Vec<[f64; 4]> {
        let mut out = Vec::new();
        for j in (0..self.nt).step_by(stride_t.max(1)) {
            for i in (0..self.nx).step_by(stride_x.max(1)) {
                out.push([self.x(i), self.t(j), self.theta_at(i, j), self.rate_at(i, j)]);
            }
        }
        out
    }
}

/// Map a solution at delay `τ` to the one predicted at `α τ` through
/// `θ(x, t; α τ) = θ(√α x, t/√α; τ)`. The nodes are relabelled, so no interpolation
/// is involved: the mapped grid has `dx/√α`, `dt √α` and `w` scales by `1/√α`.
pub fn rescale_solution(sol: &ContinuumSolution, alpha: f64) -> Result<ContinuumSolution, MftError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(MftError::Domain(format!("scale factor {alpha}")));
    }
    let s = alpha.sqrt();
    Ok(ContinuumSolution {
        theta0: sol.theta0,
        gamma_tau: sol.gamma_tau * alpha,
        grid: PdeGrid { dx: sol.grid.dx / s, dt: sol.grid.dt * s },
        nx: sol.nx,
        nt: sol.nt,
        theta: sol.theta.clone(),
        w: sol.w.iter().map(|w| w / s).collect(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::mft::asymptotic::AsymptoticSolution;
    use crate::mft::sine_gordon::solve_sine_gordon_ode;

    fn linf_vs_sine_gordon(h: f64) -> f64 {
        let theta0 = 0.7 * PI;
        let sol = solve_continuum_pde(theta0, 0.0, 6.0, 6.0, PdeGrid::uniform(h)).unwrap();
        let sg = solve_sine_gordon_ode(theta0, 36.0).unwrap();
        let mut err = 0.0f64;
        for j in 0..sol.nt {
            for i in 0..sol.nx {
                err = err.max((sol.theta_at(i, j) - sg.theta(sol.x(i), sol.t(j))).abs());
            }
        }
        err
    }

    #[test]
    fn delay_free_limit_converges_at_second_order() {
        let e1 = linf_vs_sine_gordon(0.04);
        let e2 = linf_vs_sine_gordon(0.02);
        assert!(e2 < 1e-3, "{e2}");
        assert!(e1 / e2 > 3.0, "order ratio {}", e1 / e2);
    }

    #[test]
    fn delay_free_exchange_symmetry() {
        let sol = solve_continuum_pde(0.6 * PI, 0.0, 5.0, 5.0, PdeGrid::uniform(0.01)).unwrap();
        let mut err = 0.0f64;
        for j in 0..sol.nt {
            for i in 0..sol.nx {
                err = err.max((sol.theta_at(i, j) - sol.theta_at(j, i)).abs());
            }
        }
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn inverted_start_is_stationary() {
        let sol = solve_continuum_pde(PI, 1e-3, 50.0, 3.0, PdeGrid::scaled(0.05, 1e-3)).unwrap();
        assert!((0..sol.nt).all(|j| (0..sol.nx).all(|i| sol.theta_at(i, j) == PI)));
    }

    #[test]
    fn boundaries_exact() {
        for grid in [PdeGrid { dx: 0.1, dt: 0.01 }, PdeGrid { dx: 0.01, dt: 0.1 }] {
            let sol = solve_continuum_pde(0.7 * PI, 0.05, 5.0, 5.0, grid).unwrap();
            assert_eq!(sol.boundary_defect(), 0.0);
            assert!((0..sol.nt).all(|j| (0..sol.nx).all(|i| sol.rate_at(i, j).is_finite())));
        }
    }

    #[test]
    fn far_field_follows_pendulum() {
        let g = 1e-3;
        let sol = solve_continuum_pde(0.5 * PI, g, 2000.0, 1.0, PdeGrid::scaled(0.01, g)).unwrap();
        let asym = AsymptoticSolution::with_horizon(0.5 * PI, g, sol.t_max()).unwrap();
        let i = sol.nx - 1;
        for j in 0..sol.nt {
            let t = sol.t(j);
            if t < 0.8 * sol.x(i) * g {
                assert!((sol.theta_at(i, j) - asym.theta(t)).abs() < 1e-3, "t={t}");
            }
        }
    }

    #[test]
    fn rescaling_is_identity_for_unit_factor_and_halves_rates() {
        let sol = solve_continuum_pde(0.7 * PI, 1e-2, 100.0, 2.0, PdeGrid::scaled(0.05, 1e-2)).unwrap();
        let same = rescale_solution(&sol, 1.0).unwrap();
        assert_eq!(same.theta, sol.theta);
        assert_eq!(same.w, sol.w);
        let peak = |s: &ContinuumSolution| {
            (0..s.nt).flat_map(|j| (0..s.nx).map(move |i| (i, j))).map(|(i, j)| s.rate_at(i, j)).fold(f64::MIN, f64::max)
        };
        let four = rescale_solution(&sol, 4.0).unwrap();
        assert!((peak(&four) - 0.5 * peak(&sol)).abs() < 1e-15);
        assert!((four.x_max() - 0.5 * sol.x_max()).abs() < 1e-12);
        assert!(rescale_solution(&sol, 0.0).is_err());
    }

    #[test]
    fn rescaled_matches_direct_solve() {
        // the direct solve at α τ on the half-spacing aligned grid contains every mapped node
        let (g, h) = (2e-3, 0.02);
        let base = solve_continuum_pde(0.7 * PI, g, 200.0, 0.4, PdeGrid::scaled(h, g)).unwrap();
        let fine = solve_continuum_pde(0.7 * PI, g, base.x_max(), base.t_max(), PdeGrid::scaled(0.5 * h, g)).unwrap();
        let mut tol = 0.0f64;
        for j in 0..base.nt {
            for i in 0..base.nx {
                tol = tol.max((base.theta_at(i, j) - fine.theta_at(2 * i, 2 * j)).abs());
            }
        }
        for alpha in [2.0, 4.0] {
            let mapped = rescale_solution(&base, alpha).unwrap();
            let direct =
                solve_continuum_pde(0.7 * PI, alpha * g, mapped.x_max(), mapped.t_max(), PdeGrid::scaled(0.5 * h, alpha * g))
                    .unwrap();
            let mut err = 0.0f64;
            for j in 0..mapped.nt {
                for i in 0..mapped.nx {
                    err = err.max((direct.theta_at(2 * i, 2 * j) - mapped.theta_at(i, j)).abs());
                }
            }
            assert!(err < 2.0 * tol, "alpha={alpha}: {err} vs {tol}");
        }
    }
}
