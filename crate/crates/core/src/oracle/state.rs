//! Dense states on the computational basis.
//!
//! Basis index bit `n - 1` set means site `n` is excited; `σ_n` clears that bit.

use num_complex::Complex64;

use nalgebra::DMatrix;

#[inline]
pub(crate) fn bit(site: usize) -> usize {
    1 << (site - 1)
}

/// Single-site amplitudes `(c_g, c_e)` of the initial product state.
pub fn site_amplitudes(theta0: f64) -> (f64, f64) {
    ((0.5 * theta0).cos(), (0.5 * theta0).sin())
}

/// Pure state vector with its norm tracked explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    pub n_sites: usize,
    pub amplitudes: Vec<Complex64>,
}

impl PureState {
    /// `⊗_n (cos(θ0/2)|g⟩ + sin(θ0/2)|e⟩)`.
    pub fn product(n_sites: usize, theta0: f64) -> Self {
        let (g, e) = site_amplitudes(theta0);
        let amplitudes = (0..1usize << n_sites)
            .map(|i| {
                let ones = i.count_ones() as i32;
                Complex64::new(e.powi(ones) * g.powi(n_sites as i32 - ones), 0.0)
            })
            .collect();
        Self { n_sites, amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm_sqr().sqrt();
        for a in &mut self.amplitudes {
            *a *= s;
        }
    }

    /// `σ_site |ψ⟩`.
    pub fn lowered(&self, site: usize) -> Vec<Complex64> {
        let b = bit(site);
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if i & b != 0 {
                out[i ^ b] = *a;
            }
        }
        out
    }

    /// All `⟨ψ|σ_n†σ_m|ψ⟩`, as `c[n-1][m-1]`, for a normalized state.
    pub fn correlation_matrix(&self) -> Vec<Vec<Complex64>> {
        let lowered: Vec<Vec<Complex64>> = (1..=self.n_sites).map(|n| self.lowered(n)).collect();
        (0..self.n_sites)
            .map(|n| {
                (0..self.n_sites)
                    .map(|m| lowered[n].iter().zip(&lowered[m]).map(|(a, b)| a.conj() * b).sum())
                    .collect()
            })
            .collect()
    }
}

/// Dense density matrix, row-major `ρ[i][j] = ⟨i|ρ|j⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    pub n_sites: usize,
    pub data: Vec<Complex64>,
}

impl DensityOperator {
    pub fn zeros(n_sites: usize) -> Self {
        let dim = 1 << n_sites;
        Self { n_sites, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let dim = psi.dim();
        let mut data = Vec::with_capacity(dim * dim);
        for a in &psi.amplitudes {
            for b in &psi.amplitudes {
                data.push(a * b.conj());
            }
        }
        Self { n_sites: psi.n_sites, data }
    }

    pub fn product(n_sites: usize, theta0: f64) -> Self {
        Self::from_pure(&PureState::product(n_sites, theta0))
    }

    /// `|b⟩⟨b|` for a basis index.
    pub fn basis(n_sites: usize, index: usize) -> Self {
        let mut rho = Self::zeros(n_sites);
        let dim = rho.dim();
        rho.data[index * dim + index] = Complex64::new(1.0, 0.0);
        rho
    }

    #[inline]
    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim() + j]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `max |ρ - ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let dim = self.dim();
        let m = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (self.get(i, j) + self.get(j, i).conj()));
        m.symmetric_eigenvalues().iter().copied().collect()
    }

    /// `tr(σ_n† σ_m ρ)`.
    pub fn correlator(&self, n: usize, m: usize) -> Complex64 {
        let (bn, bm) = (bit(n), bit(m));
        let dim = self.dim();
        if n == m {
            return (0..dim).filter(|i| i & bn != 0).map(|i| self.get(i, i)).sum();
        }
        // ⟨i|σ_n†σ_m ρ|i⟩ = ρ[i ^ bn | bm][i] for i with bn set and bm clear.
        (0..dim).filter(|i| i & bn != 0 && i & bm == 0).map(|i| self.get(i ^ bn | bm, i)).sum()
    }

    pub fn axpy(&mut self, a: f64, x: &DensityOperator) {
        for (y, x) in self.data.iter_mut().zip(&x.data) {
            *y += a * x;
        }
    }

    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Random Hermitian, positive, unit-trace matrix `A A† / tr(A A†)` from a
    /// uniform source in [0, 1).
    pub fn random<F: FnMut() -> f64>(n_sites: usize, mut uniform: F) -> Self {
        let dim = 1 << n_sites;
        let a = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(uniform() - 0.5, uniform() - 0.5));
        let m = &a * a.adjoint();
        let tr: Complex64 = m.trace();
        let mut rho = Self::zeros(n_sites);
        for i in 0..dim {
            for j in 0..dim {
                rho.data[i * dim + j] = m[(i, j)] / tr.re;
            }
        }
        rho
    }
}
