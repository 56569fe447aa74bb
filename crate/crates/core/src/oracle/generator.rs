//! Time-shifted Liouvillian and its unraveling into a non-Hermitian generator
//! plus collective jumps.

use num_complex::Complex64;

use super::state::{bit, DensityOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Active-site mask and rate of the time-shifted dynamics.
///
/// Sites `first..=N` are active, which is the only shape the mask takes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveGenerator {
    pub n_sites: usize,
    pub gamma: f64,
    pub first: usize,
}

impl EffectiveGenerator {
    pub fn new(n_sites: usize, gamma: f64, first: usize) -> Self {
        assert!((1..=n_sites + 1).contains(&first));
        Self { n_sites, gamma, first }
    }

    fn active(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.n_sites
    }

    /// `ℋ_eff |ψ⟩` with `ℋ_eff = -iΓ Σ_{n active}[σ_n†σ_n / 2 + Σ_{m>n} σ_m†σ_n]`.
    pub fn apply_hamiltonian(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; psi.len()];
        let scale = Complex64::new(0.0, -self.gamma);
        for n in self.active() {
            let bn = bit(n);
            for (i, a) in psi.iter().enumerate() {
                if i & bn == 0 {
                    continue;
                }
                out[i] += 0.5 * a;
                let j = i ^ bn;
                for m in n + 1..=self.n_sites {
                    let bm = bit(m);
                    if j & bm == 0 {
                        out[j | bm] += a;
                    }
                }
            }
        }
        for o in &mut out {
            *o *= scale;
        }
        out
    }

    /// `S|ψ⟩` with `S = Σ_{n active} σ_n` (the physical jump operator is `√Γ S`).
    pub fn apply_jump(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; psi.len()];
        for n in self.active() {
            let bn = bit(n);
            for (i, a) in psi.iter().enumerate() {
                if i & bn != 0 {
                    out[i ^ bn] += a;
                }
            }
        }
        out
    }

    /// `-i(ℋ_eff ρ - ρ ℋ_eff†) + Γ S ρ S†`.
    pub fn unraveled_apply(&self, rho: &DensityOperator) -> DensityOperator {
        let dim = rho.dim();
        let col = |j: usize| -> Vec<Complex64> { (0..dim).map(|i| rho.get(i, j)).collect() };
        let mut h_rho = vec![ZERO; dim * dim];
        let mut s_rho = vec![ZERO; dim * dim];
        for j in 0..dim {
            let c = col(j);
            let hc = self.apply_hamiltonian(&c);
            let sc = self.apply_jump(&c);
            for i in 0..dim {
                h_rho[i * dim + j] = hc[i];
                s_rho[i * dim + j] = sc[i];
            }
        }
        // (ρ H†)[i][j] = conj((H v)[j]) with v the conjugated row i of ρ; same for S ρ S†.
        let mut out = DensityOperator::zeros(rho.n_sites);
        let minus_i = Complex64::new(0.0, -1.0);
        for i in 0..dim {
            let row_conj: Vec<Complex64> = (0..dim).map(|j| rho.get(i, j).conj()).collect();
            let h_row = self.apply_hamiltonian(&row_conj);
            let s_row_conj: Vec<Complex64> = (0..dim).map(|j| s_rho[i * dim + j].conj()).collect();
            let ss = self.apply_jump(&s_row_conj);
            for j in 0..dim {
                let rho_hdag = h_row[j].conj();
                out.data[i * dim + j] = minus_i * (h_rho[i * dim + j] - rho_hdag) + self.gamma * ss[j].conj();
            }
        }
        out
    }

    /// Time-shifted Liouvillian `Σ_{n active} L_n ρ`, expanded term by term:
    /// `L_n ρ = (Γ/2)[σ_n ρ, σ_n†] + Γ Σ_{m>n}[σ_n ρ, σ_m†] + H.c.`
    ///
    /// The Hermitian conjugate is taken of the whole commutator sum, which is the
    /// Lindblad form for Hermitian `ρ`.
    pub fn liouvillian(&self, rho: &DensityOperator) -> DensityOperator {
        let dim = rho.dim();
        let mut k = vec![ZERO; dim * dim];
        for n in self.active() {
            let bn = bit(n);
            for m in n..=self.n_sites {
                let bm = bit(m);
                let c = if m == n { 0.5 * self.gamma } else { self.gamma };
                // σ_n ρ σ_m†: element [i][j] = ρ[i | bn][j | bm] for i without bn, j without bm.
                for i in (0..dim).filter(|i| i & bn == 0) {
                    let src = (i | bn) * dim;
                    let dst = i * dim;
                    for j in (0..dim).filter(|j| j & bm == 0) {
                        k[dst + j] += c * rho.data[src + (j | bm)];
                    }
                }
                // -σ_m†σ_n ρ: element [i][j] = ρ[i'][j] with i' = i ^ bm ^ bn.
                for i in 0..dim {
                    let src = if m == n {
                        if i & bn == 0 {
                            continue;
                        }
                        i
                    } else {
                        if i & bm == 0 || i & bn != 0 {
                            continue;
                        }
                        i ^ bm ^ bn
                    };
                    for j in 0..dim {
                        k[i * dim + j] -= c * rho.data[src * dim + j];
                    }
                }
            }
        }
        let mut out = DensityOperator::zeros(rho.n_sites);
        for i in 0..dim {
            for j in 0..dim {
                out.data[i * dim + j] = k[i * dim + j] + k[j * dim + i].conj();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rng::{StreamKind, TrajectoryStream};

    #[test]
    fn single_atom_decay() {
        let g = EffectiveGenerator::new(1, 1.7, 1);
        let d = g.liouvillian(&DensityOperator::basis(1, 1));
        assert!((d.get(0, 0).re - 1.7).abs() < 1e-15);
        assert!((d.get(1, 1).re + 1.7).abs() < 1e-15);
        assert!(d.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn ground_state_is_dark() {
        for first in 1..=4 {
            let g = EffectiveGenerator::new(3, 1.0, first);
            let d = g.liouvillian(&DensityOperator::basis(3, 0));
            assert!(d.data.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn fully_excited_pair_second_site_decays_at_gamma() {
        let g = EffectiveGenerator::new(2, 1.0, 1);
        let d = g.liouvillian(&DensityOperator::basis(2, 0b11));
        assert!((d.correlator(2, 2).re + 1.0).abs() < 1e-15);
        assert!((d.correlator(1, 1).re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn traceless_and_unraveling_equivalent() {
        let mut rng = TrajectoryStream::new(5, 0, StreamKind::Jumps);
        for n_sites in 1..=4 {
            for first in 1..=n_sites + 1 {
                let g = EffectiveGenerator::new(n_sites, 1.3, first);
                for _ in 0..25 {
                    let rho = DensityOperator::random(n_sites, || rng.uniform());
                    let a = g.liouvillian(&rho);
                    let b = g.unraveled_apply(&rho);
                    assert!(a.trace().norm() < 1e-12);
                    assert!(a.max_abs_diff(&b) < 1e-14, "N={n_sites} first={first}: {}", a.max_abs_diff(&b));
                }
            }
        }
    }
}
