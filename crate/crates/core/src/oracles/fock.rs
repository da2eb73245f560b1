//! Density-matrix simulator on a truncated Fock space of one or two modes.
//!
//! The basis holds every occupation pattern with total photon number at most
//! `cutoff`. Gates are exponentials of the truncated generators, so they are
//! exactly unitary on the truncated space; population that would leave it piles
//! up in the outermost shells and is reported as the tail.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_unit_interval, Error, Result};
use crate::gaussian::PhotonStats;
use crate::tolerances::Tolerances;

#[derive(Debug, PartialEq, Eq)]
struct FockSpace {
    n_modes: usize,
    cutoff: usize,
    states: Vec<[usize; 2]>,
    lookup: Vec<usize>,
}

impl FockSpace {
    fn new(n_modes: usize, cutoff: usize) -> Result<Self> {
        if !(1..=2).contains(&n_modes) {
            return Err(Error::ModeIndex {
                index: n_modes,
                n_modes: 2,
            });
        }
        if cutoff < 2 {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                value: cutoff as f64,
                reason: "need at least two photon-number shells",
            });
        }
        let side = cutoff + 1;
        let mut lookup = vec![usize::MAX; side * side];
        let mut states = Vec::new();
        for total in 0..=cutoff {
            if n_modes == 1 {
                lookup[total * side] = states.len();
                states.push([total, 0]);
            } else {
                for n1 in (0..=total).rev() {
                    let n2 = total - n1;
                    lookup[n1 * side + n2] = states.len();
                    states.push([n1, n2]);
                }
            }
        }
        Ok(Self {
            n_modes,
            cutoff,
            states,
            lookup,
        })
    }

    fn dim(&self) -> usize {
        self.states.len()
    }

    fn index(&self, n: [usize; 2]) -> Option<usize> {
        if n[0] + n[1] > self.cutoff || (self.n_modes == 1 && n[1] != 0) {
            return None;
        }
        Some(self.lookup[n[0] * (self.cutoff + 1) + n[1]])
    }

    fn total(&self, i: usize) -> usize {
        self.states[i][0] + self.states[i][1]
    }
}

/// Anti-Hermitian generator `K`, stored as a sum of normal-ordered monomials; the gate is `exp(K)`.
#[derive(Debug, Clone, Default)]
pub struct Generator {
    /// `(coefficient, [(creations, annihilations); 2])`.
    terms: Vec<(Complex64, [(u32, u32); 2])>,
}

impl Generator {
    pub fn new() -> Self {
        Self::default()
    }

    fn term(mut self, c: Complex64, powers: [(u32, u32); 2]) -> Self {
        self.terms.push((c, powers));
        self
    }

    fn single(mode: usize, create: u32, annihilate: u32) -> [(u32, u32); 2] {
        let mut p = [(0, 0); 2];
        p[mode] = (create, annihilate);
        p
    }

    /// `(g/2)(e^{iψ} a†² − e^{−iψ} a²)`; at `ψ = 0` it stretches x by `e^g`.
    pub fn squeezer(self, mode: usize, gain: f64, phase: f64) -> Self {
        let c = Complex64::from_polar(gain / 2.0, phase);
        self.term(c, Self::single(mode, 2, 0))
            .term(-c.conj(), Self::single(mode, 0, 2))
    }

    /// `g (a₁†a₂† − a₁a₂)`.
    pub fn two_mode_squeezer(self, gain: f64) -> Self {
        let c = Complex64::new(gain, 0.0);
        self.term(c, [(1, 0), (1, 0)]).term(-c, [(0, 1), (0, 1)])
    }

    /// `α a† − α* a`.
    pub fn displacement(self, mode: usize, alpha: Complex64) -> Self {
        self.term(alpha, Self::single(mode, 1, 0))
            .term(-alpha.conj(), Self::single(mode, 0, 1))
    }

    /// `θ(e^{iφ} a₁†a₂ − e^{−iφ} a₂†a₁)`: transmissivity `cos²θ`, and
    /// `a₁ → cos θ·a₁ + e^{iφ} sin θ·a₂` in the Heisenberg picture.
    pub fn beamsplitter(self, theta: f64, phase: f64) -> Self {
        let c = Complex64::from_polar(theta, phase);
        self.term(c, [(1, 0), (0, 1)])
            .term(-c.conj(), [(0, 1), (1, 0)])
    }

    fn max_mode(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, p)| if p[1] != (0, 0) { 2 } else { 1 })
            .max()
            .unwrap_or(1)
    }
}

fn falling(n: usize, k: u32) -> Option<f64> {
    let k = k as usize;
    (n >= k).then(|| ((n - k + 1)..=n).map(|v| v as f64).product::<f64>().sqrt())
}

fn rising(n: usize, k: u32) -> f64 {
    ((n + 1)..=(n + k as usize))
        .map(|v| v as f64)
        .product::<f64>()
        .sqrt()
}

/// Matrix elements `(row, col, value)` of `gen` on `space`.
fn generator_entries(space: &FockSpace, gen: &Generator) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for (col, &n) in space.states.iter().enumerate() {
        for &(c, powers) in &gen.terms {
            let mut amp = c;
            let mut target = [0usize; 2];
            let mut ok = true;
            for m in 0..2 {
                let (create, annihilate) = powers[m];
                match falling(n[m], annihilate) {
                    Some(f) => {
                        let lowered = n[m] - annihilate as usize;
                        amp *= f * rising(lowered, create);
                        target[m] = lowered + create as usize;
                    }
                    None => ok = false,
                }
            }
            if !ok {
                continue;
            }
            if let Some(row) = space.index(target) {
                out.push((row, col, amp));
            }
        }
    }
    out
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// `exp(K)` as a list of dense diagonal blocks over the connected components of `K`.
fn block_unitary(space: &FockSpace, gen: &Generator) -> Vec<(Vec<usize>, DMatrix<Complex64>)> {
    let entries = generator_entries(space, gen);
    let dim = space.dim();
    let mut parent: Vec<usize> = (0..dim).collect();
    let mut touched = vec![false; dim];
    for &(r, c, _) in &entries {
        touched[r] = true;
        touched[c] = true;
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); dim];
    for (i, _) in touched.iter().enumerate().filter(|(_, &t)| t) {
        let root = find(&mut parent, i);
        members[root].push(i);
    }
    let mut local = vec![0usize; dim];
    let mut block_of = vec![usize::MAX; dim];
    let mut blocks: Vec<(Vec<usize>, DMatrix<Complex64>)> = Vec::new();
    for idx in members.into_iter().filter(|m| !m.is_empty()) {
        for (k, &i) in idx.iter().enumerate() {
            local[i] = k;
            block_of[i] = blocks.len();
        }
        let m = idx.len();
        blocks.push((idx, DMatrix::zeros(m, m)));
    }
    for &(r, c, v) in &entries {
        blocks[block_of[r]].1[(local[r], local[c])] += v;
    }
    for (_, k_mat) in blocks.iter_mut() {
        *k_mat = k_mat.exp();
    }
    blocks
}

/// A density matrix on a truncated one- or two-mode Fock space.
#[derive(Debug, Clone)]
pub struct FockState {
    space: Arc<FockSpace>,
    rho: DMatrix<Complex64>,
    tail_tol: f64,
}

impl FockState {
    pub fn vacuum(n_modes: usize, cutoff: usize) -> Result<Self> {
        Self::number_state(n_modes, cutoff, &[0, 0][..n_modes])
    }

    /// `|n₁⟩` or `|n₁, n₂⟩`.
    pub fn number_state(n_modes: usize, cutoff: usize, photons: &[usize]) -> Result<Self> {
        let space = FockSpace::new(n_modes, cutoff)?;
        if photons.len() != n_modes {
            return Err(Error::ArityMismatch {
                expected: n_modes,
                got: photons.len(),
            });
        }
        let mut n = [0usize; 2];
        n[..n_modes].copy_from_slice(photons);
        let i = space.index(n).ok_or(Error::CutoffTooSmall {
            cutoff,
            tail: 1.0,
            budget: Tolerances::DEFAULT.fock_tail,
        })?;
        let dim = space.dim();
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(i, i)] = Complex64::new(1.0, 0.0);
        Ok(Self {
            space: Arc::new(space),
            rho,
            tail_tol: Tolerances::DEFAULT.fock_tail,
        })
    }

    /// Replaces the truncation budget checked after each gate.
    pub fn with_tail_tolerance(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.space.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.space.cutoff
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn density_matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum()
    }

    /// Population in the two outermost total-photon-number shells.
    pub fn tail(&self) -> f64 {
        let cutoff = self.space.cutoff;
        (0..self.dim())
            .filter(|&i| self.space.total(i) + 1 >= cutoff)
            .map(|i| self.rho[(i, i)].re)
            .sum()
    }

    fn check_tail(self) -> Result<Self> {
        let tail = self.tail();
        if tail > self.tail_tol {
            return Err(Error::CutoffTooSmall {
                cutoff: self.space.cutoff,
                tail,
                budget: self.tail_tol,
            });
        }
        Ok(self)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.n_modes() {
            Ok(())
        } else {
            Err(Error::ModeIndex {
                index: mode,
                n_modes: self.n_modes(),
            })
        }
    }

    /// `ρ ↦ e^K ρ e^{K†}`, failing if the result leaks into the truncation edge.
    pub fn apply_unitary(&self, gen: &Generator) -> Result<Self> {
        if gen.max_mode() > self.n_modes() {
            return Err(Error::ModeIndex {
                index: gen.max_mode() - 1,
                n_modes: self.n_modes(),
            });
        }
        let dim = self.dim();
        let mut rho = self.rho.clone();
        for (idx, u) in block_unitary(&self.space, gen) {
            let m = idx.len();
            let mut rows = DMatrix::zeros(m, dim);
            for (a, &i) in idx.iter().enumerate() {
                rows.row_mut(a).copy_from(&rho.row(i));
            }
            let rows = &u * rows;
            for (a, &i) in idx.iter().enumerate() {
                rho.row_mut(i).copy_from(&rows.row(a));
            }
            let mut cols = DMatrix::zeros(dim, m);
            for (a, &i) in idx.iter().enumerate() {
                cols.column_mut(a).copy_from(&rho.column(i));
            }
            let cols = cols * u.adjoint();
            for (a, &i) in idx.iter().enumerate() {
                rho.column_mut(i).copy_from(&cols.column(a));
            }
        }
        Self {
            space: Arc::clone(&self.space),
            rho,
            tail_tol: self.tail_tol,
        }
        .check_tail()
    }

    pub fn apply_two_mode_squeezer(&self, gain: f64) -> Result<Self> {
        self.apply_unitary(&Generator::new().two_mode_squeezer(gain))
    }

    pub fn apply_single_mode_squeezer(&self, mode: usize, gain: f64) -> Result<Self> {
        self.check_mode(mode)?;
        self.apply_unitary(&Generator::new().squeezer(mode, gain, 0.0))
    }

    /// Real displacement along x, matching [`crate::GaussianState::displace`].
    pub fn apply_displacement(&self, mode: usize, alpha: f64) -> Result<Self> {
        self.check_mode(mode)?;
        self.apply_unitary(&Generator::new().displacement(mode, Complex64::new(alpha, 0.0)))
    }

    pub fn apply_beamsplitter(&self, theta: f64, phase: f64) -> Result<Self> {
        self.apply_unitary(&Generator::new().beamsplitter(theta, phase))
    }

    /// Pure-loss channel of transmissivity `eta` on `mode`, in operator-sum form
    /// `E_k = Σ_n √(C(n,k) η^{n−k} (1−η)^k) |n−k⟩⟨n|`.
    pub fn apply_loss(&self, mode: usize, eta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        check_unit_interval("eta", eta)?;
        if eta == 1.0 {
            return Ok(self.clone());
        }
        let cutoff = self.space.cutoff;
        let mut coeff = vec![vec![0.0; cutoff + 1]; cutoff + 1];
        for (n, row) in coeff.iter_mut().enumerate() {
            for (k, c) in row.iter_mut().enumerate().take(n + 1) {
                let ln = statrs::function::factorial::ln_binomial(n as u64, k as u64)
                    + (n - k) as f64 * eta.ln()
                    + if k > 0 {
                        k as f64 * (1.0 - eta).ln()
                    } else {
                        0.0
                    };
                *c = (0.5 * ln).exp();
            }
        }
        let dim = self.dim();
        let space = &self.space;
        let lowered: Vec<Vec<usize>> = space
            .states
            .iter()
            .map(|n| {
                (0..=n[mode])
                    .map(|k| {
                        let mut t = *n;
                        t[mode] -= k;
                        space.index(t).expect("lowering stays inside the space")
                    })
                    .collect()
            })
            .collect();
        let mut out = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let nj = space.states[j][mode];
            for i in 0..dim {
                let v = self.rho[(i, j)];
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let ni = space.states[i][mode];
                for k in 0..=ni.min(nj) {
                    out[(lowered[i][k], lowered[j][k])] += v * (coeff[ni][k] * coeff[nj][k]);
                }
            }
        }
        Ok(Self {
            space: Arc::clone(&self.space),
            rho: out,
            tail_tol: self.tail_tol,
        })
    }

    /// Photon-number distribution of `mode`.
    pub fn photon_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let mut p = vec![0.0; self.space.cutoff + 1];
        for (i, n) in self.space.states.iter().enumerate() {
            p[n[mode]] += self.rho[(i, i)].re;
        }
        Ok(p)
    }

    /// Number moments from the diagonal; for one mode both slots hold the same observable.
    pub fn photon_moments(&self) -> PhotonStats {
        let (mut m1, mut m2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, n) in self.space.states.iter().enumerate() {
            let p = self.rho[(i, i)].re;
            let (a, b) = (n[0] as f64, n[1] as f64);
            m1 += p * a;
            m2 += p * b;
            s11 += p * a * a;
            s22 += p * b * b;
            s12 += p * a * b;
        }
        if self.n_modes() == 1 {
            return PhotonStats::single(m1, s11 - m1 * m1);
        }
        PhotonStats {
            mean1: m1,
            mean2: m2,
            var1: s11 - m1 * m1,
            var2: s22 - m2 * m2,
            cov12: s12 - m1 * m2,
        }
    }

    /// Hermiticity, eigenvalue floor and trace window.
    pub fn check_valid(&self, tol: &Tolerances) -> Result<()> {
        let herm = (&self.rho - self.rho.adjoint()).camax();
        if herm > tol.fock_hermiticity {
            return Err(Error::NonPhysicalState(format!(
                "density matrix not Hermitian: {herm:e}"
            )));
        }
        let min_eig = self.rho.symmetric_eigenvalues().min();
        if min_eig < -tol.fock_positivity {
            return Err(Error::NonPhysicalState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        let trace = self.trace();
        if trace < 1.0 - self.tail_tol || trace > 1.0 + tol.fock_hermiticity {
            return Err(Error::NonPhysicalState(format!(
                "trace {trace} outside budget"
            )));
        }
        Ok(())
    }
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(a: &FockState, b: &FockState) -> Result<f64> {
    if a.space != b.space {
        return Err(Error::InvalidParameter {
            name: "cutoff",
            value: b.cutoff() as f64,
            reason: "states live on different truncated spaces",
        });
    }
    let diff = &a.rho - &b.rho;
    Ok(0.5
        * diff
            .symmetric_eigenvalues()
            .iter()
            .map(|v| v.abs())
            .sum::<f64>())
}

/// Trace distance between two amplifier circuits acting on an object-like test
/// state (two-mode squeezed vacuum, `r = 0.3`, one arm at transmissivity 0.9).
///
/// Circuit A is a pair of degenerate amplifiers of gain `gain` with common pump
/// phase (`phase_offset` is added on mode 2 as a control). Circuit B is a
/// non-degenerate amplifier sandwiched between 50/50 beamsplitters that map
/// the modes to `a± = (a₁ ± i a₂)/√2`.
pub fn amplifier_equivalence_distance(gain: f64, cutoff: usize, phase_offset: f64) -> Result<f64> {
    let input = FockState::vacuum(2, cutoff)?
        .apply_two_mode_squeezer(0.3)?
        .apply_loss(0, 0.9)?;
    let pump = -FRAC_PI_2;
    let a = input.apply_unitary(&Generator::new().squeezer(0, gain, pump).squeezer(
        1,
        gain,
        pump + phase_offset,
    ))?;
    let b = input
        .apply_beamsplitter(FRAC_PI_4, FRAC_PI_2)?
        .apply_two_mode_squeezer(gain)?
        .apply_beamsplitter(-FRAC_PI_4, FRAC_PI_2)?;
    trace_distance(&a, &b)
}

pub fn verify_amplifier_equivalence(gain: f64, cutoff: usize) -> Result<f64> {
    amplifier_equivalence_distance(gain, cutoff, 0.0)
}

const CUTOFF_TAIL: f64 = 1e-10;

/// Smallest `c` with `P(n > c) < 1e-10` for both a thermal and a squeezed-vacuum
/// marginal of mean `mean_photons`; doubled when an amplifier follows.
pub fn select_cutoff(mean_photons: f64, amplified: bool) -> usize {
    let m = mean_photons.max(0.0);
    let ratio = m / (m + 1.0);
    // Thermal: P(n > c) = ratio^{c+1}.
    let mut thermal = 0;
    while ratio.powi(thermal as i32 + 1) >= CUTOFF_TAIL {
        thermal += 1;
    }
    // Squeezed vacuum with tanh²g = ratio: P(2k) = C(2k,k)/4^k · ratio^k · √(1 − ratio).
    let mut p = (1.0 - ratio).sqrt();
    let mut mass = p;
    let mut k = 0usize;
    while 1.0 - mass >= CUTOFF_TAIL && k < 100_000 {
        k += 1;
        p *= ratio * (2 * k - 1) as f64 / (2 * k) as f64;
        mass += p;
    }
    let base = thermal.max(2 * k).max(2);
    if amplified {
        2 * base
    } else {
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{GaussianChannel, GaussianState};
    use approx::assert_relative_eq;

    #[test]
    fn space_enumeration() {
        let s = FockSpace::new(2, 3).unwrap();
        assert_eq!(s.dim(), 10);
        for (i, &n) in s.states.iter().enumerate() {
            assert_eq!(s.index(n), Some(i));
        }
        assert_eq!(s.index([2, 2]), None);
        assert_eq!(FockSpace::new(1, 5).unwrap().dim(), 6);
        assert!(FockSpace::new(3, 5).is_err());
    }

    #[test]
    fn zero_gain_gates_are_identity() {
        let st = FockState::number_state(2, 8, &[1, 2]).unwrap();
        for out in [
            st.apply_two_mode_squeezer(0.0).unwrap(),
            st.apply_single_mode_squeezer(1, 0.0).unwrap(),
            st.apply_loss(0, 1.0).unwrap(),
            st.apply_beamsplitter(0.0, 0.3).unwrap(),
        ] {
            assert!(trace_distance(&st, &out).unwrap() < 1e-15);
        }
    }

    #[test]
    fn two_mode_squeezed_vacuum_distribution() {
        let r = 0.4;
        let st = FockState::vacuum(2, 40)
            .unwrap()
            .apply_two_mode_squeezer(r)
            .unwrap();
        let t2 = r.tanh().powi(2);
        for (i, n) in st.space.states.iter().enumerate() {
            let p = st.rho[(i, i)].re;
            if n[0] == n[1] {
                let expect = t2.powi(n[0] as i32) / r.cosh().powi(2);
                assert!((p - expect).abs() < 1e-12, "{n:?}: {p} vs {expect}");
            } else {
                assert!(p.abs() < 1e-15);
            }
        }
        st.check_valid(&Tolerances::DEFAULT).unwrap();
    }

    #[test]
    fn squeezed_vacuum_mean() {
        let st = FockState::vacuum(1, 40)
            .unwrap()
            .apply_single_mode_squeezer(0, 0.3)
            .unwrap();
        let m = st.photon_moments();
        assert!((m.mean1 - 0.3f64.sinh().powi(2)).abs() < 1e-8);
    }

    #[test]
    fn loss_thins_fock_states_binomially() {
        let eta: f64 = 0.7;
        let st = FockState::number_state(1, 12, &[6])
            .unwrap()
            .apply_loss(0, eta)
            .unwrap();
        let p = st.photon_distribution(0).unwrap();
        let binom = |k: u64| {
            (statrs::function::factorial::ln_binomial(6, k)).exp()
                * eta.powi(k as i32)
                * (1.0 - eta).powi(6 - k as i32)
        };
        assert!(p.len() > 6);
        for (k, &pk) in p.iter().enumerate().take(7) {
            assert!((pk - binom(k as u64)).abs() < 1e-14);
        }
        assert!((st.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_violation_is_reported() {
        let err = FockState::vacuum(2, 6)
            .unwrap()
            .apply_two_mode_squeezer(1.0)
            .unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { cutoff: 6, .. }));
    }

    #[test]
    fn twin_moments_match_covariance_engine() {
        let (r, eta) = (0.4, 0.8);
        let fock = FockState::vacuum(2, 40)
            .unwrap()
            .apply_two_mode_squeezer(r)
            .unwrap()
            .apply_loss(0, eta)
            .unwrap()
            .photon_moments();
        let gauss = GaussianState::vacuum(2)
            .unwrap()
            .apply(&GaussianChannel::two_mode_squeezer(r), &[0, 1])
            .unwrap()
            .apply(&GaussianChannel::loss(eta).unwrap(), &[0])
            .unwrap()
            .photon_moments(0, 1)
            .unwrap();
        assert_relative_eq!(fock.mean1, gauss.mean1, max_relative = 1e-6);
        assert_relative_eq!(fock.var2, gauss.var2, max_relative = 1e-6);
        assert_relative_eq!(fock.cov12, gauss.cov12, max_relative = 1e-6);
    }

    #[test]
    fn displaced_squeezed_moments_match_covariance_engine() {
        let fock = FockState::vacuum(1, 60)
            .unwrap()
            .apply_single_mode_squeezer(0, -0.4)
            .unwrap()
            .apply_displacement(0, 1.5)
            .unwrap()
            .photon_moments();
        let gauss = GaussianState::vacuum(1)
            .unwrap()
            .apply(&GaussianChannel::single_mode_squeezer(-0.4), &[0])
            .unwrap()
            .displace(0, 1.5)
            .unwrap()
            .photon_moments(0, 0)
            .unwrap();
        assert_relative_eq!(fock.mean1, gauss.mean1, max_relative = 1e-8);
        assert_relative_eq!(fock.var1, gauss.var1, max_relative = 1e-8);
    }

    #[test]
    fn beamsplitter_conserves_photons() {
        let st = FockState::number_state(2, 6, &[2, 1])
            .unwrap()
            .apply_beamsplitter(0.7, 0.4)
            .unwrap();
        let m = st.photon_moments();
        assert!((m.mean1 + m.mean2 - 3.0).abs() < 1e-12);
        assert_eq!(st.tail(), 0.0);
    }

    #[test]
    fn amplifier_identity_and_control() {
        assert!(verify_amplifier_equivalence(0.0, 20).unwrap() < 1e-12);
        assert!(verify_amplifier_equivalence(0.3, 30).unwrap() < 1e-9);
        assert!(amplifier_equivalence_distance(0.3, 30, FRAC_PI_4).unwrap() > 1e-3);
    }

    #[test]
    fn cutoff_rule() {
        assert!(select_cutoff(0.0, false) >= 2);
        let c = select_cutoff(1.0, false);
        assert!(0.5f64.powi(c as i32 + 1) < 1e-10);
        assert_eq!(select_cutoff(1.0, true), 2 * c);
        assert!(select_cutoff(4.0, false) > c);
    }
}
