//! Gaussian states and channels in the quadrature (covariance-matrix) picture.
//!
//! Conventions: ħ = 1, quadratures ordered `(x₀, p₀, x₁, p₁, …)`, vacuum
//! covariance `I/2`, and `a = (x + i p)/√2` so a coherent amplitude `α` sits at
//! `x = √2·α`. With these, `⟨n⟩ = (|d|² + tr σ − 1)/2` for a single mode.
//!
//! Channels act as `d ↦ X d + shift`, `σ ↦ X σ Xᵀ + Y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_unit_interval, Error, Result};
use crate::tolerances::{working_precision, Tolerances};

/// The symplectic form `⊕ [[0, 1], [-1, 0]]` over `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

fn min_eigenvalue(sym: DMatrix<f64>) -> f64 {
    sym.symmetric_eigenvalues().min()
}

/// Smallest eigenvalue of the Hermitian matrix `re + i·im`, through its real embedding.
fn min_hermitian_eigenvalue(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let n = re.nrows();
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(re);
    big.view_mut((n, n), (n, n)).copy_from(re);
    big.view_mut((0, n), (n, n)).copy_from(&(-im));
    big.view_mut((n, 0), (n, n)).copy_from(im);
    min_eigenvalue(big)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) || cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::NonPhysicalState(format!(
                "mean of length {dim} does not match a {}x{} covariance over whole modes",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let state = Self { mean, cov };
        state.check_physical(&Tolerances::DEFAULT)?;
        Ok(state)
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter {
                name: "n_modes",
                value: 0.0,
                reason: "at least one mode is required",
            });
        }
        Ok(Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
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

    /// Displaces `mode` along x by a real amplitude, adding `alpha²` mean photons to a vacuum.
    pub fn displace(&self, mode: usize, alpha: f64) -> Result<Self> {
        self.check_mode(mode)?;
        check_finite("alpha", alpha)?;
        let mut out = self.clone();
        out.mean[2 * mode] += std::f64::consts::SQRT_2 * alpha;
        Ok(out)
    }

    /// Applies `channel` to the listed modes (in channel order), leaving the others untouched.
    pub fn apply(&self, channel: &GaussianChannel, modes: &[usize]) -> Result<Self> {
        if channel.n_modes_in() != channel.n_modes_out() {
            return Err(Error::InvalidChannel(
                "only mode-preserving channels can be embedded".into(),
            ));
        }
        if modes.len() != channel.n_modes_in() {
            return Err(Error::ArityMismatch {
                expected: channel.n_modes_in(),
                got: modes.len(),
            });
        }
        for (i, &m) in modes.iter().enumerate() {
            self.check_mode(m)?;
            if modes[..i].contains(&m) {
                return Err(Error::DuplicateMode(m));
            }
        }

        let dim = self.mean.len();
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mut x = DMatrix::identity(dim, dim);
        let mut y = DMatrix::zeros(dim, dim);
        let mut shift = DVector::zeros(dim);
        for (a, &ia) in idx.iter().enumerate() {
            shift[ia] = channel.shift[a];
            for (b, &ib) in idx.iter().enumerate() {
                x[(ia, ib)] = channel.x[(a, b)];
                y[(ia, ib)] = channel.y[(a, b)];
            }
        }

        let mean = &x * &self.mean + shift;
        let mut cov = &x * &self.cov * x.transpose() + y;
        // Restore exact symmetry lost to rounding.
        cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self { mean, cov })
    }

    /// Symplectic eigenvalues in ascending order (one per mode).
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let n = self.n_modes();
        let eig = self.cov.clone().symmetric_eigen();
        let sqrt_diag = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let root =
            &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_diag) * eig.eigenvectors.transpose();
        // root·Ω·root is antisymmetric with spectrum ±iν; i times it is Hermitian with spectrum ±ν.
        let anti = &root * symplectic_form(n) * &root;
        let zero = DMatrix::zeros(2 * n, 2 * n);
        let mut big = DMatrix::zeros(4 * n, 4 * n);
        big.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&zero);
        big.view_mut((0, 2 * n), (2 * n, 2 * n))
            .copy_from(&(-&anti));
        big.view_mut((2 * n, 0), (2 * n, 2 * n)).copy_from(&anti);
        let mut values: Vec<f64> = big
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .filter(|v| *v >= 0.0)
            .collect();
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // Each ν appears twice in the embedding; keep every other one.
        let mut nu: Vec<f64> = values.iter().step_by(2).take(n).copied().collect();
        nu.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nu
    }

    pub fn check_physical(&self, tol: &Tolerances) -> Result<()> {
        if self
            .mean
            .iter()
            .chain(self.cov.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonPhysicalState("non-finite entry".into()));
        }
        let asym = (&self.cov - self.cov.transpose()).amax();
        if asym > tol.symmetry.max(f64::EPSILON * self.cov.amax()) {
            return Err(Error::NonPhysicalState(format!(
                "covariance asymmetric by {asym:e}"
            )));
        }
        // σ + iΩ/2 ⪰ 0 is equivalent to every symplectic eigenvalue being at least 1/2,
        // and its smallest eigenvalue is well conditioned even for strongly squeezed states.
        let n = self.n_modes();
        let margin = min_hermitian_eigenvalue(&self.cov, &(symplectic_form(n) * 0.5));
        let slack = working_precision(tol.uncertainty, self.cov.amax());
        if margin < -slack {
            return Err(Error::NonPhysicalState(format!(
                "uncertainty relation violated: smallest eigenvalue of sigma + i*Omega/2 is {margin:e}"
            )));
        }
        Ok(())
    }

    fn block(&self, a: usize, b: usize) -> DMatrix<f64> {
        self.cov.view((2 * a, 2 * b), (2, 2)).into_owned()
    }

    fn mode_mean(&self, a: usize) -> DVector<f64> {
        self.mean.rows(2 * a, 2).into_owned()
    }

    fn mean_photons(&self, a: usize) -> f64 {
        let d = self.mode_mean(a);
        (d.norm_squared() + self.block(a, a).trace() - 1.0) / 2.0
    }

    fn photon_variance(&self, a: usize) -> f64 {
        let d = self.mode_mean(a);
        let s = self.block(a, a);
        s.norm_squared() / 2.0 - 0.25 + (d.transpose() * &s * &d)[0]
    }

    /// Exact photon-number statistics of modes `mode_a` and `mode_b`.
    ///
    /// Uses the Gaussian (Wick) moment formulas: for a mode with displacement `d`
    /// and covariance block `σ`, `Var n = ‖σ‖²/2 − 1/4 + dᵀσd`; for distinct modes
    /// `Cov(n_a, n_b) = ‖σ_ab‖²/2 + d_aᵀ σ_ab d_b`.
    pub fn photon_moments(&self, mode_a: usize, mode_b: usize) -> Result<PhotonStats> {
        self.check_mode(mode_a)?;
        self.check_mode(mode_b)?;
        self.check_physical(&Tolerances::DEFAULT)?;
        let var1 = self.photon_variance(mode_a);
        let var2 = self.photon_variance(mode_b);
        let cov12 = if mode_a == mode_b {
            var1
        } else {
            let s = self.block(mode_a, mode_b);
            let da = self.mode_mean(mode_a);
            let db = self.mode_mean(mode_b);
            s.norm_squared() / 2.0 + (da.transpose() * &s * &db)[0]
        };
        Ok(PhotonStats {
            mean1: self.mean_photons(mode_a),
            mean2: self.mean_photons(mode_b),
            var1,
            var2,
            cov12,
        })
    }

    /// Variance of `Σ_i u_i·v_i / 2` treating the linear quadrature combinations
    /// `u_i = l_uᵢ·q` and `v_i = l_vᵢ·q` as jointly Gaussian (Isserlis' theorem on
    /// the Wigner moments). Each pair `(u_i, v_i)` must commute; the result is then the
    /// variance of the symmetrically ordered observable.
    pub fn product_sum_variance(&self, factors: &[(DVector<f64>, DVector<f64>)]) -> Result<f64> {
        let dim = self.mean.len();
        if factors
            .iter()
            .any(|(u, v)| u.len() != dim || v.len() != dim)
        {
            return Err(Error::ArityMismatch {
                expected: dim,
                got: factors
                    .iter()
                    .map(|(u, _)| u.len())
                    .find(|&l| l != dim)
                    .unwrap_or(0),
            });
        }
        let rows: Vec<&DVector<f64>> = factors.iter().flat_map(|(u, v)| [u, v]).collect();
        let mut l = DMatrix::zeros(rows.len(), dim);
        for (i, r) in rows.iter().enumerate() {
            l.set_row(i, &r.transpose());
        }
        let c = &l * &self.cov * l.transpose();
        let m = &l * &self.mean;
        let cov_of_products = |a: usize, b: usize, x: usize, y: usize| {
            c[(a, x)] * c[(b, y)]
                + c[(a, y)] * c[(b, x)]
                + m[a] * m[x] * c[(b, y)]
                + m[a] * m[y] * c[(b, x)]
                + m[b] * m[x] * c[(a, y)]
                + m[b] * m[y] * c[(a, x)]
        };
        let mut var = 0.0;
        for i in 0..factors.len() {
            for j in 0..factors.len() {
                var += cov_of_products(2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            }
        }
        Ok(var / 4.0)
    }

    /// Variance of `n_a − k·n_b` for distinct modes.
    ///
    /// For `k > 0` the observable is written as `½Σ_q (q_a − √k·q_b)(q_a + √k·q_b) + const`
    /// over `q ∈ {x, p}`, see [`Self::product_sum_variance`].
    pub fn number_difference_variance(&self, mode_a: usize, mode_b: usize, k: f64) -> Result<f64> {
        self.check_mode(mode_a)?;
        self.check_mode(mode_b)?;
        if mode_a == mode_b {
            return Err(Error::DuplicateMode(mode_a));
        }
        check_finite("k", k)?;
        if k <= 0.0 {
            let s = self.photon_moments(mode_a, mode_b)?;
            return Ok(s.var1 + k * k * s.var2 - 2.0 * k * s.cov12);
        }
        self.check_physical(&Tolerances::DEFAULT)?;
        let s = k.sqrt();
        let dim = self.mean.len();
        let factors: Vec<_> = (0..2)
            .map(|q| {
                let mut u = DVector::zeros(dim);
                let mut v = DVector::zeros(dim);
                u[2 * mode_a + q] = 1.0;
                v[2 * mode_a + q] = 1.0;
                u[2 * mode_b + q] = -s;
                v[2 * mode_b + q] = s;
                (u, v)
            })
            .collect();
        Ok(self.product_sum_variance(&factors)? - number_ordering_offset(k))
    }
}

/// Symmetric ordering of `n_a − k·n_b` overcounts its variance by `(1 + k²)/4`.
pub fn number_ordering_offset(k: f64) -> f64 {
    (1.0 + k * k) / 4.0
}

/// Affine Gaussian channel `(X, Y, shift)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    shift: DVector<f64>,
}

impl GaussianChannel {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        let (rows, cols) = x.shape();
        if rows % 2 != 0 || cols % 2 != 0 || rows == 0 || cols == 0 {
            return Err(Error::InvalidChannel(format!(
                "X has odd shape {rows}x{cols}"
            )));
        }
        if y.shape() != (rows, rows) || shift.len() != rows {
            return Err(Error::InvalidChannel("Y or shift does not match X".into()));
        }
        if x.iter()
            .chain(y.iter())
            .chain(shift.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidChannel("non-finite entry".into()));
        }
        let channel = Self { x, y, shift };
        let tol = Tolerances::DEFAULT;
        if (&channel.y - channel.y.transpose()).amax() > tol.symmetry {
            return Err(Error::InvalidChannel("Y is not symmetric".into()));
        }
        let cp = channel.complete_positivity_margin();
        if cp < -working_precision(tol.complete_positivity, channel.x.norm_squared()) {
            return Err(Error::InvalidChannel(format!(
                "not completely positive (smallest eigenvalue {cp:e})"
            )));
        }
        Ok(channel)
    }

    pub fn identity(n_modes: usize) -> Self {
        let dim = 2 * n_modes;
        Self {
            x: DMatrix::identity(dim, dim),
            y: DMatrix::zeros(dim, dim),
            shift: DVector::zeros(dim),
        }
    }

    fn unitary(x: DMatrix<f64>) -> Self {
        let dim = x.nrows();
        Self {
            x,
            y: DMatrix::zeros(dim, dim),
            shift: DVector::zeros(dim),
        }
    }

    /// Degenerate parametric amplifier: `a ↦ a cosh g + a† sinh g`, stretching x by `e^g`.
    /// A negative gain squeezes x instead.
    pub fn single_mode_squeezer(gain: f64) -> Self {
        Self::unitary(DMatrix::from_diagonal(&DVector::from_vec(vec![
            gain.exp(),
            (-gain).exp(),
        ])))
    }

    /// Non-degenerate parametric amplifier: `a₁ ↦ a₁ cosh r + a₂† sinh r` and symmetrically for `a₂`.
    pub fn two_mode_squeezer(gain: f64) -> Self {
        let (c, s) = (gain.cosh(), gain.sinh());
        #[rustfmt::skip]
        let x = DMatrix::from_row_slice(4, 4, &[
            c,   0.0, s,   0.0,
            0.0, c,   0.0, -s,
            s,   0.0, c,   0.0,
            0.0, -s,  0.0, c,
        ]);
        Self::unitary(x)
    }

    /// Pure loss: a beamsplitter of power transmissivity `eta` against vacuum.
    pub fn loss(eta: f64) -> Result<Self> {
        check_unit_interval("eta", eta)?;
        Ok(Self {
            x: DMatrix::identity(2, 2) * eta.sqrt(),
            y: DMatrix::identity(2, 2) * ((1.0 - eta) / 2.0),
            shift: DVector::zeros(2),
        })
    }

    /// `a ↦ e^{iφ} a`.
    pub fn phase_shift(phase: f64) -> Self {
        let (c, s) = (phase.cos(), phase.sin());
        Self::unitary(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    /// Passive linear transformation `a_j ↦ Σ_k M_jk a_k` for a 2×2 unitary `M`.
    fn passive(m: [[(f64, f64); 2]; 2]) -> Self {
        let mut x = DMatrix::zeros(4, 4);
        for j in 0..2 {
            for k in 0..2 {
                let (re, im) = m[j][k];
                x[(2 * j, 2 * k)] = re;
                x[(2 * j, 2 * k + 1)] = -im;
                x[(2 * j + 1, 2 * k)] = im;
                x[(2 * j + 1, 2 * k + 1)] = re;
            }
        }
        Self::unitary(x)
    }

    /// Lossless beamsplitter `a₁ ↦ √τ a₁ + e^{iφ}√(1−τ) a₂`, `a₂ ↦ −e^{−iφ}√(1−τ) a₁ + √τ a₂`.
    ///
    /// With `τ = 1/2, φ = π/2` the outputs are `a₊ = (a₁ + i a₂)/√2` and `i·a₋`.
    pub fn beamsplitter(transmissivity: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::InvalidParameter {
                name: "transmissivity",
                value: transmissivity,
                reason: "must lie in [0, 1]",
            });
        }
        check_finite("phase", phase)?;
        let t = transmissivity.sqrt();
        let r = (1.0 - transmissivity).sqrt();
        let (c, s) = (phase.cos(), phase.sin());
        Ok(Self::passive([
            [(t, 0.0), (r * c, r * s)],
            [(-r * c, r * s), (t, 0.0)],
        ]))
    }

    /// The same physical operation with every quadrature axis rotated by `phase`:
    /// `R(φ) X R(−φ)` on each mode.
    pub fn rotated(&self, phase: f64) -> Self {
        let rot = |n: usize, p: f64| {
            let mut big = DMatrix::zeros(2 * n, 2 * n);
            let r = Self::phase_shift(p).x;
            for m in 0..n {
                big.view_mut((2 * m, 2 * m), (2, 2)).copy_from(&r);
            }
            big
        };
        let out = rot(self.n_modes_out(), phase);
        let inp = rot(self.n_modes_in(), -phase);
        Self {
            x: &out * &self.x * inp,
            y: &out * &self.y * out.transpose(),
            shift: &out * &self.shift,
        }
    }

    pub fn n_modes_in(&self) -> usize {
        self.x.ncols() / 2
    }

    pub fn n_modes_out(&self) -> usize {
        self.x.nrows() / 2
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    /// Largest entry of `X Ω Xᵀ − Ω`; zero for an exactly symplectic `X`.
    pub fn symplectic_defect(&self) -> f64 {
        if self.n_modes_in() != self.n_modes_out() {
            return f64::INFINITY;
        }
        let omega = symplectic_form(self.n_modes_in());
        (&self.x * &omega * self.x.transpose() - omega).amax()
    }

    /// Smallest eigenvalue of `Y + (i/2)Ω_out − (i/2) X Ω_in Xᵀ`; non-negative iff completely positive.
    pub fn complete_positivity_margin(&self) -> f64 {
        let omega_out = symplectic_form(self.n_modes_out());
        let omega_in = symplectic_form(self.n_modes_in());
        let im = (omega_out - &self.x * omega_in * self.x.transpose()) * 0.5;
        min_hermitian_eigenvalue(&self.y, &im)
    }
}

/// First and second moments of two photon-number observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonStats {
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
    pub cov12: f64,
}

impl PhotonStats {
    /// Statistics of a single observable, duplicated into both slots.
    pub fn single(mean: f64, var: f64) -> Self {
        Self {
            mean1: mean,
            mean2: mean,
            var1: var,
            var2: var,
            cov12: var,
        }
    }

    /// Variances non-negative and `cov12² ≤ var1·var2`, up to rounding at the scale of the moments.
    pub fn is_consistent(&self, tol: &Tolerances) -> bool {
        let scale = self.var1.abs().max(self.var2.abs()).max(1.0);
        let slack = working_precision(tol.cauchy_schwarz, scale * scale);
        let var_slack = working_precision(tol.cauchy_schwarz, scale);
        self.var1 >= -var_slack
            && self.var2 >= -var_slack
            && self.cov12 * self.cov12 <= self.var1 * self.var2 + slack
    }

    /// Moments seen through two independent detectors of efficiency `eta_d`.
    pub fn detected(&self, eta_d: f64) -> Result<Self> {
        detected_moments(self, eta_d)
    }

    /// Moments of a single observable (both slots the same mode) seen through one detector.
    pub fn detected_single(&self, eta_d: f64) -> Result<Self> {
        let d = detected_moments(self, eta_d)?;
        Ok(Self::single(d.mean1, d.var1))
    }
}

/// Statistics after independent binomial thinning of both observables.
///
/// `mean' = η·mean`, `var' = η²(var + ε²·mean)` with `ε² = (1−η)/η`, `cov' = η²·cov`.
pub fn detected_moments(stats: &PhotonStats, eta_d: f64) -> Result<PhotonStats> {
    check_unit_interval("eta_d", eta_d)?;
    let eps2 = (1.0 - eta_d) / eta_d;
    let e2 = eta_d * eta_d;
    Ok(PhotonStats {
        mean1: eta_d * stats.mean1,
        mean2: eta_d * stats.mean2,
        var1: e2 * (stats.var1 + eps2 * stats.mean1),
        var2: e2 * (stats.var2 + eps2 * stats.mean2),
        cov12: e2 * stats.cov12,
    })
}
