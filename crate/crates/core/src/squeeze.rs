//! Two- and three-mode squeeze operators, squeezed vacua, Bogoliubov
//! operators and the spin-motion Hamiltonians built from them.
//!
//! For `xi = r e^{i phi}` the squeeze operator is
//! `S = exp(sum_{i<k} xi a_i a_k - xi* a_i^dag a_k^dag)` over the
//! participating modes. With the pair adjacency matrix `J`,
//! `S a_j S^dag = sum_i cosh(rJ)_{ji} a_i + e^{-i phi} sinh(rJ)_{ji} a_i^dag`,
//! which reduces to `a_1 cosh r + a_2^dag sinh r` for two modes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    expm_action, pauli, KronOperator, LinearOperator, OperatorMatrix, Propagator, StateVector,
};
use crate::fock::HilbertLayout;
use crate::linalg::{self, C64};

/// Tail mass beyond the cutoff tolerated by a truncation-safe spec.
pub const TAIL_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationPolicy {
    /// Reject specs whose tail exceeds [`TAIL_LIMIT`].
    Error,
    /// Log a warning and continue.
    Warn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSpec {
    pub r: f64,
    pub phi: f64,
    pub modes: Vec<usize>,
    pub policy: TruncationPolicy,
}

impl SqueezeSpec {
    pub fn two_mode(r: f64) -> Self {
        Self {
            r,
            phi: 0.0,
            modes: vec![0, 1],
            policy: TruncationPolicy::Error,
        }
    }

    pub fn three_mode(r: f64) -> Self {
        Self {
            r,
            phi: 0.0,
            modes: vec![0, 1, 2],
            policy: TruncationPolicy::Error,
        }
    }

    pub fn with_phase(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_policy(mut self, policy: TruncationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn xi(&self) -> C64 {
        C64::from_polar(self.r, self.phi)
    }

    pub fn coefficients(&self) -> BogoliubovCoefficients {
        BogoliubovCoefficients::new(self.modes.len(), self.r)
    }

    /// Mean occupation of each participating mode in the squeezed vacuum.
    pub fn mode_occupation(&self) -> f64 {
        let c = self.coefficients();
        (0..self.modes.len())
            .map(|j| c.g[j].iter().map(|g| g * g).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Population beyond occupation `cutoff` in one participating mode.
    /// Each marginal is thermal, so the tail is `(n/(1+n))^(N+1)`.
    pub fn tail(&self, cutoff: usize) -> f64 {
        let n = self.mode_occupation();
        (n / (1.0 + n)).powi(cutoff as i32 + 1)
    }

    /// Smallest cutoff whose tail is below [`TAIL_LIMIT`].
    pub fn min_cutoff(&self) -> usize {
        cutoff_for_tail(self.mode_occupation(), TAIL_LIMIT)
    }

    /// Validates the spec against a layout and applies the truncation policy.
    pub fn check(&self, layout: &HilbertLayout) -> Result<()> {
        if !(self.r >= 0.0 && self.r.is_finite()) || !self.phi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "squeezing parameter must be finite and >= 0, got r = {}",
                self.r
            )));
        }
        if !(2..=3).contains(&self.modes.len()) {
            return Err(Error::InvalidArgument(
                "squeezing involves two or three modes".into(),
            ));
        }
        for (i, &m) in self.modes.iter().enumerate() {
            layout.check_mode(m)?;
            if self.modes[..i].contains(&m) {
                return Err(Error::InvalidArgument(format!("mode {m} listed twice")));
            }
        }
        let required = self.min_cutoff();
        for &m in &self.modes {
            let n = layout.cutoff(m);
            if n < required {
                match self.policy {
                    TruncationPolicy::Error => {
                        return Err(Error::CutoffTooSmall {
                            cutoff: n,
                            required,
                            what: format!("squeezing with r = {}", self.r),
                        })
                    }
                    TruncationPolicy::Warn => log::warn!(
                        "cutoff {n} of mode {m} leaves {:.2e} tail population at r = {}; \
                         {required} required",
                        self.tail(n),
                        self.r
                    ),
                }
            }
        }
        Ok(())
    }
}

fn cutoff_for_tail(nbar: f64, limit: f64) -> usize {
    if nbar <= 0.0 {
        return 0;
    }
    let ratio = nbar / (1.0 + nbar);
    // Smallest N with ratio^(N+1) < limit.
    let exact = limit.ln() / ratio.ln() - 1.0;
    let mut n = exact.floor().max(0.0) as usize;
    while ratio.powi(n as i32 + 1) >= limit {
        n += 1;
    }
    n
}

/// Smallest two-mode cutoff `N` with `tanh^(2(N+1)) r < 1e-6`.
pub fn min_cutoff(r: f64) -> usize {
    SqueezeSpec::two_mode(r).min_cutoff()
}

/// Largest two-mode `r` that is truncation-safe at `cutoff`.
pub fn r_max(cutoff: usize) -> f64 {
    TAIL_LIMIT.powf(0.5 / (cutoff as f64 + 1.0)).atanh()
}

/// `f_i^j`, `g_i^j` of `K_j = sum_i f_i^j a_i + g_i^j a_i^dag`, stored as
/// `f[j][i]`, `g[j][i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovCoefficients {
    pub r: f64,
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

impl BogoliubovCoefficients {
    /// `cosh(rJ)` and `sinh(rJ)` for the all-pairs adjacency `J` on `modes`
    /// modes. `J` has eigenvalue `modes - 1` on the uniform vector and `-1`
    /// on its complement.
    pub fn new(modes: usize, r: f64) -> Self {
        let m = modes as f64;
        let top = (m - 1.0) * r;
        let (ch_top, sh_top) = (top.cosh(), top.sinh());
        let (ch, sh) = (r.cosh(), -r.sinh());
        let f_diag = (ch_top + (m - 1.0) * ch) / m;
        let f_off = (ch_top - ch) / m;
        let g_diag = (sh_top + (m - 1.0) * sh) / m;
        let g_off = (sh_top - sh) / m;
        let table = |d: f64, o: f64| -> Vec<Vec<f64>> {
            (0..modes)
                .map(|j| (0..modes).map(|i| if i == j { d } else { o }).collect())
                .collect()
        };
        Self {
            r,
            f: table(f_diag, f_off),
            g: table(g_diag, g_off),
        }
    }

    pub fn two_mode(r: f64) -> Self {
        Self::new(2, r)
    }

    /// `f_jj = (2 cosh r + cosh 2r)/3`, `f_ij = (cosh 2r - cosh r)/3`,
    /// `g_jj = (sinh 2r - 2 sinh r)/3`, `g_ij = (sinh 2r + sinh r)/3`.
    pub fn three_mode(r: f64) -> Self {
        Self::new(3, r)
    }

    /// The three-mode table with `g_jj = (2 sinh r + sinh 2r)/3` and
    /// `g_ij = -(sinh r + sinh 2r)/3`. It violates the bosonic normalization
    /// and does not annihilate the three-mode squeezed vacuum; kept so the
    /// cross-check against the numerically transformed operators has a
    /// negative control.
    pub fn negative_control(r: f64) -> Self {
        let f_diag = (2.0 * r.cosh() + (2.0 * r).cosh()) / 3.0;
        let f_off = ((2.0 * r).cosh() - r.cosh()) / 3.0;
        let g_diag = (2.0 * r.sinh() + (2.0 * r).sinh()) / 3.0;
        let g_off = -(r.sinh() + (2.0 * r).sinh()) / 3.0;
        let table = |d: f64, o: f64| -> Vec<Vec<f64>> {
            (0..3)
                .map(|j| (0..3).map(|i| if i == j { d } else { o }).collect())
                .collect()
        };
        Self {
            r,
            f: table(f_diag, f_off),
            g: table(g_diag, g_off),
        }
    }

    pub fn modes(&self) -> usize {
        self.f.len()
    }

    /// `sum_i (f_i^j)^2 - (g_i^j)^2 - 1`.
    pub fn normalization_residual(&self, j: usize) -> f64 {
        self.f[j]
            .iter()
            .zip(&self.g[j])
            .map(|(f, g)| f * f - g * g)
            .sum::<f64>()
            - 1.0
    }

    /// `K_j` on `layout` with `modes[i]` carrying coefficient index `i`.
    pub fn operator(&self, layout: &HilbertLayout, modes: &[usize], j: usize, phi: f64) -> Result<KronOperator> {
        if modes.len() != self.modes() {
            return Err(Error::InvalidArgument(format!(
                "{} modes given for a {}-mode coefficient table",
                modes.len(),
                self.modes()
            )));
        }
        if j >= self.modes() {
            return Err(Error::ModeOutOfRange {
                index: j,
                modes: self.modes(),
            });
        }
        let phase = C64::cis(-phi);
        let mut k = KronOperator::zero(layout.clone());
        for (i, &mode) in modes.iter().enumerate() {
            let a = KronOperator::annihilation(layout, mode)?;
            k = &k + &(&a * self.f[j][i]);
            k = &k + &(&a.adjoint() * (phase * self.g[j][i]));
        }
        Ok(k)
    }
}

/// Anti-Hermitian generator `G` with `S = exp(G)`.
pub fn squeeze_generator(layout: &HilbertLayout, spec: &SqueezeSpec) -> Result<KronOperator> {
    let xi = spec.xi();
    let mut g = KronOperator::zero(layout.clone());
    for (n, &i) in spec.modes.iter().enumerate() {
        for &k in &spec.modes[n + 1..] {
            let pair = &KronOperator::annihilation(layout, i)? * &KronOperator::annihilation(layout, k)?;
            g = &g + &(&pair * xi);
            g = &g - &(&pair.adjoint() * xi.conj());
        }
    }
    Ok(g)
}

/// Dense `S` for any two- or three-mode spec. `exp(G)` is computed as
/// `exp(-i H t)` with the Hermitian `H = iG` and `t = 1`.
pub fn squeeze_op(layout: &HilbertLayout, spec: &SqueezeSpec) -> Result<OperatorMatrix> {
    spec.check(layout)?;
    let h = (&squeeze_generator(layout, spec)? * linalg::I).to_operator()?;
    Ok(Propagator::new(&h)?.unitary(1.0))
}

pub fn two_mode_squeeze_op(layout: &HilbertLayout, spec: &SqueezeSpec) -> Result<OperatorMatrix> {
    require_modes(spec, 2)?;
    squeeze_op(layout, spec)
}

pub fn three_mode_squeeze_op(layout: &HilbertLayout, r: f64) -> Result<OperatorMatrix> {
    squeeze_op(layout, &SqueezeSpec::three_mode(r))
}

fn require_modes(spec: &SqueezeSpec, n: usize) -> Result<()> {
    if spec.modes.len() != n {
        return Err(Error::InvalidArgument(format!(
            "expected a {n}-mode squeeze spec, got {} modes",
            spec.modes.len()
        )));
    }
    Ok(())
}

/// `S |0...0>` with spins down.
///
/// The exponential acts on a motional space whose participating modes are
/// padded until the squeezed tail is below double precision; the result is
/// then projected onto `layout` and renormalized. This is the exact state
/// restricted to the truncated space, rather than the exponential of the
/// truncated generator, whose edge rows are distorted.
pub fn squeezed_vacuum(layout: &HilbertLayout, spec: &SqueezeSpec) -> Result<StateVector> {
    spec.check(layout)?;
    let padded_cutoff = cutoff_for_tail(spec.mode_occupation(), 1e-17) + 2;
    let mut cutoffs = layout.cutoffs().to_vec();
    for &m in &spec.modes {
        cutoffs[m] = cutoffs[m].max(padded_cutoff);
    }
    let padded = HilbertLayout::with_cutoffs(cutoffs, 0)?;
    let generator = squeeze_generator(&padded, spec)?;
    let mut vac = vec![linalg::ZERO; padded.dim()];
    vac[0] = linalg::ONE;
    let big = expm_action(&generator, linalg::ONE, &vac);

    let motional = layout.motional();
    let mut amps = vec![linalg::ZERO; layout.dim()];
    for (i, slot) in amps.iter_mut().take(motional.dim()).enumerate() {
        let occ = motional.occupations(i);
        let idx = padded.index(&crate::fock::BasisLabel {
            spins: Vec::new(),
            occupations: occ,
        })?;
        *slot = big[idx];
    }
    StateVector::normalized(layout.clone(), amps)
}

pub fn tmss_state(layout: &HilbertLayout, spec: &SqueezeSpec) -> Result<StateVector> {
    require_modes(spec, 2)?;
    squeezed_vacuum(layout, spec)
}

pub fn three_mode_state(layout: &HilbertLayout, r: f64) -> Result<StateVector> {
    squeezed_vacuum(layout, &SqueezeSpec::three_mode(r))
}

/// `K` for participating mode `mode` of `spec`, in operator-action form.
pub fn bogoliubov_kron(layout: &HilbertLayout, spec: &SqueezeSpec, mode: usize) -> Result<KronOperator> {
    let j = spec
        .modes
        .iter()
        .position(|&m| m == mode)
        .ok_or_else(|| Error::InvalidArgument(format!("mode {mode} is not squeezed by the spec")))?;
    spec.coefficients().operator(layout, &spec.modes, j, spec.phi)
}

/// Two-mode `K_i = a_i cosh r + a_j^dag sinh r` on modes 0 and 1.
pub fn bogoliubov_op(layout: &HilbertLayout, mode_i: usize, r: f64) -> Result<OperatorMatrix> {
    let spec = SqueezeSpec::two_mode(r).with_policy(TruncationPolicy::Warn);
    spec.check(layout)?;
    bogoliubov_kron(layout, &spec, mode_i)?.to_operator()
}

pub fn three_mode_bogoliubov_kron(layout: &HilbertLayout, j: usize, r: f64) -> Result<KronOperator> {
    let spec = SqueezeSpec::three_mode(r);
    layout.check_mode(2)?;
    if j >= 3 {
        return Err(Error::ModeOutOfRange { index: j, modes: 3 });
    }
    bogoliubov_kron(layout, &spec, j)
}

pub fn three_mode_bogoliubov(layout: &HilbertLayout, j: usize, r: f64) -> Result<OperatorMatrix> {
    three_mode_bogoliubov_kron(layout, j, r)?.to_operator()
}

/// `omega (K sigma_plus + K^dag sigma_minus)` on spin 0.
pub fn coupling_kron(k: &KronOperator, omega: f64) -> Result<KronOperator> {
    let layout = k.layout();
    if layout.spins() == 0 {
        return Err(Error::NoSpin);
    }
    let sp = KronOperator::spin(layout, 0, &pauli::plus())?;
    let sm = KronOperator::spin(layout, 0, &pauli::minus())?;
    Ok(&(&(k * &sp) + &(&k.adjoint() * &sm)) * omega)
}

/// `omega (K sigma_minus + K^dag sigma_plus)` on spin 0.
pub fn analysis_kron(k: &KronOperator, omega: f64) -> Result<KronOperator> {
    let layout = k.layout();
    if layout.spins() == 0 {
        return Err(Error::NoSpin);
    }
    let sp = KronOperator::spin(layout, 0, &pauli::plus())?;
    let sm = KronOperator::spin(layout, 0, &pauli::minus())?;
    Ok(&(&(k * &sm) + &(&k.adjoint() * &sp)) * omega)
}

/// Two-mode engineered coupling `H_i` whose dark state is `|down> ⊗ TMSS(r)`.
pub fn coupling_hamiltonian(layout: &HilbertLayout, mode_i: usize, omega: f64, r: f64) -> Result<OperatorMatrix> {
    if layout.spins() == 0 {
        return Err(Error::NoSpin);
    }
    let spec = SqueezeSpec::two_mode(r).with_policy(TruncationPolicy::Warn);
    spec.check(layout)?;
    coupling_kron(&bogoliubov_kron(layout, &spec, mode_i)?, omega)?.to_operator()
}

/// Blue-sideband form of [`coupling_hamiltonian`] in the engineered basis.
pub fn analysis_hamiltonian(layout: &HilbertLayout, mode_i: usize, omega: f64, r: f64) -> Result<OperatorMatrix> {
    if layout.spins() == 0 {
        return Err(Error::NoSpin);
    }
    let spec = SqueezeSpec::two_mode(r).with_policy(TruncationPolicy::Warn);
    spec.check(layout)?;
    analysis_kron(&bogoliubov_kron(layout, &spec, mode_i)?, omega)?.to_operator()
}

/// Norm of `K psi` for every participating mode.
pub fn bogoliubov_residuals(state: &StateVector, spec: &SqueezeSpec) -> Result<Vec<f64>> {
    spec.modes
        .iter()
        .map(|&m| {
            let k = bogoliubov_kron(state.layout(), spec, m)?;
            Ok(linalg::norm(&k.apply(state.amplitudes())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::QuantumState;

    #[test]
    fn cutoff_formula() {
        assert_eq!(min_cutoff(0.79), 16);
        assert!(r_max(16) > 0.79 && r_max(15) < 0.79);
        assert_eq!(min_cutoff(0.0), 0);
    }

    #[test]
    fn zero_squeezing_is_identity() {
        let layout = HilbertLayout::new(2, 4, 1).unwrap();
        let s = two_mode_squeeze_op(&layout, &SqueezeSpec::two_mode(0.0)).unwrap();
        let id = OperatorMatrix::identity(layout).unwrap();
        assert!(linalg::max_abs_diff(s.matrix(), id.matrix()) < 1e-14);
    }

    #[test]
    fn rejects_unsafe_cutoff() {
        let layout = HilbertLayout::new(2, 8, 0).unwrap();
        let err = tmss_state(&layout, &SqueezeSpec::two_mode(0.79)).unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { required: 16, .. }));
        let warned = SqueezeSpec::two_mode(0.79).with_policy(TruncationPolicy::Warn);
        assert!(tmss_state(&layout, &warned).is_ok());
    }

    #[test]
    fn coefficient_tables() {
        let c = BogoliubovCoefficients::three_mode(0.5);
        assert!((c.f[0][0] - 1.2662).abs() < 1e-4);
        assert!((c.g[0][0] - 0.0443).abs() < 1e-4);
        for r in [0.1, 0.5, 1.0] {
            let c = BogoliubovCoefficients::three_mode(r);
            for j in 0..3 {
                assert!(c.normalization_residual(j).abs() < 1e-12);
            }
        }
        let control = BogoliubovCoefficients::negative_control(0.5);
        assert!((control.g[0][0] - 0.7391).abs() < 1e-4);
        assert!(control.normalization_residual(0).abs() > 0.1);
        let two = BogoliubovCoefficients::two_mode(0.3);
        assert!((two.f[0][0] - 0.3f64.cosh()).abs() < 1e-15 && two.f[0][1].abs() < 1e-15);
        assert!((two.g[0][1] - 0.3f64.sinh()).abs() < 1e-15 && two.g[0][0].abs() < 1e-15);
    }

    #[test]
    fn tmss_is_annihilated_by_k() {
        let layout = HilbertLayout::new(2, 25, 0).unwrap();
        let spec = SqueezeSpec::two_mode(0.79);
        let psi = tmss_state(&layout, &spec).unwrap();
        for res in bogoliubov_residuals(&psi, &spec).unwrap() {
            assert!(res <= 1e-6, "{res}");
        }
    }

    #[test]
    fn coupling_at_zero_squeezing_is_red_sideband() {
        let layout = HilbertLayout::new(2, 3, 1).unwrap();
        let h = coupling_hamiltonian(&layout, 0, 2.0, 0.0).unwrap();
        assert!(h.is_hermitian());
        let psi = StateVector::fock(layout.clone(), &[1, 0]).unwrap();
        let out = h.apply(psi.amplitudes());
        let up00 = layout.motional_dim();
        assert!((out[up00] - linalg::real(2.0)).norm() < 1e-14);
        assert!((linalg::norm(&out) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tmss_populations_have_pair_structure() {
        // Renormalizing after truncation shifts populations by the tail mass,
        // tanh^62(0.79) ~ 1e-11 here.
        let layout = HilbertLayout::new(2, 30, 0).unwrap();
        let r: f64 = 0.79;
        let psi = tmss_state(&layout, &SqueezeSpec::two_mode(r)).unwrap();
        let p = psi.populations();
        for n in 0..=30 {
            for m in 0..=30 {
                let expect = if n == m {
                    (1.0 / r.cosh()).powi(2) * r.tanh().powi(2 * n as i32)
                } else {
                    0.0
                };
                assert!((p[n * 31 + m] - expect).abs() < 1e-8);
            }
        }
    }
}
