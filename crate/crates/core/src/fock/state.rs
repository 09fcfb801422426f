use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::fock::layout::{BasisLabel, HilbertLayout, Spin, DENSE_LIMIT};
use crate::fock::operator::LinearOperator;
use crate::linalg::{self, C64};

/// Allowed deviation of a state's norm or trace from one.
pub const NORM_TOL: f64 = 1e-9;

/// Hermiticity tolerance for density matrices.
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-12;

/// Population on the top two Fock levels above which truncation is reported.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

/// Operations shared by pure and mixed states.
pub trait QuantumState {
    fn layout(&self) -> &HilbertLayout;

    /// Diagonal of the state in the joint basis.
    fn populations(&self) -> Vec<f64>;

    /// `<A>` for any operator on the same layout.
    fn expectation<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<C64>;

    /// `<A^2>`.
    fn second_moment<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<C64>;

    /// Marginal Fock distribution of one mode.
    fn mode_populations(&self, mode: usize) -> Result<Vec<f64>> {
        let layout = self.layout();
        layout.check_mode(mode)?;
        let n = layout.cutoff(mode) + 1;
        let inner: usize = layout.cutoffs()[mode + 1..].iter().map(|c| c + 1).product();
        let mut out = vec![0.0; n];
        for (i, p) in self.populations().into_iter().enumerate() {
            out[(i / inner) % n] += p;
        }
        Ok(out)
    }

    /// Joint motional Fock distribution, spins summed out.
    fn motional_populations(&self) -> Vec<f64> {
        let m = self.layout().motional_dim();
        let mut out = vec![0.0; m];
        for (i, p) in self.populations().into_iter().enumerate() {
            out[i % m] += p;
        }
        out
    }

    /// Population on levels `N-1` and `N` of every mode.
    fn edge_populations(&self) -> Vec<f64> {
        (0..self.layout().modes())
            .map(|k| {
                let p = self.mode_populations(k).expect("mode in range");
                p.iter().rev().take(2).sum()
            })
            .collect()
    }

    /// Logs and returns the worst mode if its edge population exceeds `limit`.
    fn truncation_warning(&self, limit: f64) -> Option<TruncationWarning> {
        let (mode, population) = self
            .edge_populations()
            .into_iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if population > limit {
            log::warn!(
                "mode {mode} holds {population:.3e} population on its top two Fock levels \
                 (cutoff {})",
                self.layout().cutoff(mode)
            );
            Some(TruncationWarning { mode, population })
        } else {
            None
        }
    }

    fn check_truncation(&self, limit: f64) -> Result<()> {
        match self.truncation_warning(limit) {
            Some(w) => Err(Error::Truncation {
                mode: w.mode,
                population: w.population,
                limit,
            }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationWarning {
    pub mode: usize,
    pub population: f64,
}

pub fn expectation<S: QuantumState, O: LinearOperator + ?Sized>(op: &O, state: &S) -> Result<C64> {
    state.expectation(op)
}

/// `<A^2> - <A>^2` for Hermitian `A`.
pub fn variance<S: QuantumState, O: LinearOperator + ?Sized>(op: &O, state: &S) -> Result<f64> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: f64::NAN,
        });
    }
    let mean = state.expectation(op)?.re;
    Ok(state.second_moment(op)?.re - mean * mean)
}

/// Normalized pure state on a [`HilbertLayout`].
#[derive(Clone, Debug)]
pub struct StateVector {
    layout: HilbertLayout,
    amps: Vec<C64>,
}

impl StateVector {
    /// Requires `|amps| = 1` within [`NORM_TOL`].
    pub fn new(layout: HilbertLayout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: amps.len(),
            });
        }
        let n = linalg::norm(&amps);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::Numerical(format!("state norm {n} differs from one")));
        }
        Ok(Self { layout, amps })
    }

    pub fn normalized(layout: HilbertLayout, mut amps: Vec<C64>) -> Result<Self> {
        let n = linalg::norm(&amps);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Numerical("cannot normalize a zero vector".into()));
        }
        amps.iter_mut().for_each(|z| *z /= n);
        Self::new(layout, amps)
    }

    pub fn basis(layout: HilbertLayout, label: &BasisLabel) -> Result<Self> {
        let idx = layout.index(label)?;
        let mut amps = vec![linalg::ZERO; layout.dim()];
        amps[idx] = linalg::ONE;
        Ok(Self { layout, amps })
    }

    /// All spins down and all modes in the given occupations.
    pub fn fock(layout: HilbertLayout, occupations: &[usize]) -> Result<Self> {
        let label = BasisLabel {
            spins: vec![Spin::Down; layout.spins()],
            occupations: occupations.to_vec(),
        };
        Self::basis(layout, &label)
    }

    pub fn vacuum(layout: HilbertLayout) -> Self {
        let mut amps = vec![linalg::ZERO; layout.dim()];
        amps[0] = linalg::ONE;
        Self { layout, amps }
    }

    /// `spin ⊗ motion` where `spin` has `2^spins` amplitudes.
    pub fn product(spin: &[C64], motion: &StateVector) -> Result<Self> {
        if motion.layout.spins() != 0 {
            return Err(Error::InvalidArgument(
                "motional factor must have no spins".into(),
            ));
        }
        let spins = spin.len().trailing_zeros() as usize;
        if spin.len() != 1 << spins {
            return Err(Error::InvalidArgument(
                "spin amplitudes must have length 2^spins".into(),
            ));
        }
        let layout = motion.layout.with_spins(spins)?;
        let amps = spin
            .iter()
            .flat_map(|s| motion.amps.iter().map(move |m| s * m))
            .collect();
        Self::normalized(layout, amps)
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Result<C64> {
        Ok(self.amps[self.layout.index(label)?])
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.layout.same_shape(&other.layout)?;
        Ok(linalg::inner(&self.amps, &other.amps))
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        DensityOperator::pure(self)
    }

    /// Motional state when the spins factor out as `|down...down>`.
    pub fn motional_part(&self) -> Result<Self> {
        let m = self.layout.motional_dim();
        let tail: f64 = self.amps[m..].iter().map(|z| z.norm_sqr()).sum();
        if tail > NORM_TOL {
            return Err(Error::SpinPreparation(
                "spins are not in the all-down state".into(),
            ));
        }
        Self::normalized(self.layout.motional(), self.amps[..m].to_vec())
    }

    fn check_layout(&self, layout: &HilbertLayout) -> Result<()> {
        self.layout.same_shape(layout)
    }
}

impl QuantumState for StateVector {
    fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    fn expectation<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<C64> {
        self.check_layout(op.layout())?;
        Ok(linalg::inner(&self.amps, &op.apply(&self.amps)))
    }

    fn second_moment<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<C64> {
        self.check_layout(op.layout())?;
        let av = op.apply(&self.amps);
        if op.is_hermitian() {
            Ok(linalg::real(linalg::norm(&av).powi(2)))
        } else {
            Ok(linalg::inner(&self.amps, &op.apply(&av)))
        }
    }
}

/// Mixed state as a dense Hermitian matrix.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    layout: HilbertLayout,
    mat: Mat<C64>,
}

impl DensityOperator {
    /// Checks Hermiticity and unit trace. Positivity needs an
    /// eigendecomposition and is checked separately by [`Self::validate`].
    pub fn new(layout: HilbertLayout, mat: Mat<C64>) -> Result<Self> {
        let d = layout.dim();
        if d > DENSE_LIMIT {
            return Err(Error::DenseTooLarge {
                dim: d,
                limit: DENSE_LIMIT,
            });
        }
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: mat.nrows(),
            });
        }
        let dev = linalg::hermiticity_deviation(mat.as_ref());
        if dev > DENSITY_HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = linalg::trace(mat.as_ref());
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::Numerical(format!("density trace {tr} differs from one")));
        }
        let mut mat = mat;
        linalg::symmetrize(&mut mat);
        Ok(Self { layout, mat })
    }

    /// Symmetrizes round-off and renormalizes the trace, then validates.
    /// For results of trace-preserving maps only.
    pub(crate) fn from_evolved(layout: HilbertLayout, mut mat: Mat<C64>) -> Result<Self> {
        let dev = linalg::hermiticity_deviation(mat.as_ref());
        let scale = linalg::max_abs(mat.as_ref()).max(1.0);
        if dev > 1e-9 * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        linalg::symmetrize(&mut mat);
        Self::new(layout, mat)
    }

    pub fn pure(state: &StateVector) -> Result<Self> {
        let d = state.layout.dim();
        if d > DENSE_LIMIT {
            return Err(Error::DenseTooLarge {
                dim: d,
                limit: DENSE_LIMIT,
            });
        }
        let a = &state.amps;
        let mat = Mat::from_fn(d, d, |i, j| a[i] * a[j].conj());
        Self::new(state.layout.clone(), mat)
    }

    /// Diagonal density matrix from joint-basis probabilities.
    pub fn diagonal(layout: HilbertLayout, probabilities: &[f64]) -> Result<Self> {
        if probabilities.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: probabilities.len(),
            });
        }
        if probabilities.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidArgument("negative probability".into()));
        }
        let d = layout.dim();
        let mut mat = Mat::zeros(d, d);
        for (i, &p) in probabilities.iter().enumerate() {
            mat[(i, i)] = linalg::real(p);
        }
        Self::new(layout, mat)
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(self.mat.as_ref()).re
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_of_product(self.mat.as_ref(), self.mat.as_ref()).re
    }

    /// `<psi|rho|psi>`.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> Result<f64> {
        self.layout.same_shape(&psi.layout)?;
        let rho_psi = linalg::matvec(self.mat.as_ref(), &psi.amps);
        Ok(linalg::inner(&psi.amps, &rho_psi).re)
    }

    /// `||rho - sigma||_1 / 2`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        self.layout.same_shape(&other.layout)?;
        let diff = &self.mat - &other.mat;
        Ok(0.5 * linalg::trace_norm_hermitian(diff.as_ref())?)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        linalg::min_eigenvalue_hermitian(self.mat.as_ref())
    }

    /// Full check including positivity to `-NORM_TOL`.
    pub fn validate(&self) -> Result<()> {
        let min = self.min_eigenvalue()?;
        if min < -NORM_TOL {
            return Err(Error::Numerical(format!(
                "density operator has eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// Traces out every spin. The spin-major ordering makes this a sum of
    /// diagonal blocks.
    pub fn partial_trace_spin(&self) -> Result<Self> {
        if self.layout.spins() == 0 {
            return Err(Error::NoSpin);
        }
        let m = self.layout.motional_dim();
        let blocks = self.layout.spin_dim();
        let mat = Mat::from_fn(m, m, |i, j| {
            (0..blocks).map(|s| self.mat[(s * m + i, s * m + j)]).sum()
        });
        Self::from_evolved(self.layout.motional(), mat)
    }

    /// `|down...down><down...down| ⊗ self` for a spinless state.
    pub fn with_spins_down(&self, spins: usize) -> Result<Self> {
        if self.layout.spins() != 0 {
            return Err(Error::InvalidArgument(
                "state already carries spins".into(),
            ));
        }
        let layout = self.layout.with_spins(spins)?;
        let d = layout.dim();
        let m = self.layout.dim();
        let mut mat = Mat::zeros(d, d);
        for j in 0..m {
            for i in 0..m {
                mat[(i, j)] = self.mat[(i, j)];
            }
        }
        Self::new(layout, mat)
    }

    /// Population of spin `spin` being down.
    pub fn spin_down_probability(&self, spin: usize) -> Result<f64> {
        self.layout.check_spin(spin)?;
        let pops = self.populations();
        Ok(pops
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let l = self.layout.labels(*i).expect("index in range");
                l.spins[spin] == Spin::Down
            })
            .map(|(_, p)| p)
            .sum())
    }
}

impl QuantumState for DensityOperator {
    fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    fn populations(&self) -> Vec<f64> {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)].re).collect()
    }

    fn expectation<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<C64> {
        self.layout.same_shape(op.layout())?;
        let a_rho = op.apply_matrix(self.mat.as_ref());
        Ok(linalg::trace(a_rho.as_ref()))
    }

    fn second_moment<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<C64> {
        self.layout.same_shape(op.layout())?;
        let a_rho = op.apply_matrix(self.mat.as_ref());
        let aa_rho = op.apply_matrix(a_rho.as_ref());
        Ok(linalg::trace(aa_rho.as_ref()))
    }
}

/// Product of geometric distributions with mean `nbar` in every mode,
/// renormalized on the truncated space, spins down.
pub fn thermal_state(layout: &HilbertLayout, nbar: f64) -> Result<DensityOperator> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidArgument(format!("nbar must be >= 0, got {nbar}")));
    }
    let ratio = nbar / (1.0 + nbar);
    let mut per_mode = Vec::with_capacity(layout.modes());
    for &n in layout.cutoffs() {
        let tail = ratio.powi(n as i32 + 1);
        if tail >= 1e-6 {
            let required = (1e-6f64.ln() / ratio.ln()).ceil() as usize;
            return Err(Error::CutoffTooSmall {
                cutoff: n,
                required,
                what: format!("thermal state with nbar = {nbar}"),
            });
        }
        let p: Vec<f64> = (0..=n).map(|k| ratio.powi(k as i32) / (1.0 + nbar)).collect();
        let total: f64 = p.iter().sum();
        per_mode.push(p.into_iter().map(|x| x / total).collect::<Vec<_>>());
    }
    let m = layout.motional_dim();
    let motional = layout.motional();
    let mut probs = vec![0.0; layout.dim()];
    for (i, slot) in probs.iter_mut().take(m).enumerate() {
        let occ = motional.occupations(i);
        *slot = occ.iter().zip(&per_mode).map(|(&n, p)| p[n]).product();
    }
    DensityOperator::diagonal(layout.clone(), &probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_single_mode_values() {
        let layout = HilbertLayout::new(1, 15, 0).unwrap();
        let rho = thermal_state(&layout, 0.2).unwrap();
        let p = rho.populations();
        assert!((p[0] - 0.833_333).abs() < 1e-5);
        assert!((p[1] - 0.138_889).abs() < 1e-5);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_rejects_short_cutoff() {
        let layout = HilbertLayout::new(1, 3, 0).unwrap();
        assert!(matches!(
            thermal_state(&layout, 0.2),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn zero_temperature_is_ground_state() {
        let layout = HilbertLayout::new(2, 3, 1).unwrap();
        let rho = thermal_state(&layout, 0.0).unwrap();
        assert_eq!(rho.matrix()[(0, 0)], linalg::ONE);
        assert!((rho.purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_like_state() {
        let layout = HilbertLayout::new(1, 1, 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::new(
            layout,
            vec![linalg::real(s), linalg::ZERO, linalg::ZERO, linalg::real(s)],
        )
        .unwrap();
        let rho = psi.to_density().unwrap().partial_trace_spin().unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((rho.matrix()[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(rho.matrix()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn partial_trace_requires_spin() {
        let layout = HilbertLayout::new(1, 2, 0).unwrap();
        let rho = thermal_state(&layout, 0.0).unwrap();
        assert_eq!(rho.partial_trace_spin().unwrap_err(), Error::NoSpin);
    }

    #[test]
    fn rejects_unnormalized_state() {
        let layout = HilbertLayout::new(1, 1, 0).unwrap();
        assert!(StateVector::new(layout, vec![linalg::ONE, linalg::ONE]).is_err());
    }
}
