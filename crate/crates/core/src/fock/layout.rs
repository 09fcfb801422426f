use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on the joint dimension. Kronecker-structured paths can use
/// states this large; dense operators stop at [`DENSE_LIMIT`].
pub const DEFAULT_MAX_DIM: usize = 1 << 22;

/// Largest dimension for which a dense operator matrix may be built.
pub const DENSE_LIMIT: usize = 16384;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub fn bit(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Self {
        if bit == 0 {
            Spin::Down
        } else {
            Spin::Up
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub spins: Vec<Spin>,
    pub occupations: Vec<usize>,
}

/// Joint basis of `spins` two-level systems followed by bosonic modes.
///
/// Index order is spin-major: spin 0 is the most significant digit and the
/// last mode the least significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertLayout {
    cutoffs: Vec<usize>,
    spins: usize,
}

impl HilbertLayout {
    /// `modes` bosonic modes each holding occupations `0..=cutoff`.
    pub fn new(modes: usize, cutoff: usize, spins: usize) -> Result<Self> {
        Self::with_cutoffs(vec![cutoff; modes], spins)
    }

    pub fn with_cutoffs(cutoffs: Vec<usize>, spins: usize) -> Result<Self> {
        Self::with_budget(cutoffs, spins, DEFAULT_MAX_DIM)
    }

    pub fn with_budget(cutoffs: Vec<usize>, spins: usize, max_dim: usize) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidLayout("at least one mode is required".into()));
        }
        let mut dim: usize = 1;
        for _ in 0..spins {
            dim = dim
                .checked_mul(2)
                .ok_or_else(|| Error::InvalidLayout("dimension overflows".into()))?;
        }
        for &n in &cutoffs {
            dim = dim
                .checked_mul(n + 1)
                .ok_or_else(|| Error::InvalidLayout("dimension overflows".into()))?;
        }
        if dim > max_dim {
            return Err(Error::InvalidLayout(format!(
                "dimension {dim} exceeds the budget of {max_dim}"
            )));
        }
        Ok(Self { cutoffs, spins })
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn spins(&self) -> usize {
        self.spins
    }

    pub fn cutoff(&self, mode: usize) -> usize {
        self.cutoffs[mode]
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.spins
    }

    pub fn motional_dim(&self) -> usize {
        self.cutoffs.iter().map(|n| n + 1).product()
    }

    pub fn dim(&self) -> usize {
        self.spin_dim() * self.motional_dim()
    }

    /// Dimensions of the tensor factors in basis order.
    pub fn factor_dims(&self) -> Vec<usize> {
        let mut dims = vec![2; self.spins];
        dims.extend(self.cutoffs.iter().map(|n| n + 1));
        dims
    }

    pub fn mode_factor(&self, mode: usize) -> Result<usize> {
        self.check_mode(mode)?;
        Ok(self.spins + mode)
    }

    pub fn spin_factor(&self, spin: usize) -> Result<usize> {
        self.check_spin(spin)?;
        Ok(spin)
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes() {
            return Err(Error::ModeOutOfRange {
                index: mode,
                modes: self.modes(),
            });
        }
        Ok(())
    }

    pub fn check_spin(&self, spin: usize) -> Result<()> {
        if spin >= self.spins {
            return Err(Error::SpinOutOfRange {
                index: spin,
                spins: self.spins,
            });
        }
        Ok(())
    }

    pub fn labels(&self, index: usize) -> Result<BasisLabel> {
        if index >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} outside dimension {}",
                self.dim()
            )));
        }
        let mut rest = index;
        let mut occupations = vec![0; self.modes()];
        for (k, &n) in self.cutoffs.iter().enumerate().rev() {
            occupations[k] = rest % (n + 1);
            rest /= n + 1;
        }
        let mut spins = vec![Spin::Down; self.spins];
        for s in (0..self.spins).rev() {
            spins[s] = Spin::from_bit(rest % 2);
            rest /= 2;
        }
        Ok(BasisLabel { spins, occupations })
    }

    pub fn index(&self, label: &BasisLabel) -> Result<usize> {
        if label.spins.len() != self.spins || label.occupations.len() != self.modes() {
            return Err(Error::InvalidArgument(
                "label shape does not match the layout".into(),
            ));
        }
        let mut index = 0;
        for s in &label.spins {
            index = index * 2 + s.bit();
        }
        for (k, (&occ, &n)) in label.occupations.iter().zip(&self.cutoffs).enumerate() {
            if occ > n {
                return Err(Error::InvalidArgument(format!(
                    "occupation {occ} of mode {k} exceeds cutoff {n}"
                )));
            }
            index = index * (n + 1) + occ;
        }
        Ok(index)
    }

    /// Motional index of a joint index (drops the spin digits).
    pub fn motional_index(&self, index: usize) -> usize {
        index % self.motional_dim()
    }

    /// Occupations of a motional index.
    pub fn occupations(&self, motional_index: usize) -> Vec<usize> {
        let mut rest = motional_index;
        let mut occ = vec![0; self.modes()];
        for (k, &n) in self.cutoffs.iter().enumerate().rev() {
            occ[k] = rest % (n + 1);
            rest /= n + 1;
        }
        occ
    }

    /// The same modes with no spins.
    pub fn motional(&self) -> Self {
        Self {
            cutoffs: self.cutoffs.clone(),
            spins: 0,
        }
    }

    pub fn with_spins(&self, spins: usize) -> Result<Self> {
        Self::with_cutoffs(self.cutoffs.clone(), spins)
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exhaustive() {
        let layout = HilbertLayout::with_cutoffs(vec![3, 4, 2], 2).unwrap();
        assert_eq!(layout.dim(), 4 * 4 * 5 * 3);
        for i in 0..layout.dim() {
            let l = layout.labels(i).unwrap();
            assert_eq!(layout.index(&l).unwrap(), i);
        }
    }

    #[test]
    fn last_mode_is_least_significant() {
        let layout = HilbertLayout::new(2, 3, 1).unwrap();
        let l = layout.labels(1).unwrap();
        assert_eq!(l.occupations, vec![0, 1]);
        let l = layout.labels(16).unwrap();
        assert_eq!(l.spins, vec![Spin::Up]);
        assert_eq!(l.occupations, vec![0, 0]);
    }

    #[test]
    fn rejects_empty_and_oversized() {
        assert!(HilbertLayout::new(0, 3, 0).is_err());
        assert!(HilbertLayout::with_budget(vec![99, 99], 1, 10_000).is_err());
    }
}
