//! Composite state vectors, density matrices and phase averaging.
//!
//! A [`RegisterLayout`] names the tensor factors of the Hilbert space. The
//! composite index is big-endian: for registers `r_0, r_1, .., r_{m-1}` with
//! local dimensions `d_0, .., d_{m-1}` the basis state `|k_0, .., k_{m-1}>`
//! sits at `((k_0 * d_1 + k_1) * d_2 + k_2) ...`.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, ZERO};
use crate::tolerance::TOL_NORM;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

/// Ordered list of named tensor factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(registers: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let registers: Vec<Register> = registers
            .into_iter()
            .map(|(name, dim)| Register {
                name: name.into(),
                dim,
            })
            .collect();
        if registers.is_empty() {
            return Err(Error::InvalidLayout("layout has no registers".into()));
        }
        for (i, r) in registers.iter().enumerate() {
            if r.dim == 0 {
                return Err(Error::InvalidLayout(format!(
                    "register `{}` has dimension 0",
                    r.name
                )));
            }
            if registers[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::InvalidLayout(format!(
                    "duplicate register name `{}`",
                    r.name
                )));
            }
        }
        Ok(Self { registers })
    }

    /// A layout with a single register spanning the whole space.
    pub fn flat(name: &str, dim: usize) -> Result<Self> {
        Self::new([(name, dim)])
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn register_dim(&self, name: &str) -> Result<usize> {
        Ok(self.registers[self.position(name)?].dim)
    }

    /// Big-endian composite index of a tuple of local indices.
    pub fn composite_index(&self, local: &[usize]) -> Result<usize> {
        if local.len() != self.registers.len() {
            return Err(Error::DimensionMismatch {
                expected: self.registers.len(),
                found: local.len(),
            });
        }
        let mut idx = 0;
        for (r, &k) in self.registers.iter().zip(local) {
            if k >= r.dim {
                return Err(Error::InvalidParameter(format!(
                    "local index {k} out of range for register `{}` (dim {})",
                    r.name, r.dim
                )));
            }
            idx = idx * r.dim + k;
        }
        Ok(idx)
    }

    /// Inverse of [`composite_index`](Self::composite_index).
    pub fn local_indices(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.registers.len()];
        for (slot, r) in out.iter_mut().zip(&self.registers).rev() {
            *slot = index % r.dim;
            index /= r.dim;
        }
        out
    }

    /// Local value of register `position` at composite `index`.
    pub(crate) fn local_value(&self, index: usize, position: usize) -> usize {
        let stride: usize = self.registers[position + 1..]
            .iter()
            .map(|r| r.dim)
            .product();
        (index / stride) % self.registers[position].dim
    }

    pub fn concat(&self, other: &RegisterLayout) -> Result<Self> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Self::new(regs.into_iter().map(|r| (r.name, r.dim)))
    }
}

/// Complex amplitude vector over a [`RegisterLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amplitudes: CVector,
}

impl StateVector {
    /// Builds a normalized state. Fails if the squared norm is off by more
    /// than [`TOL_NORM`].
    pub fn new(layout: RegisterLayout, amplitudes: CVector) -> Result<Self> {
        let state = Self::unnormalized(layout, amplitudes)?;
        state.ensure_normalized()?;
        Ok(state)
    }

    /// Builds a state without the normalization check (intermediate sums,
    /// projections).
    pub fn unnormalized(layout: RegisterLayout, amplitudes: CVector) -> Result<Self> {
        if layout.dim() != amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn from_slice(layout: RegisterLayout, amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(layout, CVector::from_column_slice(amplitudes))
    }

    /// Computational basis state at a composite index.
    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        let dim = layout.dim();
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            layout,
            amplitudes: amps,
        })
    }

    /// Basis state addressed by one local index per register.
    pub fn basis_local(layout: RegisterLayout, local: &[usize]) -> Result<Self> {
        let idx = layout.composite_index(local)?;
        Self::basis(layout, idx)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= TOL_NORM
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                norm_sqr: self.norm_sqr(),
            })
        }
    }

    /// Returns a rescaled copy with unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized { norm_sqr: 0.0 });
        }
        Ok(Self {
            layout: self.layout.clone(),
            amplitudes: self.amplitudes.unscale(n),
        })
    }

    /// Linear combination `sum_k c_k |v_k>` over states sharing a layout.
    /// The result is not normalized.
    pub fn superpose(terms: &[(Complex64, &StateVector)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty superposition".into()))?;
        let mut amps = CVector::zeros(first.dim());
        for (c, v) in terms {
            check_dims(first.dim(), v.dim())?;
            amps.axpy(*c, &v.amplitudes, Complex64::new(1.0, 0.0));
        }
        Self::unnormalized(first.layout.clone(), amps)
    }

    /// Replaces the layout, keeping amplitudes. Dimensions must agree.
    pub fn with_layout(self, layout: RegisterLayout) -> Result<Self> {
        Self::unnormalized(layout, self.amplitudes)
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm() < 1e-14 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let local = self.layout.local_indices(i);
            let label: Vec<String> = local.iter().map(|k| k.to_string()).collect();
            write!(f, "({:.6}{:+.6}i)|{}>", a.re, a.im, label.join(","))?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `a ⊗ b` in big-endian order; the layout is the concatenation.
pub fn tensor_product(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    let layout = a.layout.concat(&b.layout)?;
    let amps = a.amplitudes.kronecker(&b.amplitudes);
    StateVector::unnormalized(layout, amps)
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.amplitudes.dotc(&b.amplitudes))
}

pub fn is_orthogonal(a: &StateVector, b: &StateVector, tol: f64) -> Result<bool> {
    Ok(inner_product(a, b)?.norm() < tol)
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity against [`TOL_NORM`].
    pub fn new(entries: CMatrix) -> Result<Self> {
        let rho = Self { entries };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn new_unchecked(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.entries;
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidDensity(format!(
                "matrix is {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm = crate::linalg::max_abs_diff(m, &m.adjoint());
        if herm > TOL_NORM {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TOL_NORM {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -TOL_NORM {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        // Symmetrize first so round-off cannot leak into the eigensolver.
        let h = (&self.entries + self.entries.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `U rho U^dag`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        check_dims(self.dim(), u.nrows())?;
        Ok(Self {
            entries: u * &self.entries * u.adjoint(),
        })
    }

    /// Convex combination `sum_k w_k rho_k`.
    pub fn mixture(terms: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let mut acc = CMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in terms {
            check_dims(first.dim(), rho.dim())?;
            acc += rho.entries.scale(*w);
        }
        Self::new(acc)
    }

    /// `B rho B^dag` where the columns of `B` are `branches`. Embeds a
    /// coefficient-space density matrix into the branches' host space.
    pub fn embed(&self, branches: &[StateVector]) -> Result<Self> {
        check_dims(self.dim(), branches.len())?;
        let host = branches
            .first()
            .ok_or_else(|| Error::InvalidParameter("no branches".into()))?
            .dim();
        let mut b = CMatrix::zeros(host, branches.len());
        for (k, v) in branches.iter().enumerate() {
            check_dims(host, v.dim())?;
            b.set_column(k, v.amplitudes());
        }
        Ok(Self {
            entries: &b * &self.entries * b.adjoint(),
        })
    }
}

/// `|psi><psi|` for a normalized state.
pub fn pure_density(psi: &StateVector) -> Result<DensityMatrix> {
    psi.ensure_normalized()?;
    let a = psi.amplitudes();
    Ok(DensityMatrix::new_unchecked(a * a.adjoint()))
}

/// How [`phase_average`] evaluates the average over phase assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseAverageMode {
    /// Per-entry factorization: the `(j, j')` entry picks up the product of
    /// two independent roots-of-unity means.
    #[default]
    Factored,
    /// Sum of `|psi_phi><psi_phi|` over all `K^N` phase tuples.
    BruteForce,
}

/// Upper bound on `K^N` accepted by the brute-force mode.
pub const BRUTE_FORCE_LIMIT: usize = 1 << 16;

/// Averages `|psi_phi><psi_phi|`, `psi_phi = sum_j e^{i phi_j} alpha_j |j>`,
/// over every assignment of phases `phi_j ∈ {2 pi k / K}`.
///
/// For `K >= 2` every off-diagonal entry carries a full roots-of-unity sum and
/// vanishes, leaving `sum_j |alpha_j|^2 |j><j|`.
pub fn phase_average(
    alpha: &[Complex64],
    k: usize,
    mode: PhaseAverageMode,
) -> Result<DensityMatrix> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "phase average needs K >= 2 roots of unity, got {k}"
        )));
    }
    let n = alpha.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty coefficient list".into()));
    }
    let norm_sqr: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > TOL_NORM {
        return Err(Error::NotNormalized { norm_sqr });
    }
    let roots: Vec<Complex64> = (0..k)
        .map(|m| Complex64::from_polar(1.0, TAU * m as f64 / k as f64))
        .collect();

    let entries = match mode {
        PhaseAverageMode::Factored => {
            let mean: Complex64 = roots.iter().sum::<Complex64>() / k as f64;
            CMatrix::from_fn(n, n, |r, c| {
                let base = alpha[r] * alpha[c].conj();
                if r == c {
                    base
                } else {
                    base * mean * mean.conj()
                }
            })
        }
        PhaseAverageMode::BruteForce => {
            let total = k
                .checked_pow(n as u32)
                .filter(|&t| t <= BRUTE_FORCE_LIMIT)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "brute-force phase average over {k}^{n} tuples exceeds limit {BRUTE_FORCE_LIMIT}"
                    ))
                })?;
            let mut acc = CMatrix::from_element(n, n, ZERO);
            let mut digits = vec![0usize; n];
            let mut v = CVector::zeros(n);
            for _ in 0..total {
                for j in 0..n {
                    v[j] = roots[digits[j]] * alpha[j];
                }
                acc += &v * v.adjoint();
                for d in digits.iter_mut() {
                    *d += 1;
                    if *d < k {
                        break;
                    }
                    *d = 0;
                }
            }
            acc.unscale(total as f64)
        }
    };
    DensityMatrix::new(entries)
}

/// `sum_j |alpha_j|^2 |j><j|`, the classical mixture of single branches.
pub fn branch_mixture(alpha: &[Complex64]) -> Result<DensityMatrix> {
    let n = alpha.len();
    let diag = CVector::from_iterator(n, alpha.iter().map(|a| Complex64::new(a.norm_sqr(), 0.0)));
    DensityMatrix::new(CMatrix::from_diagonal(&diag))
}
