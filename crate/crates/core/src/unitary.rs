//! Unitary operators: validation, completion, Haar sampling and the
//! exponential map from skew-Hermitian generators.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, ONE};
use crate::statespace::{inner_product, StateVector};
use crate::tolerance::TOL_NORM;

/// Square complex matrix with `U^dag U = I` to within [`TOL_NORM`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    matrix: CMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let defect = linalg::unitarity_defect(&matrix);
        if defect >= TOL_NORM {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    /// Permutation unitary sending basis index `k` to `perm[k]`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        let mut m = CMatrix::zeros(n, n);
        for (k, &p) in perm.iter().enumerate() {
            if p >= n || seen[p] {
                return Err(Error::InvalidParameter(format!(
                    "not a permutation: {perm:?}"
                )));
            }
            seen[p] = true;
            m[(p, k)] = ONE;
        }
        Ok(Self { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self` after `first`, i.e. the matrix product `self * first`.
    pub fn after(&self, first: &UnitaryOperator) -> Result<Self> {
        if self.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: first.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &first.matrix,
        })
    }

    /// Frobenius distance to another operator of the same size.
    pub fn distance(&self, other: &UnitaryOperator) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }
}

/// Matrix-vector product `U |psi>`; the layout is carried over.
pub fn apply(u: &UnitaryOperator, psi: &StateVector) -> Result<StateVector> {
    if u.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: psi.dim(),
        });
    }
    StateVector::unnormalized(psi.layout().clone(), &u.matrix * psi.amplitudes())
}

/// Input/output pairs a unitary must honor; only defined on a subspace.
#[derive(Debug, Clone)]
pub struct PartialIsometrySpec {
    pairs: Vec<(StateVector, StateVector)>,
}

impl PartialIsometrySpec {
    pub fn new(pairs: Vec<(StateVector, StateVector)>) -> Result<Self> {
        let dim = pairs
            .first()
            .ok_or_else(|| Error::InvalidParameter("no input/output pairs".into()))?
            .0
            .dim();
        for (a, b) in &pairs {
            for v in [a, b] {
                if v.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: v.dim(),
                    });
                }
            }
        }
        Ok(Self { pairs })
    }

    pub fn dim(&self) -> usize {
        self.pairs[0].0.dim()
    }

    pub fn pairs(&self) -> &[(StateVector, StateVector)] {
        &self.pairs
    }

    /// Checks that inputs and outputs are each orthonormal families.
    pub fn validate(&self) -> Result<()> {
        check_orthonormal("input", self.pairs.iter().map(|p| &p.0))?;
        check_orthonormal("output", self.pairs.iter().map(|p| &p.1))
    }
}

fn check_orthonormal<'a>(
    side: &'static str,
    vectors: impl Iterator<Item = &'a StateVector>,
) -> Result<()> {
    let vs: Vec<&StateVector> = vectors.collect();
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate().skip(i) {
            let ip = inner_product(a, b)?;
            let want = if i == j {
                ONE
            } else {
                Complex64::new(0.0, 0.0)
            };
            if (ip - want).norm() > TOL_NORM {
                return Err(Error::NotOrthonormal {
                    side,
                    first: i,
                    second: j,
                    overlap: ip.norm(),
                });
            }
        }
    }
    Ok(())
}

/// Extends a partial isometry to a full unitary.
///
/// Both the input and output families are completed to orthonormal bases
/// with Gaussian candidates drawn from a `ChaCha8` stream seeded by `seed`;
/// the k-th input complement vector is sent to the k-th output complement
/// vector. Specified pairs are honored exactly, including their phases.
pub fn complete_to_unitary(spec: &PartialIsometrySpec, seed: u64) -> Result<UnitaryOperator> {
    spec.validate()?;
    let dim = spec.dim();
    let inputs: Vec<CVector> = spec
        .pairs
        .iter()
        .map(|p| p.0.amplitudes().clone())
        .collect();
    let outputs: Vec<CVector> = spec
        .pairs
        .iter()
        .map(|p| p.1.amplitudes().clone())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let in_extra = linalg::complete_basis(&inputs, dim, &mut rng);
    let out_extra = linalg::complete_basis(&outputs, dim, &mut rng);

    let mut m = CMatrix::zeros(dim, dim);
    for (i, o) in inputs
        .iter()
        .chain(&in_extra)
        .zip(outputs.iter().chain(&out_extra))
    {
        m += o * i.adjoint();
    }
    UnitaryOperator::new(m)
}

/// Haar-distributed unitary, deterministic in `seed`.
///
/// Gram-Schmidt on the columns of a complex Ginibre matrix. This equals a QR
/// factorization whose `R` has a positive real diagonal, which is the phase
/// fix that makes the distribution Haar.
pub fn haar_random(dim: usize, seed: u64) -> Result<UnitaryOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_random_with(dim, &mut rng)
}

pub fn haar_random_with<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<UnitaryOperator> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let mut cols: Vec<CVector> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = linalg::complex_gaussian_vector(dim, rng);
        linalg::orthogonalize_against(&mut v, &cols);
        let n = v.norm();
        if n < 1e-6 {
            continue;
        }
        v.unscale_mut(n);
        cols.push(v);
    }
    UnitaryOperator::new(CMatrix::from_columns(&cols))
}

/// Number of real parameters describing a `dim x dim` skew-Hermitian generator.
pub fn generator_len(dim: usize) -> usize {
    dim * dim
}

/// Skew-Hermitian matrix encoded by `params`.
///
/// Layout: the first `dim` entries are the diagonal (`A_kk = i p_k`), followed
/// by one `(re, im)` pair per strictly upper entry in row-major order
/// (`A_jk = re + i im`, `A_kj = -conj(A_jk)`).
pub fn generator_matrix(dim: usize, params: &[f64]) -> Result<CMatrix> {
    if params.len() != generator_len(dim) {
        return Err(Error::DimensionMismatch {
            expected: generator_len(dim),
            found: params.len(),
        });
    }
    let mut a = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        a[(k, k)] = Complex64::new(0.0, params[k]);
    }
    let mut p = dim;
    for j in 0..dim {
        for k in j + 1..dim {
            let z = Complex64::new(params[p], params[p + 1]);
            a[(j, k)] = z;
            a[(k, j)] = -z.conj();
            p += 2;
        }
    }
    Ok(a)
}

/// Inverse of [`generator_matrix`]; reads the skew-Hermitian part of `a`.
pub fn generator_params(a: &CMatrix) -> Vec<f64> {
    let dim = a.nrows();
    let skew = (a - a.adjoint()).scale(0.5);
    let mut out = Vec::with_capacity(generator_len(dim));
    for k in 0..dim {
        out.push(skew[(k, k)].im);
    }
    for j in 0..dim {
        for k in j + 1..dim {
            out.push(skew[(j, k)].re);
            out.push(skew[(j, k)].im);
        }
    }
    out
}

/// `exp(A)` for the skew-Hermitian generator encoded by `params`.
pub fn from_generator(dim: usize, params: &[f64]) -> Result<UnitaryOperator> {
    let a = generator_matrix(dim, params)?;
    UnitaryOperator::new(expm(&a))
}

const TAYLOR_ORDER: usize = 18;

/// Matrix exponential by scaling and squaring with a fixed-order Taylor
/// polynomial. The argument is scaled until its 1-norm is at most 1/2, where
/// the order-18 truncation error is below `0.5^19 / 19!`.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm1 = (0..a.ncols())
        .map(|c| a.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm1 * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a.scale(scale);

    // Horner: I + X(I + X/2(I + X/3(...)))
    let eye = CMatrix::identity(n, n);
    let mut acc = eye.clone();
    for k in (1..=TAYLOR_ORDER).rev() {
        acc = &eye + (&x * &acc).unscale(k as f64);
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc
}

/// Result of [`approximate_by_generators`].
#[derive(Debug, Clone)]
pub struct GeneratorFit {
    /// Generator parameters whose exponentials, applied left to right,
    /// compose to `unitary`.
    pub factors: Vec<Vec<f64>>,
    pub unitary: UnitaryOperator,
    pub distance: f64,
    pub iterations: usize,
}

/// Approximates `target` by a product of [`from_generator`] factors.
///
/// Each step measures the residual `R = U^dag T`, takes its skew-Hermitian
/// part as the next generator and multiplies `exp` of it onto the running
/// product. Near the identity the residual phase `theta` contracts as
/// `theta - sin(theta)`, so convergence is cubic.
pub fn approximate_by_generators(
    target: &UnitaryOperator,
    start: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<GeneratorFit> {
    let dim = target.dim();
    let mut current = from_generator(dim, start)?;
    let mut factors = vec![start.to_vec()];
    let mut distance = current.distance(target);
    let mut iterations = 0;
    while distance >= tol && iterations < max_iters {
        let residual = current.matrix().adjoint() * target.matrix();
        let step = generator_params(&residual);
        let factor = from_generator(dim, &step)?;
        current = UnitaryOperator::new(current.matrix() * factor.matrix())?;
        factors.push(step);
        distance = current.distance(target);
        iterations += 1;
    }
    Ok(GeneratorFit {
        factors,
        unitary: current,
        distance,
        iterations,
    })
}

/// Matrix built column by column from basis images, for small hand-built operators.
pub fn from_columns(columns: &[StateVector]) -> Result<UnitaryOperator> {
    let cols: Vec<CVector> = columns.iter().map(|c| c.amplitudes().clone()).collect();
    UnitaryOperator::new(CMatrix::from_columns(&cols))
}
