//! Spin-L Hilbert space of N two-mode atoms.
//!
//! The Fock state `|l⟩` holds `L + l` atoms in the first component and
//! `L - l` in the second, with `L = N/2` and `l ∈ {-L, …, L}`. Row `i` of
//! every vector and matrix corresponds to `l = i - L`, so row 0 is `|-L⟩`.
//! Because `L` may be half-integer, Fock indices are stored doubled.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::linalg::{self, Side};
use crate::{Error, Result};

/// Conjugate symmetry required of a [`HermitianOperator`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Construction tolerance on `Σ|a_i|² = 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Drift in `Σ|a_i|²` after a unitary step that is treated as a broken unitary.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-10;
/// Tolerance on the imaginary part of an expectation value.
pub const EXPECTATION_IMAG_TOLERANCE: f64 = 1e-10;

/// Hilbert space of `n_atoms` bosons distributed over two modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpinBasis {
    n_atoms: u32,
}

impl SpinBasis {
    pub fn new(n_atoms: u32) -> Result<Self> {
        if n_atoms < 1 {
            return Err(Error::invalid("a spin basis needs at least one atom"));
        }
        Ok(SpinBasis { n_atoms })
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.n_atoms as usize + 1
    }

    /// `2L`, exact.
    pub fn two_l(&self) -> u32 {
        self.n_atoms
    }

    /// `L = N/2`.
    pub fn l(&self) -> f64 {
        f64::from(self.n_atoms) / 2.0
    }

    /// Effective Planck constant `1/L`.
    pub fn hbar_eff(&self) -> f64 {
        2.0 / f64::from(self.n_atoms)
    }

    /// Fock index of row `i`.
    pub fn index_of_row(&self, row: usize) -> FockIndex {
        assert!(row < self.dim(), "row {row} outside basis of dim {}", self.dim());
        FockIndex::from_twice(2 * row as i64 - i64::from(self.n_atoms))
    }

    /// Row of Fock index `l`, rejecting indices outside `{-L, …, L}`.
    pub fn row(&self, l: FockIndex) -> Result<usize> {
        let n = i64::from(self.n_atoms);
        if l.twice.abs() > n || (l.twice + n) % 2 != 0 {
            return Err(Error::invalid(format!(
                "Fock index {l} is not in {{-{}, …, {}}} for N={}",
                self.lowest(),
                self.highest(),
                self.n_atoms
            )));
        }
        Ok(((l.twice + n) / 2) as usize)
    }

    pub fn lowest(&self) -> FockIndex {
        FockIndex::from_twice(-i64::from(self.n_atoms))
    }

    pub fn highest(&self) -> FockIndex {
        FockIndex::from_twice(i64::from(self.n_atoms))
    }

    /// All Fock indices in row order, `-L` first.
    pub fn indices(&self) -> impl Iterator<Item = FockIndex> + '_ {
        (0..self.dim()).map(|i| self.index_of_row(i))
    }

    pub(crate) fn check_same(&self, other: &SpinBasis) -> Result<()> {
        if self != other {
            return Err(Error::BasisMismatch {
                expected: self.n_atoms,
                found: other.n_atoms,
            });
        }
        Ok(())
    }
}

/// Eigenvalue `l` of `L̂z`, stored as `2l` so half-integer spins are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockIndex {
    twice: i64,
}

impl FockIndex {
    /// Integer index `l`.
    pub const fn new(l: i64) -> Self {
        FockIndex { twice: 2 * l }
    }

    /// Index with value `twice / 2`.
    pub const fn from_twice(twice: i64) -> Self {
        FockIndex { twice }
    }

    pub fn twice(&self) -> i64 {
        self.twice
    }

    pub fn value(&self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// The index one step up, `l + 1`.
    pub fn succ(&self) -> Self {
        FockIndex::from_twice(self.twice + 2)
    }
}

impl From<i64> for FockIndex {
    fn from(l: i64) -> Self {
        FockIndex::new(l)
    }
}

impl fmt::Display for FockIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else if self.twice < 0 {
            write!(f, "-{}.5", (-self.twice) / 2)
        } else {
            write!(f, "{}.5", self.twice / 2)
        }
    }
}

impl FromStr for FockIndex {
    type Err = Error;

    /// Accepts integers (`-100`), halves (`-3.5`) and fractions (`-7/2`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("`{s}` is not an integer or half-integer Fock index"));
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            return match den.trim() {
                "1" => Ok(FockIndex::new(num)),
                "2" => Ok(FockIndex::from_twice(num)),
                _ => Err(bad()),
            };
        }
        if let Ok(l) = s.parse::<i64>() {
            return Ok(FockIndex::new(l));
        }
        let x: f64 = s.parse().map_err(|_| bad())?;
        let doubled = 2.0 * x;
        if !doubled.is_finite() || (doubled - doubled.round()).abs() > 1e-9 {
            return Err(bad());
        }
        Ok(FockIndex::from_twice(doubled.round() as i64))
    }
}

/// Normalized state over the Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: SpinBasis,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized.
    pub fn new(basis: SpinBasis, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::invalid(format!(
                "state has {} amplitudes, basis has dim {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let drift = (linalg::norm_sqr(amplitudes.as_slice()) - 1.0).abs();
        if !(drift <= NORM_TOLERANCE) {
            return Err(Error::invalid(format!(
                "state is not normalized: |Σ|a|² - 1| = {drift:.3e}"
            )));
        }
        Ok(StateVector { basis, amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(basis: SpinBasis, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::invalid(format!(
                "state has {} amplitudes, basis has dim {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let norm = linalg::norm_sqr(amplitudes.as_slice()).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("cannot normalize a zero or non-finite state"));
        }
        Ok(StateVector {
            basis,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub(crate) fn from_raw(basis: SpinBasis, amplitudes: DVector<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), basis.dim());
        StateVector { basis, amplitudes }
    }

    pub fn basis(&self) -> &SpinBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, l: FockIndex) -> Result<Complex64> {
        Ok(self.amplitudes[self.basis.row(l)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(self.amplitudes.as_slice())
    }

    /// `|a_i|²` in row order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.basis.check_same(&other.basis)?;
        Ok(linalg::dot_conj(self.amplitudes.as_slice(), other.amplitudes.as_slice()))
    }
}

/// Fock state `|l⟩`.
pub fn fock_state(basis: &SpinBasis, l: FockIndex) -> Result<StateVector> {
    let row = basis.row(l)?;
    let mut amplitudes = DVector::zeros(basis.dim());
    amplitudes[row] = Complex64::new(1.0, 0.0);
    Ok(StateVector::from_raw(*basis, amplitudes))
}

/// Dense Hermitian matrix on a spin basis.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    basis: SpinBasis,
    label: String,
    matrix: DMatrix<Complex64>,
}

impl HermitianOperator {
    /// Validates shape and `A = A†` within [`HERMITIAN_TOLERANCE`], scaled by
    /// the largest entry when that exceeds one.
    pub fn new(basis: SpinBasis, label: impl Into<String>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let label = label.into();
        check_square(&basis, &matrix, &label)?;
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let defect = linalg::hermiticity_defect(&matrix);
        if !(defect <= HERMITIAN_TOLERANCE * scale) {
            return Err(Error::Invariant {
                what: format!("Hermitian operator {label}"),
                defect,
            });
        }
        Ok(HermitianOperator { basis, label, matrix })
    }

    pub fn basis(&self) -> &SpinBasis {
        &self.basis
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Whether every entry is real, so a real symmetric solver applies.
    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    /// `⟨s|A|s⟩`; the imaginary part must vanish to [`EXPECTATION_IMAG_TOLERANCE`].
    pub fn expectation(&self, s: &StateVector) -> Result<f64> {
        self.basis.check_same(s.basis())?;
        let z = sandwich(&self.matrix, s.amplitudes(), s.amplitudes());
        if z.im.abs() > EXPECTATION_IMAG_TOLERANCE {
            return Err(Error::Numerical(format!(
                "expectation of {} has imaginary part {:.3e}",
                self.label, z.im
            )));
        }
        Ok(z.re)
    }

    /// Eigendecomposition, reusable for many exponentials.
    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::of(self)
    }
}

/// `⟨a|M|b⟩` for a dense matrix.
pub(crate) fn sandwich(m: &DMatrix<Complex64>, a: &DVector<Complex64>, b: &DVector<Complex64>) -> Complex64 {
    let mb = m * b;
    linalg::dot_conj(a.as_slice(), mb.as_slice())
}

fn check_square(basis: &SpinBasis, m: &DMatrix<Complex64>, label: &str) -> Result<()> {
    if m.nrows() != basis.dim() || m.ncols() != basis.dim() {
        return Err(Error::invalid(format!(
            "{label} is {}x{}, basis has dim {}",
            m.nrows(),
            m.ncols(),
            basis.dim()
        )));
    }
    Ok(())
}

/// Dense unitary matrix on a spin basis.
#[derive(Clone, Debug)]
pub struct UnitaryOperator {
    basis: SpinBasis,
    matrix: DMatrix<Complex64>,
}

/// Bound on `max |U†U - I|` for a [`UnitaryOperator`].
pub const UNITARY_TOLERANCE: f64 = 1e-12;

impl UnitaryOperator {
    /// Validates `‖U†U - I‖_max <` [`UNITARY_TOLERANCE`].
    pub fn new(basis: SpinBasis, matrix: DMatrix<Complex64>) -> Result<Self> {
        check_square(&basis, &matrix, "unitary")?;
        let defect = linalg::unitarity_defect(&matrix);
        if !(defect < UNITARY_TOLERANCE) {
            return Err(Error::Invariant {
                what: "unitary operator".into(),
                defect,
            });
        }
        Ok(UnitaryOperator { basis, matrix })
    }

    pub(crate) fn from_raw(basis: SpinBasis, matrix: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(matrix.nrows(), basis.dim());
        UnitaryOperator { basis, matrix }
    }

    pub fn identity(basis: &SpinBasis) -> Self {
        UnitaryOperator::from_raw(*basis, DMatrix::identity(basis.dim(), basis.dim()))
    }

    pub fn basis(&self) -> &SpinBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `max |U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    pub fn adjoint(&self) -> UnitaryOperator {
        UnitaryOperator::from_raw(self.basis, self.matrix.adjoint())
    }

    /// `self · other`.
    pub fn compose(&self, other: &UnitaryOperator) -> Result<UnitaryOperator> {
        self.basis.check_same(&other.basis)?;
        Ok(UnitaryOperator::from_raw(
            self.basis,
            linalg::matmul(&self.matrix, Side::Plain, &other.matrix),
        ))
    }

    /// `U†` composed with `other`, without forming `U†`.
    pub fn adjoint_compose(&self, other: &UnitaryOperator) -> Result<UnitaryOperator> {
        self.basis.check_same(&other.basis)?;
        Ok(UnitaryOperator::from_raw(
            self.basis,
            linalg::matmul(&self.matrix, Side::Adjoint, &other.matrix),
        ))
    }

    /// `Uⁿ` by binary powering.
    pub fn pow(&self, mut n: u64) -> UnitaryOperator {
        let mut result = UnitaryOperator::identity(&self.basis);
        let mut base = self.matrix.clone();
        while n > 0 {
            if n & 1 == 1 {
                result.matrix = linalg::matmul(&result.matrix, Side::Plain, &base);
            }
            n >>= 1;
            if n > 0 {
                base = linalg::matmul(&base, Side::Plain, &base);
            }
        }
        result
    }

    /// `U|s⟩`, re-checking the norm.
    pub fn apply(&self, s: &StateVector) -> Result<StateVector> {
        self.apply_side(s, Side::Plain)
    }

    /// `U†|s⟩`, re-checking the norm.
    pub fn apply_adjoint(&self, s: &StateVector) -> Result<StateVector> {
        self.apply_side(s, Side::Adjoint)
    }

    fn apply_side(&self, s: &StateVector, side: Side) -> Result<StateVector> {
        self.basis.check_same(s.basis())?;
        let mut out = DVector::zeros(self.basis.dim());
        linalg::mul_block(
            self.matrix.as_slice(),
            side,
            self.basis.dim(),
            s.amplitudes().as_slice(),
            out.as_mut_slice(),
        );
        check_norm(linalg::norm_sqr(out.as_slice()), "unitary application")?;
        Ok(StateVector::from_raw(self.basis, out))
    }

    /// Applies `op(U)` to each column of a block in place, `steps` times.
    pub(crate) fn step_block(&self, side: Side, block: &mut DMatrix<Complex64>, scratch: &mut DMatrix<Complex64>, steps: usize) {
        debug_assert_eq!(block.nrows(), self.basis.dim());
        if scratch.shape() != block.shape() {
            *scratch = DMatrix::zeros(block.nrows(), block.ncols());
        }
        if steps == 0 {
            return;
        }
        let adjoint;
        let a: &[Complex64] = match side {
            Side::Plain => self.matrix.as_slice(),
            Side::Adjoint => {
                adjoint = linalg::adjoint_of(self.matrix.as_slice(), self.basis.dim());
                &adjoint
            }
        };
        for _ in 0..steps {
            linalg::mul_plain(a, self.basis.dim(), block.as_slice(), scratch.as_mut_slice());
            std::mem::swap(block, scratch);
        }
    }
}

/// Errors when `Σ|a|²` has drifted from one by more than [`NORM_DRIFT_TOLERANCE`].
pub(crate) fn check_norm(norm_sqr: f64, context: &str) -> Result<()> {
    let drift = (norm_sqr - 1.0).abs();
    if !(drift <= NORM_DRIFT_TOLERANCE) {
        return Err(Error::NormDrift {
            drift,
            context: context.to_string(),
        });
    }
    Ok(())
}

pub(crate) fn check_block_norms(block: &DMatrix<Complex64>, context: &str) -> Result<()> {
    for col in block.column_iter() {
        check_norm(col.iter().map(|z| z.norm_sqr()).sum(), context)?;
    }
    Ok(())
}

/// Eigenpairs of a Hermitian operator. Real symmetric generators keep real
/// eigenvectors so exponentials reduce to two real products.
#[derive(Clone, Debug)]
pub struct Spectrum {
    basis: SpinBasis,
    values: Vec<f64>,
    vectors: EigenVectors,
}

#[derive(Clone, Debug)]
enum EigenVectors {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

const EIGEN_EPS: f64 = f64::EPSILON;
const EIGEN_MAX_ITER: usize = 0; // unbounded

impl Spectrum {
    fn of(op: &HermitianOperator) -> Result<Self> {
        let failed = || {
            Error::Numerical(format!(
                "eigendecomposition of {} ({}x{})",
                op.label,
                op.matrix.nrows(),
                op.matrix.ncols()
            ))
        };
        if op.is_real() {
            let real = op.matrix.map(|z| z.re);
            let eig = SymmetricEigen::try_new(real, EIGEN_EPS, EIGEN_MAX_ITER).ok_or_else(failed)?;
            let mut vectors = eig.eigenvectors;
            for mut col in vectors.column_iter_mut() {
                let n = col.norm();
                col /= n;
            }
            if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
                return Err(failed());
            }
            Ok(Spectrum {
                basis: op.basis,
                values: eig.eigenvalues.iter().copied().collect(),
                vectors: EigenVectors::Real(vectors),
            })
        } else {
            let eig = SymmetricEigen::try_new(op.matrix.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or_else(failed)?;
            let mut vectors = eig.eigenvectors;
            for mut col in vectors.column_iter_mut() {
                let n = col.norm();
                col.unscale_mut(n);
            }
            if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
                return Err(failed());
            }
            Ok(Spectrum {
                basis: op.basis,
                values: eig.eigenvalues.iter().copied().collect(),
                vectors: EigenVectors::Complex(vectors),
            })
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// `exp(-i·angle·H) = V diag(e^{-i·angle·λ}) V†`.
    pub fn unitary(&self, angle: f64) -> UnitaryOperator {
        let dim = self.basis.dim();
        let matrix = match &self.vectors {
            EigenVectors::Real(v) => {
                let mut vc = v.clone();
                let mut vs = v.clone();
                for (j, &lambda) in self.values.iter().enumerate() {
                    let (s, c) = (angle * lambda).sin_cos();
                    vc.column_mut(j).scale_mut(c);
                    vs.column_mut(j).scale_mut(s);
                }
                let re = &vc * v.transpose();
                let im = &vs * v.transpose();
                DMatrix::from_fn(dim, dim, |i, j| Complex64::new(re[(i, j)], -im[(i, j)]))
            }
            EigenVectors::Complex(v) => {
                let mut scaled = v.clone();
                for (j, &lambda) in self.values.iter().enumerate() {
                    let phase = Complex64::from_polar(1.0, -angle * lambda);
                    for z in scaled.column_mut(j).iter_mut() {
                        *z *= phase;
                    }
                }
                linalg::matmul(&scaled, Side::Plain, &v.adjoint())
            }
        };
        UnitaryOperator::from_raw(self.basis, matrix)
    }
}

/// `exp(-i·angle·H)` via the eigendecomposition of `H`.
pub fn unitary_from_generator(h: &HermitianOperator, angle: f64) -> Result<UnitaryOperator> {
    if !angle.is_finite() {
        return Err(Error::invalid(format!("exponent angle {angle} is not finite")));
    }
    Ok(h.spectrum()?.unitary(angle))
}

/// `L̂z`, diagonal with `l = i - L`.
pub fn op_lz(basis: &SpinBasis) -> HermitianOperator {
    let dim = basis.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = Complex64::new(basis.index_of_row(i).value(), 0.0);
    }
    HermitianOperator {
        basis: *basis,
        label: format!("Lz(N={})", basis.n_atoms()),
        matrix: m,
    }
}

/// Coefficient of `L̂₊|l⟩ = c |l+1⟩` for the state in row `i`:
/// `√(L(L+1) - l(l+1)) = √((L-l)(L+l+1))`, evaluated with `2L = N` so it
/// is exact in integers before the square root.
fn raise_coefficient(basis: &SpinBasis, row: usize) -> f64 {
    // (L - l)(L + l + 1) with L + l = row, L - l = N - row
    let n = basis.n_atoms() as usize;
    (((n - row) * (row + 1)) as f64).sqrt()
}

/// Ladder operator `L̂₊` (not Hermitian).
pub fn op_lplus(basis: &SpinBasis) -> DMatrix<Complex64> {
    let dim = basis.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim - 1 {
        m[(i + 1, i)] = Complex64::new(raise_coefficient(basis, i), 0.0);
    }
    m
}

/// Ladder operator `L̂₋ = L̂₊†`.
pub fn op_lminus(basis: &SpinBasis) -> DMatrix<Complex64> {
    op_lplus(basis).adjoint()
}

/// `L̂x = (L̂₊ + L̂₋)/2`, real symmetric tridiagonal.
pub fn op_lx(basis: &SpinBasis) -> HermitianOperator {
    let dim = basis.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim - 1 {
        let c = Complex64::new(0.5 * raise_coefficient(basis, i), 0.0);
        m[(i + 1, i)] = c;
        m[(i, i + 1)] = c;
    }
    HermitianOperator {
        basis: *basis,
        label: format!("Lx(N={})", basis.n_atoms()),
        matrix: m,
    }
}

/// `L̂y = (L̂₊ - L̂₋)/(2i)`.
pub fn op_ly(basis: &SpinBasis) -> HermitianOperator {
    let dim = basis.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim - 1 {
        let c = 0.5 * raise_coefficient(basis, i);
        // ⟨l+1|Ly|l⟩ = c/(2i)·2 = -i c, ⟨l|Ly|l+1⟩ = +i c
        m[(i + 1, i)] = Complex64::new(0.0, -c);
        m[(i, i + 1)] = Complex64::new(0.0, c);
    }
    HermitianOperator {
        basis: *basis,
        label: format!("Ly(N={})", basis.n_atoms()),
        matrix: m,
    }
}
