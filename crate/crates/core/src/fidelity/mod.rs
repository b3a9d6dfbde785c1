//! Loschmidt echo engine.
//!
//! The fidelity amplitude of an initial state `|Φ₀⟩` after `n` kicks is
//! `m(n) = ⟨Φ₀|(Û_ε†)ⁿ Ûⁿ|Φ₀⟩`. It is computed by co-evolving `Ûⁿ|Φ₀⟩` and
//! `Û_εⁿ|Φ₀⟩` and taking their overlap at every kick boundary. The
//! generalized echo `m_lk(n) = ⟨l|(Û_ε†)ⁿ Ûⁿ|k⟩` uses the same scheme with
//! different bra and ket states.

mod peaks;

pub use peaks::{detect_peaks, track_peak_centers, PeakConfig, PeakRecord, PeakTrack, PeakTrackRow};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::floquet::{FloquetBuilder, FloquetPair, ModelParams};
use crate::linalg::{self, Side};
use crate::spinspace::{self, FockIndex, HermitianOperator, SpinBasis, StateVector, UnitaryOperator};
use crate::{Error, Result};

/// Slack allowed above one for an echo probability.
pub const PROBABILITY_SLACK: f64 = 1e-10;
/// Completeness tolerance for sums of echo probabilities.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EchoSample {
    pub n: usize,
    pub amplitude: Complex64,
    pub probability: f64,
}

/// `m(n)` and `M(n) = |m(n)|²` for `n = 0..=n_max`.
#[derive(Clone, Debug)]
pub struct EchoCurve {
    pub params: ModelParams,
    pub n_atoms: u32,
    pub initial: FockIndex,
    pub samples: Vec<EchoSample>,
}

impl EchoCurve {
    pub fn probabilities(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.probability).collect()
    }

    /// First `n` with `M(n) < level`.
    pub fn first_drop_below(&self, level: f64) -> Option<usize> {
        self.samples.iter().find(|s| s.probability < level).map(|s| s.n)
    }
}

fn fock_block(basis: &SpinBasis, ks: &[FockIndex]) -> Result<DMatrix<Complex64>> {
    let mut block = DMatrix::zeros(basis.dim(), ks.len());
    for (j, &k) in ks.iter().enumerate() {
        block[(basis.row(k)?, j)] = Complex64::new(1.0, 0.0);
    }
    Ok(block)
}

fn sample(n: usize, amplitude: Complex64) -> Result<EchoSample> {
    let probability = amplitude.norm_sqr();
    if !(probability <= 1.0 + PROBABILITY_SLACK) {
        return Err(Error::Invariant {
            what: format!("echo probability at n={n}"),
            defect: probability - 1.0,
        });
    }
    Ok(EchoSample { n, amplitude, probability })
}

/// Two blocks of states advanced in lockstep, one per propagator.
struct CoEvolution<'a> {
    pair: &'a FloquetPair,
    ket: DMatrix<Complex64>,
    bra: DMatrix<Complex64>,
    ket_scratch: DMatrix<Complex64>,
    bra_scratch: DMatrix<Complex64>,
}

impl<'a> CoEvolution<'a> {
    fn new(pair: &'a FloquetPair, ket: DMatrix<Complex64>, bra: DMatrix<Complex64>) -> Self {
        CoEvolution {
            pair,
            ket_scratch: DMatrix::zeros(ket.nrows(), ket.ncols()),
            bra_scratch: DMatrix::zeros(bra.nrows(), bra.ncols()),
            ket,
            bra,
        }
    }

    fn step(&mut self) -> Result<()> {
        self.pair
            .unperturbed
            .step_block(Side::Plain, &mut self.ket, &mut self.ket_scratch, 1);
        self.pair
            .perturbed
            .step_block(Side::Plain, &mut self.bra, &mut self.bra_scratch, 1);
        spinspace::check_block_norms(&self.ket, "unperturbed kick")?;
        spinspace::check_block_norms(&self.bra, "perturbed kick")
    }

    fn overlap(&self, bra_col: usize, ket_col: usize) -> Complex64 {
        linalg::dot_conj(
            self.bra.column(bra_col).as_slice(),
            self.ket.column(ket_col).as_slice(),
        )
    }
}

/// Standard fidelity curve of the Fock state `|k⟩`.
pub fn fidelity_curve(basis: &SpinBasis, params: &ModelParams, k: FockIndex, n_max: usize) -> Result<EchoCurve> {
    let mut curves = fidelity_curves(basis, params, &[k], n_max)?;
    Ok(curves.pop().expect("one curve per index"))
}

/// Fidelity curves for several Fock states, evolved together.
pub fn fidelity_curves(basis: &SpinBasis, params: &ModelParams, ks: &[FockIndex], n_max: usize) -> Result<Vec<EchoCurve>> {
    let pair = FloquetBuilder::new(basis)?.pair(params)?;
    fidelity_curves_with(&pair, basis, params, ks, n_max)
}

pub(crate) fn fidelity_curves_with(
    pair: &FloquetPair,
    basis: &SpinBasis,
    params: &ModelParams,
    ks: &[FockIndex],
    n_max: usize,
) -> Result<Vec<EchoCurve>> {
    let start = fock_block(basis, ks)?;
    let mut evo = CoEvolution::new(pair, start.clone(), start);
    let mut samples: Vec<Vec<EchoSample>> = vec![Vec::with_capacity(n_max + 1); ks.len()];
    for n in 0..=n_max {
        if n > 0 {
            evo.step()?;
        }
        for (j, s) in samples.iter_mut().enumerate() {
            s.push(sample(n, evo.overlap(j, j))?);
        }
    }
    Ok(ks
        .iter()
        .zip(samples)
        .map(|(&k, samples)| EchoCurve {
            params: *params,
            n_atoms: basis.n_atoms(),
            initial: k,
            samples,
        })
        .collect())
}

/// Fidelity of arbitrary (normalized) initial states.
pub fn fidelity_curve_of_state(basis: &SpinBasis, params: &ModelParams, initial: &StateVector, n_max: usize) -> Result<Vec<Complex64>> {
    basis.check_same(initial.basis())?;
    let pair = FloquetBuilder::new(basis)?.pair(params)?;
    let start = DMatrix::from_column_slice(basis.dim(), 1, initial.amplitudes().as_slice());
    let mut evo = CoEvolution::new(&pair, start.clone(), start);
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            evo.step()?;
        }
        out.push(sample(n, evo.overlap(0, 0))?.amplitude);
    }
    Ok(out)
}

/// How an echo column `(Û_ε†)ⁿ Ûⁿ|k⟩` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EchoMethod {
    /// Evolve forward under `Û`, then backward under `Û_ε†`.
    #[default]
    ForwardBackward,
    /// Co-evolve `Ûⁿ|k⟩` with the basis block `Û_εⁿ`, then project.
    CoEvolving,
}

/// Vectors `(Û_ε†)ⁿ Ûⁿ|k⟩` for each requested `n`; component `l` is `m_lk(n)`.
pub fn echo_column(
    basis: &SpinBasis,
    params: &ModelParams,
    k: FockIndex,
    n_set: &[usize],
    method: EchoMethod,
) -> Result<BTreeMap<usize, StateVector>> {
    let pair = FloquetBuilder::new(basis)?.pair(params)?;
    let mut wanted: Vec<usize> = n_set.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let dim = basis.dim();
    let mut ket = fock_block(basis, &[k])?;
    let mut ket_scratch = DMatrix::zeros(dim, 1);
    let mut out = BTreeMap::new();
    let mut at = 0usize;
    match method {
        EchoMethod::ForwardBackward => {
            let mut scratch = DMatrix::zeros(dim, 1);
            for &n in &wanted {
                pair.unperturbed
                    .step_block(Side::Plain, &mut ket, &mut ket_scratch, n - at);
                at = n;
                let mut back = ket.clone();
                pair.perturbed.step_block(Side::Adjoint, &mut back, &mut scratch, n);
                spinspace::check_block_norms(&back, "echo column")?;
                out.insert(n, StateVector::from_raw(*basis, DVector::from_column_slice(back.as_slice())));
            }
        }
        EchoMethod::CoEvolving => {
            let mut frame = DMatrix::<Complex64>::identity(dim, dim);
            let mut frame_scratch = DMatrix::zeros(dim, dim);
            for &n in &wanted {
                pair.unperturbed
                    .step_block(Side::Plain, &mut ket, &mut ket_scratch, n - at);
                pair.perturbed
                    .step_block(Side::Plain, &mut frame, &mut frame_scratch, n - at);
                at = n;
                let mut col = DVector::zeros(dim);
                linalg::mul_block(frame.as_slice(), Side::Adjoint, dim, ket.as_slice(), col.as_mut_slice());
                spinspace::check_norm(linalg::norm_sqr(col.as_slice()), "echo column")?;
                out.insert(n, StateVector::from_raw(*basis, col));
            }
        }
    }
    Ok(out)
}

/// The full echo operator `(Û_ε†)ⁿ Ûⁿ`; entry `(l, k)` is `m_lk(n)`.
pub fn echo_operator(basis: &SpinBasis, params: &ModelParams, n: u64) -> Result<UnitaryOperator> {
    let pair = FloquetBuilder::new(basis)?.pair(params)?;
    pair.perturbed.pow(n).adjoint_compose(&pair.unperturbed.pow(n))
}

/// `m_lk(n)` at fixed `l` over a set of initial indices `k` and `n = 0..=n_max`.
#[derive(Clone, Debug)]
pub struct EchoMatrix {
    pub params: ModelParams,
    pub n_atoms: u32,
    pub l: FockIndex,
    pub ks: Vec<FockIndex>,
    pub n_max: usize,
    /// `amplitudes[k_idx][n]`.
    pub amplitudes: Vec<Vec<Complex64>>,
}

impl EchoMatrix {
    /// `M_lk(n)`.
    pub fn probability(&self, k_idx: usize, n: usize) -> f64 {
        self.amplitudes[k_idx][n].norm_sqr()
    }

    /// Time series `M_lk(·)` for the `k_idx`-th initial index.
    pub fn series(&self, k_idx: usize) -> Vec<f64> {
        self.amplitudes[k_idx].iter().map(|z| z.norm_sqr()).collect()
    }

    /// `M_lk(n)` over all stored `k`.
    pub fn slice_at(&self, n: usize) -> Vec<f64> {
        (0..self.ks.len()).map(|j| self.probability(j, n)).collect()
    }

    pub fn index_of(&self, k: FockIndex) -> Option<usize> {
        self.ks.iter().position(|&x| x == k)
    }

    /// Whether `ks` is every Fock index of the basis in ascending order.
    pub fn covers_full_range(&self) -> bool {
        SpinBasis::new(self.n_atoms)
            .map(|b| b.dim() == self.ks.len() && b.indices().zip(&self.ks).all(|(a, b)| a == *b))
            .unwrap_or(false)
    }
}

/// Generalized echo over `ks` at fixed final index `l`, parallel over `k`.
pub fn echo_matrix(basis: &SpinBasis, params: &ModelParams, l: FockIndex, ks: &[FockIndex], n_max: usize) -> Result<EchoMatrix> {
    let pair = FloquetBuilder::new(basis)?.pair(params)?;
    basis.row(l)?;
    for &k in ks {
        basis.row(k)?;
    }
    let shards = rayon::current_num_threads().max(1);
    let chunk = ks.len().div_ceil(shards).max(1);
    let parts: Vec<Vec<Vec<Complex64>>> = ks
        .par_chunks(chunk)
        .map(|chunk| echo_rows(&pair, basis, l, chunk, n_max))
        .collect::<Result<_>>()?;
    Ok(EchoMatrix {
        params: *params,
        n_atoms: basis.n_atoms(),
        l,
        ks: ks.to_vec(),
        n_max,
        amplitudes: parts.into_iter().flatten().collect(),
    })
}

/// Two-state scheme: `m_lk(n) = ⟨Û_εⁿ l | Ûⁿ k⟩`.
fn echo_rows(pair: &FloquetPair, basis: &SpinBasis, l: FockIndex, ks: &[FockIndex], n_max: usize) -> Result<Vec<Vec<Complex64>>> {
    let ket = fock_block(basis, ks)?;
    let bra = fock_block(basis, &[l])?;
    let mut evo = CoEvolution::new(pair, ket, bra);
    let mut rows = vec![Vec::with_capacity(n_max + 1); ks.len()];
    for n in 0..=n_max {
        if n > 0 {
            evo.step()?;
        }
        for (j, row) in rows.iter_mut().enumerate() {
            row.push(sample(n, evo.overlap(0, j))?.amplitude);
        }
    }
    Ok(rows)
}

/// `f(n) = Σ_l C_l* m_lk(n)` for a prepared state with coefficients `C`.
pub fn generalized_amplitude(coefficients: &[Complex64], column: &StateVector) -> Result<Complex64> {
    if coefficients.len() != column.basis().dim() {
        return Err(Error::invalid(format!(
            "{} coefficients for a basis of dim {}",
            coefficients.len(),
            column.basis().dim()
        )));
    }
    let norm = linalg::norm_sqr(coefficients);
    if (norm - 1.0).abs() > spinspace::NORM_TOLERANCE {
        return Err(Error::invalid(format!(
            "coefficients are not normalized: Σ|C|² = {norm}"
        )));
    }
    Ok(linalg::dot_conj(coefficients, column.amplitudes().as_slice()))
}

/// `S_k(l, n) = Σ_{k' ≤ k} M_lk'(n)` over the full index range.
pub fn cumulative_sk(matrix: &EchoMatrix, n: usize) -> Result<Vec<f64>> {
    if !matrix.covers_full_range() {
        return Err(Error::invalid(
            "cumulative sums need every initial index from -L to L",
        ));
    }
    if n > matrix.n_max {
        return Err(Error::invalid(format!("n = {n} beyond n_max = {}", matrix.n_max)));
    }
    let mut acc = 0.0;
    let sums: Vec<f64> = matrix
        .slice_at(n)
        .into_iter()
        .map(|m| {
            acc += m;
            acc
        })
        .collect();
    let total = *sums.last().expect("non-empty basis");
    if (total - 1.0).abs() > COMPLETENESS_TOLERANCE {
        return Err(Error::Invariant {
            what: format!("completeness of S_k at n={n}"),
            defect: total - 1.0,
        });
    }
    Ok(sums)
}

/// One entry of a fixed-time K scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KickScanRow {
    pub kick: f64,
    pub sigma: f64,
    pub k: FockIndex,
    pub fidelity: f64,
}

/// `M(t_fixed)` over a grid of kick strengths, perturbation strengths and
/// initial Fock states. Rows are ordered by kick, then sigma, then k.
pub fn fidelity_at_time_vs_kick(
    basis: &SpinBasis,
    base: &ModelParams,
    sigmas: &[f64],
    t_fixed: usize,
    kicks: &[f64],
    ks: &[FockIndex],
) -> Result<Vec<KickScanRow>> {
    if let Some(bad) = kicks.iter().find(|k| !k.is_finite()) {
        return Err(Error::invalid(format!("kick grid contains {bad}")));
    }
    let builder = FloquetBuilder::new(basis)?;
    let start = fock_block(basis, ks)?;
    let per_kick: Vec<Vec<KickScanRow>> = kicks
        .par_iter()
        .map(|&kick| scan_point(&builder, base, sigmas, t_fixed, kick, ks, &start))
        .collect::<Result<_>>()?;
    Ok(per_kick.into_iter().flatten().collect())
}

fn scan_point(
    builder: &FloquetBuilder,
    base: &ModelParams,
    sigmas: &[f64],
    t_fixed: usize,
    kick: f64,
    ks: &[FockIndex],
    start: &DMatrix<Complex64>,
) -> Result<Vec<KickScanRow>> {
    let params = base.with_kick(kick);
    let unperturbed = builder.propagator(&params, false)?;
    let mut scratch = DMatrix::zeros(start.nrows(), start.ncols());
    let mut ket = start.clone();
    unperturbed.step_block(Side::Plain, &mut ket, &mut scratch, t_fixed);
    spinspace::check_block_norms(&ket, "unperturbed kick")?;
    let mut rows = Vec::with_capacity(sigmas.len() * ks.len());
    for &sigma in sigmas {
        let p = params.with_sigma(sigma);
        let mut bra = start.clone();
        if sigma != 0.0 {
            builder
                .propagator(&p, true)?
                .step_block(Side::Plain, &mut bra, &mut scratch, t_fixed);
        } else {
            bra.copy_from(&ket);
        }
        spinspace::check_block_norms(&bra, "perturbed kick")?;
        for (j, &k) in ks.iter().enumerate() {
            let m = if sigma == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                linalg::dot_conj(bra.column(j).as_slice(), ket.column(j).as_slice())
            };
            rows.push(KickScanRow {
                kick,
                sigma,
                k,
                fidelity: sample(t_fixed, m)?.probability,
            });
        }
    }
    Ok(rows)
}

/// Both sides of the observable-difference identity at `(k, n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityCheck {
    /// `A_kk^H(n) - A_kk^{H0}(n)` from direct expectation values.
    pub lhs: f64,
    /// The primed double sum plus the diagonal correction.
    pub rhs: f64,
    /// `Σ'_{ll'} m_kl m_kl'* A_ll'^{H0}` with only the `(k, k)` term dropped.
    pub primed_sum: f64,
    /// `(M_kk - 1) A_kk^{H0}`, the part of the `(k, k)` term that the
    /// primed sum does not account for.
    pub diagonal_correction: f64,
    pub abs_diff: f64,
}

/// Evaluates `A_kk^H(n) - A_kk^{H0}(n)` directly and through the echo
/// amplitudes `m_kl(n) = ⟨k|(Û_ε†)ⁿ Ûⁿ|l⟩`.
///
/// Inserting the resolution of identity gives the full double sum
/// `Σ_{ll'} m_kl m_kl'* A_ll'^{H0} = A_kk^H`. Removing the single `(k, k)`
/// term leaves `A_kk^H - M_kk A_kk^{H0}`, so the difference of
/// expectations equals the primed sum plus `(M_kk - 1) A_kk^{H0}`; that
/// combination is reported as `rhs`.
pub fn observable_difference_check(
    basis: &SpinBasis,
    params: &ModelParams,
    a: &HermitianOperator,
    k: FockIndex,
    n: u64,
) -> Result<IdentityCheck> {
    basis.check_same(a.basis())?;
    let kr = basis.row(k)?;
    let pair = FloquetBuilder::new(basis)?.pair(params)?;
    let p0 = pair.unperturbed.pow(n);
    let p = pair.perturbed.pow(n);
    let am = a.matrix();

    let heisenberg = |u: &UnitaryOperator| -> DMatrix<Complex64> {
        let au = linalg::matmul(am, Side::Plain, u.matrix());
        linalg::matmul(u.matrix(), Side::Adjoint, &au)
    };
    let a0 = heisenberg(&p0);
    let a_pert = heisenberg(&p);
    let lhs_c = a_pert[(kr, kr)] - a0[(kr, kr)];

    let echo = p.adjoint_compose(&p0)?;
    let m_row: Vec<Complex64> = (0..basis.dim()).map(|l| echo.matrix()[(kr, l)]).collect();

    let mut primed = Complex64::new(0.0, 0.0);
    for (l, &ml) in m_row.iter().enumerate() {
        for (lp, &mlp) in m_row.iter().enumerate() {
            if l == kr && lp == kr {
                continue;
            }
            primed += ml * mlp.conj() * a0[(l, lp)];
        }
    }
    let m_kk = m_row[kr].norm_sqr();
    let correction = (m_kk - 1.0) * a0[(kr, kr)];
    let rhs_c = primed + correction;

    for (what, z) in [("lhs", lhs_c), ("rhs", rhs_c)] {
        if z.im.abs() > spinspace::EXPECTATION_IMAG_TOLERANCE * (1.0 + z.re.abs()) {
            return Err(Error::Numerical(format!(
                "identity {what} has imaginary part {:.3e}",
                z.im
            )));
        }
    }
    Ok(IdentityCheck {
        lhs: lhs_c.re,
        rhs: rhs_c.re,
        primed_sum: primed.re,
        diagonal_correction: correction.re,
        abs_diff: (lhs_c.re - rhs_c.re).abs(),
    })
}

/// `(G + G†)/2` for a seeded standard complex Gaussian `G`.
pub fn random_hermitian(basis: &SpinBasis, seed: u64) -> HermitianOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = basis.dim();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    let h = (&g + g.adjoint()).map(|z| z * 0.5);
    HermitianOperator::new(*basis, format!("random Hermitian (seed {seed})"), h)
        .expect("symmetrized matrix is Hermitian")
}
