//! Reading a fidelity amplitude off a double-well expansion image.
//!
//! Two condensates whose internal states evolved under couplings `K` and
//! `K + δK` are released and overlap. With single-particle envelopes `χ₁`,
//! `χ₂` the density is
//!
//! `P(x) = |χ₁|² + |χ₂|² + 2 Re[f̃ χ₁ χ₂*]`,
//!
//! where `f̃ = ⟨φ|U₂† U₁|φ⟩` is the fidelity amplitude of the internal
//! state. Given the envelopes, `f̃` follows from a linear least-squares fit
//! of the fringe residual.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::floquet::{FloquetBuilder, FloquetPair, ModelParams};
use crate::linalg::{self, Side};
use crate::spinspace::{self, SpinBasis, StateVector};
use crate::{Error, Result};

/// Packets must fit this many widths on each side of their centre.
pub const GRID_MARGIN_WIDTHS: f64 = 6.0;

/// Uniform 1-D grid `x_i = start + i · spacing`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    start: f64,
    spacing: f64,
    len: usize,
}

impl Grid {
    pub fn new(start: f64, spacing: f64, len: usize) -> Result<Self> {
        if !(start.is_finite() && spacing.is_finite() && spacing > 0.0) || len < 2 {
            return Err(Error::invalid(format!(
                "grid needs finite start, positive spacing and ≥ 2 points (got {start}, {spacing}, {len})"
            )));
        }
        Ok(Grid { start, spacing, len })
    }

    /// `len` points covering `[mid - half_span, mid + half_span]`.
    pub fn spanning(mid: f64, half_span: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::invalid("grid needs at least two points"));
        }
        Grid::new(mid - half_span, 2.0 * half_span / (len - 1) as f64, len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.position(self.len - 1)
    }

    pub fn position(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.position(i))
    }
}

/// `χ(x) = A exp(-(x - c)²/(4w²)) exp(iqx)` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WavePacket {
    pub grid: Grid,
    pub center: f64,
    pub width: f64,
    pub wavevector: f64,
    pub amplitude: f64,
}

impl WavePacket {
    pub fn new(grid: Grid, center: f64, width: f64, wavevector: f64, amplitude: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid(format!("packet width {width} must be positive")));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid(format!("packet amplitude {amplitude} must be positive")));
        }
        if !(center.is_finite() && wavevector.is_finite()) {
            return Err(Error::invalid("packet centre and wavevector must be finite"));
        }
        let margin = GRID_MARGIN_WIDTHS * width;
        if grid.start() > center - margin || grid.end() < center + margin {
            return Err(Error::invalid(format!(
                "grid [{}, {}] does not span {GRID_MARGIN_WIDTHS} widths around centre {center}",
                grid.start(),
                grid.end()
            )));
        }
        Ok(WavePacket {
            grid,
            center,
            width,
            wavevector,
            amplitude,
        })
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.grid
            .positions()
            .map(|x| {
                let envelope = self.amplitude * (-(x - self.center).powi(2) / (4.0 * self.width * self.width)).exp();
                Complex64::from_polar(envelope, self.wavevector * x)
            })
            .collect()
    }

    /// Counter-propagating packets for a fringe fit: centres `±w/2`,
    /// wavevectors `±4π/w`, 2048 points over `[-10w, 10w]`. About sixteen
    /// fringes fall inside the overlap envelope.
    pub fn default_pair(width: f64) -> Result<(WavePacket, WavePacket)> {
        let grid = Grid::spanning(0.0, 10.0 * width, 2048)?;
        let q = 4.0 * std::f64::consts::PI / width;
        Ok((
            WavePacket::new(grid, -0.5 * width, width, q, 1.0)?,
            WavePacket::new(grid, 0.5 * width, width, -q, 1.0)?,
        ))
    }
}

/// Shot-noise model applied to a synthesized density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Noise {
    /// `P_i (1 + r ξ_i)` with standard normal `ξ_i`; draws that would make
    /// `P_i` negative are rejected and redrawn.
    Multiplicative { relative: f64, seed: u64 },
    /// `atoms` positions drawn from `P` and binned on the grid, rescaled to
    /// the total weight of `P`.
    Multinomial { atoms: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterferencePattern {
    pub grid: Grid,
    pub intensities: Vec<f64>,
    pub noise: Option<Noise>,
}

/// Fidelity amplitude `f̃ = ⟨φ|U₂†ⁿ U₁ⁿ|φ⟩` for wells kicked with `K` and `K + δK`.
pub fn two_well_fidelity(basis: &SpinBasis, params: &ModelParams, delta_k: f64, initial: &StateVector, n: usize) -> Result<Complex64> {
    two_well_fidelity_after_release(basis, params, delta_k, initial, n, 0)
}

/// As [`two_well_fidelity`], followed by `n_free` periods with the coupling
/// switched off in both wells.
pub fn two_well_fidelity_after_release(
    basis: &SpinBasis,
    params: &ModelParams,
    delta_k: f64,
    initial: &StateVector,
    n_coupled: usize,
    n_free: usize,
) -> Result<Complex64> {
    basis.check_same(initial.basis())?;
    if !delta_k.is_finite() {
        return Err(Error::invalid(format!("delta_K = {delta_k} is not finite")));
    }
    let builder = FloquetBuilder::new(basis)?;
    let base = params.with_sigma(0.0);
    let pair = FloquetPair {
        unperturbed: builder.propagator(&base, false)?,
        perturbed: builder.propagator(&base.with_kick(params.kick + delta_k), false)?,
    };
    let dim = basis.dim();
    let mut well1 = DMatrix::from_column_slice(dim, 1, initial.amplitudes().as_slice());
    let mut well2 = well1.clone();
    let mut scratch = DMatrix::zeros(dim, 1);
    pair.unperturbed.step_block(Side::Plain, &mut well1, &mut scratch, n_coupled);
    pair.perturbed.step_block(Side::Plain, &mut well2, &mut scratch, n_coupled);
    if n_free > 0 {
        let free = builder.propagator(&base.with_kick(0.0), false)?;
        free.step_block(Side::Plain, &mut well1, &mut scratch, n_free);
        free.step_block(Side::Plain, &mut well2, &mut scratch, n_free);
    }
    spinspace::check_block_norms(&well1, "first well")?;
    spinspace::check_block_norms(&well2, "second well")?;
    Ok(linalg::dot_conj(well2.as_slice(), well1.as_slice()))
}

fn check_grids(chi1: &WavePacket, chi2: &WavePacket) -> Result<()> {
    if chi1.grid != chi2.grid {
        return Err(Error::invalid("the two packets live on different grids"));
    }
    Ok(())
}

/// `P = |χ₁|² + |χ₂|² + 2 Re[f̃ χ₁ χ₂*]`, optionally with shot noise.
pub fn synthesize_pattern(chi1: &WavePacket, chi2: &WavePacket, f_tilde: Complex64, noise: Option<Noise>) -> Result<InterferencePattern> {
    check_grids(chi1, chi2)?;
    if !(f_tilde.norm() <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!("|f| = {} exceeds one", f_tilde.norm())));
    }
    let (a, b) = (chi1.values(), chi2.values());
    let mut p: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| x.norm_sqr() + y.norm_sqr() + 2.0 * (f_tilde * x * y.conj()).re)
        .collect();
    match noise {
        None => {}
        Some(Noise::Multiplicative { relative, seed }) => {
            if !(relative >= 0.0 && relative.is_finite()) {
                return Err(Error::invalid(format!("noise amplitude {relative} must be non-negative")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for v in p.iter_mut() {
                let clean = v.max(0.0);
                *v = loop {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    let noisy = clean * (1.0 + relative * xi);
                    if noisy >= 0.0 {
                        break noisy;
                    }
                };
            }
        }
        Some(Noise::Multinomial { atoms, seed }) => {
            if atoms == 0 {
                return Err(Error::invalid("multinomial noise needs at least one atom"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let weights: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
            let total: f64 = weights.iter().sum();
            let mut remaining_atoms = atoms;
            let mut remaining_mass = total;
            for (v, w) in p.iter_mut().zip(&weights) {
                let count = if remaining_atoms == 0 || remaining_mass <= 0.0 {
                    0
                } else {
                    let prob = (w / remaining_mass).clamp(0.0, 1.0);
                    Binomial::new(remaining_atoms, prob)
                        .map_err(|e| Error::Numerical(format!("binomial draw: {e}")))?
                        .sample(&mut rng)
                };
                remaining_atoms -= count;
                remaining_mass -= w;
                *v = count as f64 * total / atoms as f64;
            }
        }
    }
    Ok(InterferencePattern {
        grid: chi1.grid,
        intensities: p,
        noise,
    })
}

/// Recovered `|f̃|` and its phase `θ_f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityEstimate {
    pub magnitude: f64,
    pub phase: f64,
}

impl FidelityEstimate {
    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

/// Least-squares fit of `R = P - |χ₁|² - |χ₂|²` against `2Re[χ₁χ₂*]` and
/// `-2Im[χ₁χ₂*]`, whose coefficients are `Re f̃` and `Im f̃`.
pub fn extract_fidelity(pattern: &InterferencePattern, chi1: &WavePacket, chi2: &WavePacket) -> Result<FidelityEstimate> {
    check_grids(chi1, chi2)?;
    if pattern.grid != chi1.grid || pattern.intensities.len() != chi1.grid.len() {
        return Err(Error::invalid("pattern grid differs from the packet grid"));
    }
    let (a, b) = (chi1.values(), chi2.values());
    let (mut uu, mut uv, mut vv, mut ur, mut vr) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut cross, mut own) = (0.0, 0.0);
    for ((x, y), p) in a.iter().zip(&b).zip(&pattern.intensities) {
        let c = x * y.conj();
        let (u, v) = (2.0 * c.re, -2.0 * c.im);
        let r = p - x.norm_sqr() - y.norm_sqr();
        uu += u * u;
        uv += u * v;
        vv += v * v;
        ur += u * r;
        vr += v * r;
        cross += c.norm_sqr();
        own += x.norm_sqr().powi(2) + y.norm_sqr().powi(2);
    }
    let det = uu * vv - uv * uv;
    if !(cross > 1e-12 * own) || !(det > 1e-10 * uu * vv) {
        return Err(Error::Geometry(
            "packet envelopes do not overlap enough to resolve fringes".into(),
        ));
    }
    let re = (vv * ur - uv * vr) / det;
    let im = (uu * vr - uv * ur) / det;
    Ok(FidelityEstimate {
        magnitude: re.hypot(im),
        phase: im.atan2(re),
    })
}
