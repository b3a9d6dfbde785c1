//! One-period propagators of the pulsed two-mode condensate.
//!
//! `U = exp[-i(μ L̂z + g L̂z²)T] · exp(-i K L̂x)`, with the kick applied to
//! the state first. The physical Planck constant inside the exponent is 1;
//! the effective `ħ = 1/L` only converts the quantum perturbation strength
//! `σ` into the coupling shift `ε = σ/L`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::Side;
use crate::spinspace::{self, Spectrum, SpinBasis, StateVector, UnitaryOperator};
use crate::{Error, Result};

/// Dimensionless model constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Linear Zeeman-like term, conventionally 1.
    pub mu: f64,
    /// Rescaled interaction `g_c = gL`; the propagator uses `g = g_c/L`.
    pub g_c: f64,
    /// Kick strength `K`.
    pub kick: f64,
    /// Period `T` of the free evolution between kicks.
    pub period: f64,
    /// Quantum perturbation strength `σ = ε/ħ_eff`.
    pub sigma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            mu: 1.0,
            g_c: 0.2,
            kick: 1.0,
            period: 1.0,
            sigma: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu", self.mu),
            ("g_c", self.g_c),
            ("K", self.kick),
            ("T", self.period),
            ("sigma", self.sigma),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} = {v} is not finite")));
            }
        }
        if self.period <= 0.0 {
            return Err(Error::invalid(format!("T = {} must be positive", self.period)));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid(format!("sigma = {} must be non-negative", self.sigma)));
        }
        Ok(())
    }

    /// `g = g_c / L`.
    pub fn interaction(&self, basis: &SpinBasis) -> f64 {
        self.g_c / basis.l()
    }

    /// Coupling shift `ε = σ ħ_eff = σ / L`, derived fresh for each basis.
    pub fn epsilon(&self, basis: &SpinBasis) -> f64 {
        self.sigma * basis.hbar_eff()
    }

    /// `K` or `K + ε`.
    pub fn effective_kick(&self, basis: &SpinBasis, perturbed: bool) -> f64 {
        if perturbed {
            self.kick + self.epsilon(basis)
        } else {
            self.kick
        }
    }

    pub fn with_kick(self, kick: f64) -> Self {
        ModelParams { kick, ..self }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        ModelParams { sigma, ..self }
    }
}

/// Diagonal `exp[-i(μl + gl²)T]` in row order, evaluated elementwise.
pub fn free_phases(basis: &SpinBasis, params: &ModelParams) -> DVector<Complex64> {
    let g = params.interaction(basis);
    DVector::from_iterator(
        basis.dim(),
        basis.indices().map(|l| {
            let l = l.value();
            Complex64::from_polar(1.0, -(params.mu * l + g * l * l) * params.period)
        }),
    )
}

/// Builds Floquet operators for one basis, sharing a single `L̂x`
/// eigendecomposition across every kick strength.
#[derive(Clone, Debug)]
pub struct FloquetBuilder {
    basis: SpinBasis,
    lx: Spectrum,
}

impl FloquetBuilder {
    pub fn new(basis: &SpinBasis) -> Result<Self> {
        Ok(FloquetBuilder {
            basis: *basis,
            lx: spinspace::op_lx(basis).spectrum()?,
        })
    }

    pub fn basis(&self) -> &SpinBasis {
        &self.basis
    }

    /// `exp(-i K' L̂x)`.
    pub fn kick(&self, strength: f64) -> UnitaryOperator {
        self.lx.unitary(strength)
    }

    /// `D·X` with `K' = K` or `K + σ/L`.
    pub fn propagator(&self, params: &ModelParams, perturbed: bool) -> Result<UnitaryOperator> {
        params.validate()?;
        let kick = self.kick(params.effective_kick(&self.basis, perturbed));
        let phases = free_phases(&self.basis, params);
        let mut m: DMatrix<Complex64> = kick.matrix().clone();
        for (i, p) in phases.iter().enumerate() {
            for z in m.row_mut(i).iter_mut() {
                *z *= p;
            }
        }
        Ok(UnitaryOperator::from_raw(self.basis, m))
    }

    /// Unperturbed and perturbed propagators.
    pub fn pair(&self, params: &ModelParams) -> Result<FloquetPair> {
        let unperturbed = self.propagator(params, false)?;
        let perturbed = if params.sigma == 0.0 {
            unperturbed.clone()
        } else {
            self.propagator(params, true)?
        };
        Ok(FloquetPair { unperturbed, perturbed })
    }
}

/// `Û` and `Û_ε` for one parameter set.
#[derive(Clone, Debug)]
pub struct FloquetPair {
    pub unperturbed: UnitaryOperator,
    pub perturbed: UnitaryOperator,
}

/// One-period propagator.
pub fn build_floquet(basis: &SpinBasis, params: &ModelParams, perturbed: bool) -> Result<UnitaryOperator> {
    FloquetBuilder::new(basis)?.propagator(params, perturbed)
}

/// `Uⁿ|s⟩`, time counted in whole kick periods.
pub fn evolve(u: &UnitaryOperator, s: &StateVector, n_periods: usize) -> Result<StateVector> {
    u.basis().check_same(s.basis())?;
    let mut block = DMatrix::from_column_slice(s.basis().dim(), 1, s.amplitudes().as_slice());
    let mut scratch = DMatrix::zeros(block.nrows(), 1);
    u.step_block(Side::Plain, &mut block, &mut scratch, n_periods);
    spinspace::check_block_norms(&block, "kicked evolution")?;
    Ok(StateVector::from_raw(*s.basis(), DVector::from_column_slice(block.as_slice())))
}
