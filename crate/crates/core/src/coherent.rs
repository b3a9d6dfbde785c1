//! SU(2) coherent states on the Fock basis.
//!
//! `|α⟩ = exp(α* L̂₊ - α L̂₋)|-L⟩` with `α = (π-θ)/2 · e^{-iφ}` is centred
//! at polar angle `θ` and azimuth `φ`. Its Fock amplitudes are
//!
//! `⟨l|α⟩ = τ^{L+l} / (1+|τ|²)^L · √C(2L, L+l)`, `τ = e^{iφ} cot(θ/2)`,
//!
//! so `|⟨α|l⟩|² = C(2L, L+l) cos^{2(L+l)}(θ/2) sin^{2(L-l)}(θ/2)`. Every
//! factor is evaluated as a logarithm; `C(200, 100)` alone is ~1e59.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::spinspace::{fock_state, FockIndex, SpinBasis, StateVector};
use crate::{Error, Result};

/// Point on the Bloch sphere, `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereAngle {
    theta: f64,
    phi: f64,
}

impl SphereAngle {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid(format!("theta = {theta} outside [0, π]")));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::invalid(format!("phi = {phi} outside [0, 2π)")));
        }
        Ok(SphereAngle { theta, phi })
    }

    /// Clamps `θ` into `[0, π]` and wraps `φ` into `[0, 2π)`.
    pub fn wrapped(theta: f64, phi: f64) -> Self {
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        SphereAngle {
            theta: theta.clamp(0.0, PI),
            phi,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// `ln C(n, m)` via log-Gamma.
fn ln_binomial(n: u32, m: u32) -> f64 {
    let (n, m) = (f64::from(n), f64::from(m));
    libm::lgamma(n + 1.0) - libm::lgamma(m + 1.0) - libm::lgamma(n - m + 1.0)
}

/// `count · ln(x)` with `0 · ln 0 = 0`.
fn weighted_log(count: u32, ln_x: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        f64::from(count) * ln_x
    }
}

/// Per-basis table of `½ ln C(2L, L+l)`.
struct Binomials {
    n: u32,
    half_ln: Vec<f64>,
}

impl Binomials {
    fn new(basis: &SpinBasis) -> Self {
        let n = basis.two_l();
        Binomials {
            n,
            half_ln: (0..=n).map(|m| 0.5 * ln_binomial(n, m)).collect(),
        }
    }

    /// `ln |⟨l|α⟩|` for row `m = L + l`.
    fn ln_modulus(&self, m: usize, ln_cos: f64, ln_sin: f64) -> f64 {
        let up = m as u32;
        self.half_ln[m] + weighted_log(up, ln_cos) + weighted_log(self.n - up, ln_sin)
    }

    fn amplitudes(&self, angle: &SphereAngle) -> DVector<Complex64> {
        let half = angle.theta / 2.0;
        let (ln_cos, ln_sin) = (half.cos().ln(), half.sin().ln());
        DVector::from_iterator(
            self.half_ln.len(),
            (0..self.half_ln.len()).map(|m| {
                Complex64::from_polar(self.ln_modulus(m, ln_cos, ln_sin).exp(), m as f64 * angle.phi)
            }),
        )
    }
}

/// Coherent state centred at `angle`; the poles return exact Fock states.
pub fn coherent_state(basis: &SpinBasis, angle: &SphereAngle) -> StateVector {
    if angle.theta == PI {
        return fock_state(basis, basis.lowest()).expect("lowest index is valid");
    }
    if angle.theta == 0.0 {
        return fock_state(basis, basis.highest()).expect("highest index is valid");
    }
    let amps = Binomials::new(basis).amplitudes(angle);
    StateVector::normalized(*basis, amps).expect("coherent amplitudes are nonzero")
}

/// Closed-form `|⟨α|l⟩|²`, independent of `φ`.
pub fn overlap_probability(basis: &SpinBasis, angle: &SphereAngle, l: FockIndex) -> Result<f64> {
    let m = basis.row(l)? as u32;
    let n = basis.two_l();
    if angle.theta == PI {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    if angle.theta == 0.0 {
        return Ok(if m == n { 1.0 } else { 0.0 });
    }
    let half = angle.theta / 2.0;
    let ln_p = ln_binomial(n, m) + weighted_log(2 * m, half.cos().ln()) + weighted_log(2 * (n - m), half.sin().ln());
    Ok(ln_p.exp())
}

const GRID_THETA: usize = 181;
const GRID_PHI: usize = 72;
const REFINE_ROUNDS: usize = 4;
const GOLDEN_ITERS: usize = 60;

/// Best coherent-state match for `state`, if `1 - max|⟨α|ψ⟩|² < tolerance`.
///
/// Heuristic: a 181 × 72 grid in `(θ, φ)` followed by alternating
/// golden-section refinement in each angle around the best grid point.
pub fn is_coherent(state: &StateVector, tolerance: f64) -> Option<SphereAngle> {
    let (angle, overlap) = best_coherent_match(state);
    (1.0 - overlap < tolerance).then_some(angle)
}

/// Maximizer of `|⟨α|ψ⟩|²` over the sphere and the maximum itself.
pub fn best_coherent_match(state: &StateVector) -> (SphereAngle, f64) {
    let basis = *state.basis();
    let table = Binomials::new(&basis);
    let psi = state.amplitudes();
    let fidelity = |theta: f64, phi: f64| -> f64 {
        let angle = SphereAngle::wrapped(theta, phi);
        let alpha = if angle.theta == PI || angle.theta == 0.0 {
            coherent_state(&basis, &angle).into_amplitudes()
        } else {
            table.amplitudes(&angle)
        };
        alpha.iter().zip(psi.iter()).map(|(a, p)| a.conj() * p).sum::<Complex64>().norm_sqr()
    };

    let d_theta = PI / (GRID_THETA - 1) as f64;
    let d_phi = TAU / GRID_PHI as f64;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..GRID_THETA {
        let theta = i as f64 * d_theta;
        for j in 0..GRID_PHI {
            let phi = j as f64 * d_phi;
            let f = fidelity(theta, phi);
            if f > best.2 {
                best = (theta, phi, f);
            }
        }
    }

    let (mut theta, mut phi, mut value) = best;
    for _ in 0..REFINE_ROUNDS {
        let (t, v) = golden_max(|t| fidelity(t, phi), (theta - d_theta).max(0.0), (theta + d_theta).min(PI));
        if v > value {
            theta = t;
            value = v;
        }
        // φ is irrelevant at the poles
        if theta > 0.0 && theta < PI {
            let (p, v) = golden_max(|p| fidelity(theta, p), phi - d_phi, phi + d_phi);
            if v > value {
                phi = p;
                value = v;
            }
        }
    }
    (SphereAngle::wrapped(theta, phi), value)
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..GOLDEN_ITERS {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        }
    }
    // endpoints matter when the optimum sits on a pole
    [(lo, f(lo)), (hi, f(hi)), (a, fa), (b, fb)]
        .into_iter()
        .fold((lo, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
}
