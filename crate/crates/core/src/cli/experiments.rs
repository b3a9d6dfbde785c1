//! Dispatch from a resolved config to CSV text.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Kind, NoiseMode};
use crate::coherent::{overlap_probability, SphereAngle};
use crate::fidelity::{
    cumulative_sk, echo_matrix, fidelity_at_time_vs_kick, fidelity_curves, observable_difference_check,
    random_hermitian, track_peak_centers, EchoMatrix,
};
use crate::interference::{extract_fidelity, synthesize_pattern, two_well_fidelity, Noise, WavePacket};
use crate::spinspace::{fock_state, FockIndex, SpinBasis};
use crate::Result;

/// A finished run: `#` header lines and the deterministic CSV body.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub header: String,
    pub body: String,
}

impl RunOutput {
    pub fn render(&self) -> String {
        format!("{}{}", self.header, self.body)
    }
}

pub fn header(config: &ExperimentConfig) -> String {
    let mut h = format!("# echo-lab {}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in config.entries() {
        let _ = writeln!(h, "# {k} = {v}");
    }
    h
}

/// Runs `config` on the current rayon pool.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let basis = config.basis()?;
    let body = match config.kind {
        Kind::FidelityCurve => fidelity_curve_csv(config, &basis)?,
        Kind::FidelityVsK => kick_scan_csv(config, &basis)?,
        Kind::EchoMatrix => echo_matrix_csv(config, &basis)?,
        Kind::PeakTrack => peak_track_csv(config, &basis)?,
        Kind::SkCumulative => sk_csv(config, &basis)?,
        Kind::CoherentOverlap => coherent_csv(config, &basis)?,
        Kind::IdentityCheck => identity_csv(config, &basis)?,
        Kind::InterferenceDemo => interference_csv(config, &basis)?,
    };
    Ok(RunOutput {
        header: header(config),
        body,
    })
}

/// Shortest round-trip float, switching to exponent form for tiny values.
struct F(f64);

impl std::fmt::Display for F {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Contiguous shards of `items`, one per worker. Columns of a zgemm block
/// do not interact, so the split does not change any value.
fn shards<T>(items: &[T]) -> impl Iterator<Item = &[T]> {
    let per = items.len().div_ceil(rayon::current_num_threads().max(1)).max(1);
    items.chunks(per)
}

fn single(set: &super::config::IndexSet, basis: &SpinBasis) -> FockIndex {
    set.resolve(basis)[0]
}

fn fidelity_curve_csv(c: &ExperimentConfig, basis: &SpinBasis) -> Result<String> {
    let ks = c.k.resolve(basis);
    let parts: Vec<&[FockIndex]> = shards(&ks).collect();
    let curves = parts
        .par_iter()
        .map(|part| fidelity_curves(basis, &c.params, part, c.n_max))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("n,k,M\n");
    for curve in curves.iter().flatten() {
        for s in curve.samples.iter().step_by(c.n_stride) {
            let _ = writeln!(out, "{},{},{}", s.n, curve.initial, F(s.probability));
        }
    }
    Ok(out)
}

fn kick_scan_csv(c: &ExperimentConfig, basis: &SpinBasis) -> Result<String> {
    let ks = c.k.resolve(basis);
    let rows = fidelity_at_time_vs_kick(basis, &c.params, &[c.params.sigma], c.t, &c.kicks(), &ks)?;
    let mut out = format!("K,k,M{}\n", c.t);
    for r in rows {
        let _ = writeln!(out, "{},{},{}", F(r.kick), r.k, F(r.fidelity));
    }
    Ok(out)
}

fn matrix_for(c: &ExperimentConfig, basis: &SpinBasis, n_max: usize) -> Result<EchoMatrix> {
    echo_matrix(basis, &c.params, single(&c.l, basis), &c.k.resolve(basis), n_max)
}

fn echo_matrix_csv(c: &ExperimentConfig, basis: &SpinBasis) -> Result<String> {
    let m = matrix_for(c, basis, c.n_max)?;
    let mut out = String::from("n,k,l,Mlk\n");
    for (j, k) in m.ks.iter().enumerate() {
        for n in (0..=m.n_max).step_by(c.n_stride) {
            let _ = writeln!(out, "{n},{k},{},{}", m.l, F(m.probability(j, n)));
        }
    }
    Ok(out)
}

fn peak_track_csv(c: &ExperimentConfig, basis: &SpinBasis) -> Result<String> {
    let m = matrix_for(c, basis, c.n_max)?;
    let track = track_peak_centers(&m, &c.peaks)?;
    let mut out = String::from("k,peak_index,center_n,height\n");
    for row in &track.rows {
        for (i, p) in row.peaks.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", row.k, i + 1, p.center_n, F(p.height));
        }
    }
    match track.merge_k {
        Some(k) => {
            let _ = writeln!(out, "# merge_k = {k}");
        }
        None => out.push_str("# merge_k = none\n"),
    }
    Ok(out)
}

fn sk_csv(c: &ExperimentConfig, basis: &SpinBasis) -> Result<String> {
    let n_max = c.times.iter().copied().max().unwrap_or(0);
    let ks: Vec<FockIndex> = basis.indices().collect();
    let m = echo_matrix(basis, &c.params, single(&c.l, basis), &ks, n_max)?;
    let mut out = String::from("k,t,S\n");
    for &t in &c.times {
        for (k, s) in ks.iter().zip(cumulative_sk(&m, t)?) {
            let _ = writeln!(out, "{k},{t},{}", F(s));
        }
    }
    Ok(out)
}

fn coherent_csv(c: &ExperimentConfig, basis: &SpinBasis) -> Result<String> {
    let steps = c.theta_steps - 1;
    let mut out = String::from("theta,l,overlap\n");
    for l in c.l.resolve(basis) {
        for i in 0..=steps {
            let theta = std::f64::consts::PI * i as f64 / steps as f64;
            let p = overlap_probability(basis, &SphereAngle::new(theta, 0.0)?, l)?;
            let _ = writeln!(out, "{},{l},{}", F(theta), F(p));
        }
    }
    Ok(out)
}

fn identity_csv(c: &ExperimentConfig, basis: &SpinBasis) -> Result<String> {
    let k = single(&c.k, basis);
    let a = random_hermitian(basis, c.seed);
    let checks = (0..=c.n_max as u64)
        .into_par_iter()
        .map(|n| observable_difference_check(basis, &c.params, &a, k, n))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("n,lhs,rhs,absdiff\n");
    for (n, r) in checks.iter().enumerate() {
        let _ = writeln!(out, "{n},{},{},{}", F(r.lhs), F(r.rhs), F(r.abs_diff));
    }
    Ok(out)
}

fn interference_csv(c: &ExperimentConfig, basis: &SpinBasis) -> Result<String> {
    let initial = fock_state(basis, single(&c.k, basis))?;
    let f_true = two_well_fidelity(basis, &c.params, c.delta_k, &initial, c.t)?;
    let (chi1, chi2) = WavePacket::default_pair(c.width)?;
    let noise = (c.noise > 0.0).then_some(match c.noise_mode {
        NoiseMode::Multiplicative => Noise::Multiplicative {
            relative: c.noise,
            seed: c.seed,
        },
        NoiseMode::Multinomial => Noise::Multinomial {
            atoms: c.atoms,
            seed: c.seed,
        },
    });
    let pattern = synthesize_pattern(&chi1, &chi2, f_true, noise)?;
    let est = extract_fidelity(&pattern, &chi1, &chi2)?;
    let mut out = String::from("x,P\n");
    for (x, p) in pattern.grid.positions().zip(&pattern.intensities) {
        let _ = writeln!(out, "{},{}", F(x), F(*p));
    }
    let _ = writeln!(
        out,
        "# summary f_mag_true={} f_mag_est={} f_phase_true={} f_phase_est={}",
        F(f_true.norm()),
        F(est.magnitude),
        F(f_true.arg()),
        F(est.phase)
    );
    Ok(out)
}
