//! Named parameter bindings for the standard datasets.

use super::config::{ExperimentConfig, Kind};
use crate::Result;

pub struct Recipe {
    pub name: &'static str,
    pub kind: Kind,
    pub summary: &'static str,
    pub base: &'static [(&'static str, &'static str)],
    pub bindings: &'static [(&'static str, &'static str)],
}

const DECAY: [(&str, &str); 5] = [
    ("n_atoms", "200"),
    ("K", "1"),
    ("g_c", "0.2"),
    ("sigma", "0.1"),
    ("n_max", "2000"),
];

const REGULAR: [(&str, &str); 5] = [
    ("n_atoms", "200"),
    ("K", "2"),
    ("g_c", "0.17"),
    ("sigma", "0.5"),
    ("n_max", "2000"),
];

const SCAN: [(&str, &str); 7] = [
    ("n_atoms", "200"),
    ("g_c", "0.2"),
    ("t", "1000"),
    ("K_min", "0"),
    ("K_max", "4"),
    ("K_step", "0.01"),
    ("k", "-100,-50,0,50,100"),
];

pub const RECIPES: [Recipe; 11] = [
    Recipe {
        name: "fig1",
        kind: Kind::FidelityCurve,
        summary: "fidelity decay of five Fock states",
        base: &DECAY,
        bindings: &[("k", "-100,-75,0,75,100")],
    },
    Recipe {
        name: "fig2",
        kind: Kind::FidelityCurve,
        summary: "fidelity decay next to the top of the ladder",
        base: &DECAY,
        bindings: &[("k", "100,99,98,97")],
    },
    Recipe {
        name: "fig3a",
        kind: Kind::FidelityVsK,
        summary: "M(1000) against kick strength, weak perturbation",
        base: &SCAN,
        bindings: &[("sigma", "0.01")],
    },
    Recipe {
        name: "fig3b",
        kind: Kind::FidelityVsK,
        summary: "M(1000) against kick strength, stronger perturbation",
        base: &SCAN,
        bindings: &[("sigma", "0.04")],
    },
    Recipe {
        name: "fig4",
        kind: Kind::CoherentOverlap,
        summary: "coherent-state overlaps with Fock states near both poles",
        base: &[],
        bindings: &[("n_atoms", "200"), ("l", "100,99,98,-100,-99,-98"), ("theta_steps", "361")],
    },
    Recipe {
        name: "fig5",
        kind: Kind::EchoMatrix,
        summary: "generalized echo into l = -31 from every k",
        base: &REGULAR,
        bindings: &[("l", "-31"), ("k", "all"), ("n_stride", "5")],
    },
    Recipe {
        name: "fig6",
        kind: Kind::EchoMatrix,
        summary: "generalized echo into l = -100 from every k",
        base: &REGULAR,
        bindings: &[("l", "-100"), ("k", "all"), ("n_stride", "5")],
    },
    Recipe {
        name: "fig7",
        kind: Kind::SkCumulative,
        summary: "cumulative echo S_k into l = -100 at several times",
        base: &REGULAR,
        bindings: &[("l", "-100"), ("times", "200,500,800,1100,1450")],
    },
    Recipe {
        name: "peaktrack",
        kind: Kind::PeakTrack,
        summary: "echo peak centres into l = -100 against k",
        base: &REGULAR,
        bindings: &[("l", "-100"), ("k", "all"), ("threshold_frac", "0.1"), ("min_gap", "20")],
    },
    Recipe {
        name: "identity",
        kind: Kind::IdentityCheck,
        summary: "observable-difference identity for a random Hermitian observable",
        base: &[],
        bindings: &[("n_atoms", "16"), ("K", "1"), ("g_c", "0.2"), ("sigma", "0.3"), ("k", "0"), ("n_max", "50")],
    },
    Recipe {
        name: "interference",
        kind: Kind::InterferenceDemo,
        summary: "two-well fringe pattern and fidelity recovery",
        base: &[],
        bindings: &[
            ("n_atoms", "200"),
            ("K", "1"),
            ("g_c", "0.2"),
            ("delta_k", "0.001"),
            ("k", "100"),
            ("t", "200"),
            ("width", "1"),
            ("noise", "0.01"),
        ],
    },
];

pub fn find(name: &str) -> Option<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name)
}

impl Recipe {
    pub fn all_bindings(&self) -> impl Iterator<Item = &'static (&'static str, &'static str)> {
        self.base.iter().chain(self.bindings)
    }

    pub fn config(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::new(self.kind);
        for (k, v) in self.all_bindings() {
            c.set(k, v)?;
        }
        Ok(c)
    }
}

/// Text printed by `echo-lab list`.
pub fn listing() -> String {
    let mut out = String::from("recipes:\n");
    for r in &RECIPES {
        let binds: Vec<String> = r.all_bindings().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("  {:<13}{} ({})\n               {}\n", r.name, r.kind, r.summary, binds.join(" ")));
    }
    out.push_str("experiment kinds:\n");
    for k in Kind::ALL {
        out.push_str(&format!("  {k}\n"));
    }
    out
}
