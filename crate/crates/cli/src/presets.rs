//! Named experiment presets, one per published figure.

use clap::ValueEnum;
use serde::Serialize;

use pom_qsd::{Coupling, ModelParams};

use crate::config::{Audit, Output, RunConfig, Solver, SolverKind, SweepAxis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FigurePreset {
    /// Case I coefficient F1 for γ ∈ {0.5, 5}, Ω ∈ {0, 1, 1.8}.
    Fig2,
    /// Case I negativities from |101⟩ for γ ∈ {0.1, 0.2, 5}.
    Fig3,
    /// Case II coefficients F1, F2 for γ ∈ {0.5, 5}, Ω ∈ {0, 1, 1.8}.
    Fig4,
    /// Case I negativities from |101⟩ at γ = 1 for Ω from 0 to 5.
    Fig5,
    /// Case II negativities from |000⟩ for γ ∈ {0.2, 0.5, 1}.
    Fig6,
    /// Case II N_om from |000⟩ at γ = 0.5 for several Ω.
    Fig7,
    /// Case II ESD time of N_me versus Ω, with a through-origin fit.
    Fig8,
}

fn axis(parameter: &str, values: &[f64]) -> SweepAxis {
    SweepAxis {
        parameter: parameter.into(),
        values: values.to_vec(),
    }
}

impl FigurePreset {
    pub fn name(self) -> &'static str {
        match self {
            FigurePreset::Fig2 => "fig2",
            FigurePreset::Fig3 => "fig3",
            FigurePreset::Fig4 => "fig4",
            FigurePreset::Fig5 => "fig5",
            FigurePreset::Fig6 => "fig6",
            FigurePreset::Fig7 => "fig7",
            FigurePreset::Fig8 => "fig8",
        }
    }

    pub fn config(self) -> RunConfig {
        let case = match self {
            FigurePreset::Fig2 | FigurePreset::Fig3 | FigurePreset::Fig5 => Coupling::WeakRwa,
            _ => Coupling::StrongFull,
        };
        let strong = case == Coupling::StrongFull;
        let mut c = RunConfig {
            name: self.name().into(),
            model: ModelParams::with_case(case),
            initial_state: if strong { [0, 0, 0] } else { [1, 0, 1] },
            solver: Solver {
                kind: SolverKind::Master,
                n_traj: 256,
            },
            audit: Audit {
                enabled: strong,
                ..RunConfig::default().audit
            },
            ..RunConfig::default()
        };
        let ents = vec![Output::Observables, Output::Negativity];
        match self {
            FigurePreset::Fig2 | FigurePreset::Fig4 => {
                c.t_max = 50.0;
                c.outputs = vec![Output::Coeffs];
                c.audit.enabled = false;
                c.sweep = vec![axis("gamma_env", &[0.5, 5.0]), axis("omega_env", &[0.0, 1.0, 1.8])];
            }
            FigurePreset::Fig3 => {
                c.t_max = 100.0;
                c.outputs = ents;
                c.sweep = vec![axis("gamma_env", &[0.1, 0.2, 5.0])];
            }
            FigurePreset::Fig5 => {
                c.t_max = 100.0;
                c.outputs = ents;
                c.model.gamma_env = 1.0;
                let omegas: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
                c.sweep = vec![axis("omega_env", &omegas)];
            }
            FigurePreset::Fig6 => {
                c.t_max = 60.0;
                c.outputs = ents;
                c.sweep = vec![axis("gamma_env", &[0.2, 0.5, 1.0])];
            }
            FigurePreset::Fig7 => {
                c.t_max = 60.0;
                c.outputs = ents;
                c.model.gamma_env = 0.5;
                c.sweep = vec![axis("omega_env", &[0.0, 0.5, 1.2, 1.6, 2.0, 2.4])];
            }
            FigurePreset::Fig8 => {
                c.t_max = 60.0;
                c.outputs = ents;
                c.model.gamma_env = 0.5;
                c.sweep = vec![axis("omega_env", &[1.2, 1.6, 2.0, 2.4])];
            }
        }
        c
    }
}
