//! Threshold tables shaped like the published figures.
//!
//! Cells hold the security threshold; an empty cell means the deviation
//! never beats honest mining inside the searched share bracket.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use volmine_core::closed_form::{strategy_threshold, Strategy};
use volmine_core::mdp::SolverOptions;
use volmine_core::simplified::{self, calibrate_to_werlman, Objective};
use volmine_core::werlman::{werlman_threshold, Caps, ThresholdOptions, Variant, WerlmanParams};
use volmine_core::{MiningConfig, Threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3,
    Fig5,
}

/// Parameter grid of a figure table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureParams {
    pub f_values: Vec<f64>,
    pub p: f64,
    pub g: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_fork_len: usize,
    pub max_pool: usize,
    /// Time-step counts compared in the volatility table.
    pub m_values: Vec<usize>,
    /// Blocks per minute.
    pub lambda: f64,
}

impl Default for FigureParams {
    fn default() -> Self {
        FigureParams {
            f_values: vec![0.26, 0.45, 0.74, 1.14, 1.58, 3.2],
            p: 0.001,
            g: 0.5,
            epsilon: 1e-6,
            tol: 1e-4,
            max_fork_len: 8,
            max_pool: 2,
            m_values: vec![2, 30],
            lambda: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn to_csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.map_or(String::new(), |v| v.to_string())))?;
        }
        Ok(w.into_inner()?)
    }
}

impl FigureParams {
    fn mining(&self) -> MiningConfig {
        MiningConfig {
            gamma: self.g,
            epsilon: self.epsilon,
            max_fork_len: self.max_fork_len,
            lambda_rate: self.lambda,
            ..MiningConfig::default()
        }
    }

    fn threshold_options(&self) -> ThresholdOptions {
        ThresholdOptions {
            tol: self.tol,
            solver: SolverOptions::default(),
            ..ThresholdOptions::default()
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(!self.f_values.is_empty(), "at least one F value is required");
        anyhow::ensure!(self.tol > 0.0, "tol must be positive");
        self.mining().validate()?;
        Ok(())
    }

    fn mdp_threshold(&self, f: f64, variant: Variant) -> anyhow::Result<Threshold> {
        let caps = Caps {
            max_pool: self.max_pool,
            ..Caps::default()
        };
        Ok(werlman_threshold(
            &WerlmanParams::new(f, self.p, variant),
            &self.mining(),
            &caps,
            &self.threshold_options(),
        )?)
    }

    fn strategy(&self, s: Strategy, f: f64) -> anyhow::Result<Threshold> {
        Ok(strategy_threshold(s, self.g, self.p, f, self.epsilon, self.tol)?)
    }

    fn simplified_post(&self, f: f64, m: usize) -> anyhow::Result<Threshold> {
        let schedule = calibrate_to_werlman(self.p, self.lambda, m, f)?;
        Ok(simplified::threshold(
            &schedule,
            &self.mining(),
            Objective::PostDam,
            &self.threshold_options(),
        )?)
    }
}

fn row(f: f64, cells: &[Threshold]) -> Vec<Option<f64>> {
    std::iter::once(Some(f))
        .chain(cells.iter().map(Threshold::alpha))
        .collect()
}

/// Computes the table; rows are independent and evaluated in parallel on
/// the current rayon pool.
pub fn figure_table(fig: Figure, params: &FigureParams) -> anyhow::Result<Table> {
    params.validate()?;
    let header: Vec<String> = match fig {
        Figure::Fig2 => vec!["F".into(), "thr_orig".into(), "thr_nonpred".into()],
        Figure::Fig3 => ["F", "thr_orig", "thr_nonpred", "thr_pi1w", "thr_pi1np", "thr_pi2np"]
            .map(String::from)
            .to_vec(),
        Figure::Fig5 => std::iter::once("F".to_string())
            .chain(params.m_values.iter().map(|m| format!("thr_M{m}")))
            .collect(),
    };
    let rows = params
        .f_values
        .par_iter()
        .map(|&f| -> anyhow::Result<Vec<Option<f64>>> {
            let cells = match fig {
                Figure::Fig2 => vec![
                    params.mdp_threshold(f, Variant::Original)?,
                    params.mdp_threshold(f, Variant::NonPredictable)?,
                ],
                Figure::Fig3 => vec![
                    params.mdp_threshold(f, Variant::Original)?,
                    params.mdp_threshold(f, Variant::NonPredictable)?,
                    params.strategy(Strategy::Pi1Werlman, f)?,
                    params.strategy(Strategy::Pi1NonPredictable, f)?,
                    params.strategy(Strategy::Pi2NonPredictable, f)?,
                ],
                Figure::Fig5 => params
                    .m_values
                    .iter()
                    .map(|&m| params.simplified_post(f, m))
                    .collect::<anyhow::Result<_>>()?,
            };
            Ok(row(f, &cells))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(Table { header, rows })
}
