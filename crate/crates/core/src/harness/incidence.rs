//! Incidence-matrix registry for every model variant plus the worked
//! examples, with rendered tables and machine-readable verdicts.

use crate::structural::{
    build_incidence, full_column_rank, render, IncidenceMatrix, MatchingResult, StructuralError,
};
use serde::Serialize;
use std::collections::BTreeMap;

fn eqs(rows: &[(&str, &[&str])]) -> Vec<(String, Vec<String>)> {
    rows.iter()
        .map(|(name, occ)| (name.to_string(), occ.iter().map(|s| s.to_string()).collect()))
        .collect()
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Occurrence sets for a registered (model, variant, setting) triple.
pub fn incidence_for(
    model: &str,
    variant: &str,
    setting: usize,
) -> Result<IncidenceMatrix, StructuralError> {
    match (model, variant, setting) {
        ("demo", _, _) => build_incidence(
            &eqs(&[("(a)", &["x_2"]), ("(b)", &[]), ("(c)", &["x_2", "y"])]),
            &labels(&["x_2", "y"]),
        ),
        ("cstr", "pinn-a", 0) => build_incidence(
            &eqs(&[
                ("Eqn. for dc_A/dt", &["r_A"]),
                ("Eqn. for dc_B/dt", &["r_B"]),
            ]),
            &labels(&["r_A", "r_B"]),
        ),
        ("cstr", "pinn-b", 0) => build_incidence(
            &eqs(&[
                ("Eqn. for dc_A/dt", &["r_1", "r_3"]),
                ("Eqn. for dc_B/dt", &["r_1", "r_2"]),
                ("Eqn. for dT/dt", &["r_1", "r_2", "r_3"]),
                ("Eqn. for dT_K/dt", &[]),
            ]),
            &labels(&["r_1", "r_2", "r_3"]),
        ),
        ("cstr", "pinn-c", 0) => build_incidence(
            &eqs(&[
                ("Eqn. for dc_A/dt", &["k_1", "k_3"]),
                ("Eqn. for dc_B/dt", &["k_1", "k_2"]),
                ("Eqn. for dT/dt", &["k_1", "k_2", "k_3"]),
                ("Eqn. for dT_K/dt", &[]),
            ]),
            &labels(&["k_1", "k_2", "k_3"]),
        ),
        ("cstr", "pinn-c", 1) => build_incidence(
            &eqs(&[
                ("Eqn. for dc_A/dt", &["c_A", "k_1", "k_3"]),
                ("Eqn. for dc_B/dt", &["c_A", "k_1", "k_2"]),
                ("Eqn. for dT/dt", &["c_A", "k_1", "k_2", "k_3"]),
                ("Eqn. for dT_K/dt", &[]),
            ]),
            &labels(&["c_A", "k_1", "k_2", "k_3"]),
        ),
        ("cstr", "pinn-c", 2) => build_incidence(
            &eqs(&[
                ("Eqn. for dc_A/dt", &["k_1", "k_3"]),
                ("Eqn. for dc_B/dt", &["k_1", "k_2"]),
                ("Eqn. for dT/dt", &["T", "k_1", "k_2", "k_3"]),
                ("Eqn. for dT_K/dt", &["T"]),
            ]),
            &labels(&["T", "k_1", "k_2", "k_3"]),
        ),
        ("cstr", "pinn-c", 3) => build_incidence(
            &eqs(&[
                ("Eqn. for dc_A/dt", &["k_1", "k_3"]),
                ("Eqn. for dc_B/dt", &["k_1", "k_2"]),
                ("Eqn. for dT/dt", &["T_K", "k_1", "k_2", "k_3"]),
                ("Eqn. for dT_K/dt", &["T_K"]),
            ]),
            &labels(&["T_K", "k_1", "k_2", "k_3"]),
        ),
        // Identical matrix for all three separator PINN variants.
        ("separator", "pinn-base" | "pinn-d32" | "pinn-d32-rv", 0) => build_incidence(
            &eqs(&[
                ("Eqn. for dh_L/dt", &[]),
                ("Eqn. for dh_DPZ/dt", &["Vdot_c"]),
                ("Eqn. for dh_aq/dt", &["Vdot_c", "Vdot_s"]),
            ]),
            &labels(&["Vdot_c", "Vdot_s"]),
        ),
        ("counterexample-sm5", _, _) => build_incidence(
            &eqs(&[
                ("Eqn. for dx_1/dt", &["x_2", "x_3"]),
                ("Eqn. for dx_2/dt", &[]),
                ("Eqn. for dx_3/dt", &[]),
            ]),
            &labels(&["x_2", "x_3"]),
        ),
        ("counterexample-sm6", _, _) => build_incidence(
            &eqs(&[
                ("Eqn. 1 for dx_1/dt", &["x_1", "x_2"]),
                ("Eqn. 2 for dx_1/dt", &["x_1", "x_2"]),
            ]),
            &labels(&["x_1", "x_2"]),
        ),
        _ => Err(StructuralError::UnknownLabel(format!(
            "no incidence registered for ({model}, {variant}, setting {setting})"
        ))),
    }
}

#[derive(Debug, Serialize)]
pub struct IncidenceReport {
    pub schema: u32,
    pub model: String,
    pub variant: String,
    pub setting: usize,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub crosses: Vec<(usize, usize)>,
    pub full_column_rank: bool,
    pub assignment: BTreeMap<String, String>,
    pub unmatched_columns: Vec<String>,
    pub rendered: String,
}

pub fn incidence_report(
    model: &str,
    variant: &str,
    setting: usize,
) -> Result<IncidenceReport, StructuralError> {
    let matrix = incidence_for(model, variant, setting)?;
    let result = full_column_rank(&matrix)?;
    Ok(report_from(model, variant, setting, &matrix, &result))
}

fn report_from(
    model: &str,
    variant: &str,
    setting: usize,
    matrix: &IncidenceMatrix,
    result: &MatchingResult,
) -> IncidenceReport {
    let mut crosses = Vec::new();
    for (r, row) in matrix.entries.iter().enumerate() {
        for (c, on) in row.iter().enumerate() {
            if *on {
                crosses.push((r, c));
            }
        }
    }
    IncidenceReport {
        schema: 1,
        model: model.into(),
        variant: variant.into(),
        setting,
        rows: matrix.rows.clone(),
        cols: matrix.cols.clone(),
        crosses,
        full_column_rank: result.full_column_rank,
        assignment: result
            .assignment
            .iter()
            .map(|(c, r)| (matrix.cols[*c].clone(), matrix.rows[*r].clone()))
            .collect(),
        unmatched_columns: result
            .unmatched_columns
            .iter()
            .map(|c| matrix.cols[*c].clone())
            .collect(),
        rendered: render(matrix, result),
    }
}
