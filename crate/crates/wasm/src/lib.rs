//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; the plain-Rust halves (`*_json`) are
//! what the native tests exercise.

use kappa_core::embeddings::{m_logit, m_probit};
use kappa_core::estimator::{estimate, KappaEstimate};
use kappa_core::inference::{edgeworth_density, standard_error, test_or_boundary, TestFamily, TestResult};
use kappa_core::{ObservationVector, VarianceModel};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct CorrOutput {
    pub estimate: KappaEstimate,
    pub se: f64,
    pub wald: TestResult,
    pub lrt: TestResult,
    pub scaled_lrt: TestResult,
}

#[derive(Debug, Serialize)]
pub struct Curves {
    pub t: Vec<f64>,
    pub logit: Vec<f64>,
    pub probit: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Density {
    pub t: Vec<f64>,
    pub normal: Vec<f64>,
    pub edgeworth: Vec<f64>,
    pub se: f64,
}

/// Parses whitespace- or comma-separated numbers.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect()
}

fn observations(x: &str, y: &str) -> Result<(ObservationVector, ObservationVector), String> {
    let x = ObservationVector::new(parse_numbers(x)?).map_err(|e| format!("x: {e}"))?;
    let y = ObservationVector::new(parse_numbers(y)?).map_err(|e| format!("y: {e}"))?;
    Ok((x, y))
}

pub fn corr_json(x: &str, y: &str, c: f64) -> Result<String, String> {
    let (x, y) = observations(x, y)?;
    let vm = VarianceModel::with_c(c).map_err(|e| e.to_string())?;
    let e = estimate(&x, &y).map_err(|e| e.to_string())?;
    let test = |family| test_or_boundary(family, e.tau_corr, e.n, &vm).map_err(|e| e.to_string());
    let out = CorrOutput {
        se: standard_error(e.tau_corr, e.n, &vm).map_err(|e| e.to_string())?,
        wald: test(TestFamily::Wald)?,
        lrt: test(TestFamily::Lrt)?,
        scaled_lrt: test(TestFamily::ScaledLrt)?,
        estimate: e,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

pub fn embedding_json(range: f64, points: usize) -> Result<String, String> {
    if !(range > 0.0 && range.is_finite()) || points < 2 {
        return Err("need range > 0 and at least two points".into());
    }
    let t: Vec<f64> = (0..points)
        .map(|i| -range + 2.0 * range * i as f64 / (points - 1) as f64)
        .collect();
    let curves = Curves {
        logit: t.iter().map(|&v| m_logit(v)).collect(),
        probit: t.iter().map(|&v| m_probit(v)).collect(),
        t,
    };
    serde_json::to_string(&curves).map_err(|e| e.to_string())
}

/// Null density of τ̂ for the sample size of `x`, plain and with the
/// Edgeworth correction from the sample's γ₃, γ₄.
pub fn edgeworth_json(x: &str, y: &str, c: f64, points: usize) -> Result<String, String> {
    let (x, y) = observations(x, y)?;
    let vm = VarianceModel::with_c(c).map_err(|e| e.to_string())?;
    let e = estimate(&x, &y).map_err(|e| e.to_string())?;
    let se = standard_error(0.0, e.n, &vm).map_err(|e| e.to_string())?;
    let points = points.max(2);
    let t: Vec<f64> = (0..points)
        .map(|i| -4.0 * se + 8.0 * se * i as f64 / (points - 1) as f64)
        .collect();
    let density = |g3, g4| -> Result<Vec<f64>, String> {
        t.iter()
            .map(|&v| edgeworth_density(v, 0.0, se, g3, g4).map_err(|e| e.to_string()))
            .collect()
    };
    let out = Density {
        normal: density(0.0, 0.0)?,
        edgeworth: density(e.gamma3, e.gamma4)?,
        t,
        se,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = kappaCorr)]
pub fn kappa_corr(x: &str, y: &str, c: f64) -> Result<String, JsError> {
    corr_json(x, y, c).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = embeddingCurves)]
pub fn embedding_curves(range: f64, points: usize) -> Result<String, JsError> {
    embedding_json(range, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = edgeworthCurve)]
pub fn edgeworth_curve(x: &str, y: &str, c: f64, points: usize) -> Result<String, JsError> {
    edgeworth_json(x, y, c, points).map_err(|e| JsError::new(&e))
}
