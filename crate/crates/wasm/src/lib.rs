//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; errors surface as JS exceptions.

use bifrost::grid::{ratio_grid, Axis};
use bifrost::protocols::{bifrequency_advantage, bifrequency_qfi, thermal_equal_occupation_hz};
use bifrost::Probe;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Heatmap {
    eta1: f64,
    n_s: Vec<f64>,
    n_th: Vec<f64>,
    /// Row-major, one row per `n_s` value.
    ratio: Vec<Vec<f64>>,
    max_ratio: f64,
    advantage_cells: usize,
}

#[derive(Serialize)]
struct Point {
    eta1: f64,
    n_s: f64,
    n_th: f64,
    h_q: f64,
    h_c: f64,
    ratio: f64,
    h_q_numeric: f64,
    h_c_numeric: f64,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn heatmap_json(
    eta1: f64,
    ns_max: f64,
    ns_steps: usize,
    nth_min: f64,
    nth_max: f64,
    nth_steps: usize,
) -> Result<String, String> {
    let n_s = Axis::Linear { min: 0.0, max: ns_max, steps: ns_steps }
        .values()
        .map_err(|e| e.to_string())?;
    let n_th = Axis::Log { min: nth_min, max: nth_max, steps: nth_steps }
        .values()
        .map_err(|e| e.to_string())?;
    let rows = ratio_grid(&[eta1], &n_s, &n_th).map_err(|e| e.to_string())?;
    let ratio: Vec<Vec<f64>> = rows.chunks(n_th.len()).map(|c| c.iter().map(|r| r.ratio).collect()).collect();
    to_json(&Heatmap {
        eta1,
        max_ratio: rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max),
        advantage_cells: rows.iter().filter(|r| r.ratio > 1.0).count(),
        n_s,
        n_th,
        ratio,
    })
}

pub fn point_json(eta1: f64, n_s: f64, n_th: f64) -> Result<String, String> {
    let adv = bifrequency_advantage(eta1, n_s, n_th).map_err(|e| e.to_string())?;
    let h_q_numeric = bifrequency_qfi(Probe::Tmsv, eta1, n_s, n_th).map_err(|e| e.to_string())?.value;
    let h_c_numeric = bifrequency_qfi(Probe::Coherent, eta1, n_s, n_th).map_err(|e| e.to_string())?.value;
    to_json(&Point {
        eta1,
        n_s,
        n_th,
        h_q: adv.h_q,
        h_c: adv.h_c,
        ratio: adv.ratio,
        h_q_numeric,
        h_c_numeric,
    })
}

pub fn thermal_json(ghz: f64, temp_k: f64, delta_frac: f64) -> Result<String, String> {
    to_json(&thermal_equal_occupation_hz(ghz * 1e9, delta_frac, temp_k).map_err(|e| e.to_string())?)
}

/// Ratio `H_Q/H_C` on `n_s ∈ [0, ns_max]` × log-spaced `n_th`.
#[wasm_bindgen]
pub fn ratio_heatmap(
    eta1: f64,
    ns_max: f64,
    ns_steps: usize,
    nth_min: f64,
    nth_max: f64,
    nth_steps: usize,
) -> Result<String, JsError> {
    heatmap_json(eta1, ns_max, ns_steps, nth_min, nth_max, nth_steps).map_err(|e| JsError::new(&e))
}

/// Closed-form and numeric QFI for both probes at one point.
#[wasm_bindgen]
pub fn qfi_point(eta1: f64, n_s: f64, n_th: f64) -> Result<String, JsError> {
    point_json(eta1, n_s, n_th).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn thermal_approx(ghz: f64, temp_k: f64, delta_frac: f64) -> Result<String, JsError> {
    thermal_json(ghz, temp_k, delta_frac).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn heatmap_shape() {
        let v: Value = serde_json::from_str(&heatmap_json(0.9, 2.0, 5, 0.01, 100.0, 4).unwrap()).unwrap();
        let ratio = v["ratio"].as_array().unwrap();
        assert_eq!(ratio.len(), 5);
        assert_eq!(ratio[0].as_array().unwrap().len(), 4);
        for r in ratio[0].as_array().unwrap() {
            assert!((r.as_f64().unwrap() - 1.0).abs() < 1e-9);
        }
        assert!(v["max_ratio"].as_f64().unwrap() > 1.0);
        assert!(heatmap_json(1.0, 2.0, 5, 0.01, 100.0, 4).is_err());
        assert!(heatmap_json(0.5, 2.0, 5, 0.0, 100.0, 4).is_err());
    }

    #[test]
    fn point_agrees_with_numeric() {
        let v: Value = serde_json::from_str(&point_json(0.75, 1.0, 1.0).unwrap()).unwrap();
        let rel = |a: &str, b: &str| {
            let (x, y) = (v[a].as_f64().unwrap(), v[b].as_f64().unwrap());
            (x - y).abs() / y
        };
        assert!(rel("h_q_numeric", "h_q") < 1e-6);
        assert!(rel("h_c_numeric", "h_c") < 1e-6);
        assert!(point_json(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn thermal() {
        let v: Value = serde_json::from_str(&thermal_json(5.0, 300.0, 0.2).unwrap()).unwrap();
        assert!((v["rel_error"].as_f64().unwrap() - 0.04).abs() < 5e-3);
    }
}
