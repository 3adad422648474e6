//! Browser bindings: 1-d profiles, 2-d shapes and the alpha sweep.

use epd_gossip::experiments::{alpha_sweep, profile_1d, shape2d};
use epd_gossip::lattice::{builtin_filter, LatticeFilter};
use wasm_bindgen::prelude::*;

const MAX_ROUNDS_1D: u32 = 2000;
const MAX_ROUNDS_2D: u32 = 200;

fn filter(name: &str) -> Result<LatticeFilter, String> {
    builtin_filter(name).ok_or_else(|| format!("unknown filter {name:?}"))
}

fn bounded(n: u32, max: u32) -> Result<usize, String> {
    if n == 0 || n > max {
        return Err(format!("rounds must lie in 1..={max}, got {n}"));
    }
    Ok(n as usize)
}

#[wasm_bindgen]
pub struct Profile {
    v: Vec<f64>,
    simple: Vec<f64>,
    heat: Vec<f64>,
    jacobi: Vec<f64>,
    epd: Vec<f64>,
    filtered: Vec<f64>,
}

#[wasm_bindgen]
impl Profile {
    #[wasm_bindgen(getter)]
    pub fn v(&self) -> Vec<f64> {
        self.v.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn simple(&self) -> Vec<f64> {
        self.simple.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn heat(&self) -> Vec<f64> {
        self.heat.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn jacobi(&self) -> Vec<f64> {
        self.jacobi.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn epd(&self) -> Vec<f64> {
        self.epd.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn filtered(&self) -> Vec<f64> {
        self.filtered.clone()
    }
}

fn profile_inner(n: u32) -> Result<Profile, String> {
    let rows = profile_1d(&filter("lazy1")?, bounded(n, MAX_ROUNDS_1D)?, None).map_err(|e| e.to_string())?;
    Ok(Profile {
        v: rows.iter().map(|r| r.v as f64).collect(),
        simple: rows.iter().map(|r| r.x_n_simple).collect(),
        heat: rows.iter().map(|r| r.heat_oracle).collect(),
        jacobi: rows.iter().map(|r| r.x_n_jacobi).collect(),
        epd: rows.iter().map(|r| r.epd_oracle).collect(),
        filtered: rows.iter().map(|r| r.epd_filtered).collect(),
    })
}

/// Lazy 1-d walk after `n` rounds, both schedules with their oracles.
#[wasm_bindgen]
pub fn profile(n: u32) -> Result<Profile, JsError> {
    profile_inner(n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct Shape {
    side: usize,
    simple: Vec<f64>,
    jacobi: Vec<f64>,
    covariance: Vec<f64>,
    time: f64,
}

#[wasm_bindgen]
impl Shape {
    #[wasm_bindgen(getter)]
    pub fn side(&self) -> usize {
        self.side
    }
    /// Row-major, first index slowest.
    #[wasm_bindgen(getter)]
    pub fn simple(&self) -> Vec<f64> {
        self.simple.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn jacobi(&self) -> Vec<f64> {
        self.jacobi.clone()
    }
    /// `[q11, q12, q21, q22]`
    #[wasm_bindgen(getter)]
    pub fn covariance(&self) -> Vec<f64> {
        self.covariance.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn time(&self) -> f64 {
        self.time
    }
}

fn shape_inner(name: &str, n: u32) -> Result<Shape, String> {
    let s = shape2d(&filter(name)?, bounded(n, MAX_ROUNDS_2D)?).map_err(|e| e.to_string())?;
    Ok(Shape {
        side: s.jacobi.side(),
        simple: s.simple.embedded(s.jacobi.box_radius()).values().to_vec(),
        jacobi: s.jacobi.values().to_vec(),
        covariance: s.covariance.iter().flatten().copied().collect(),
        time: s.time,
    })
}

/// Simple and Jacobi iterates of a 2-d filter on a common square grid.
#[wasm_bindgen]
pub fn shape(filter_name: &str, n: u32) -> Result<Shape, JsError> {
    shape_inner(filter_name, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct Sweep {
    v: Vec<f64>,
    x_n: Vec<f64>,
    oracle: Vec<f64>,
    warning: Option<String>,
}

#[wasm_bindgen]
impl Sweep {
    #[wasm_bindgen(getter)]
    pub fn v(&self) -> Vec<f64> {
        self.v.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn x_n(&self) -> Vec<f64> {
        self.x_n.clone()
    }
    /// NaN where the EPD density is undefined for this alpha.
    #[wasm_bindgen(getter)]
    pub fn oracle(&self) -> Vec<f64> {
        self.oracle.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn warning(&self) -> Option<String> {
        self.warning.clone()
    }
}

fn sweep_inner(alpha: f64, n: u32) -> Result<Sweep, String> {
    if !alpha.is_finite() {
        return Err("alpha must be finite".into());
    }
    let mut p = alpha_sweep(&filter("lazy1")?, &[alpha], bounded(n, MAX_ROUNDS_1D)?)
        .map_err(|e| e.to_string())?;
    let p = p.remove(0);
    Ok(Sweep {
        v: p.rows.iter().map(|r| r.v as f64).collect(),
        x_n: p.rows.iter().map(|r| r.x_n).collect(),
        oracle: p.rows.iter().map(|r| r.epd_oracle.unwrap_or(f64::NAN)).collect(),
        warning: p.warning,
    })
}

/// Lazy 1-d Jacobi (alpha, 0) iterate after `n` rounds.
#[wasm_bindgen]
pub fn sweep(alpha: f64, n: u32) -> Result<Sweep, JsError> {
    sweep_inner(alpha, n).map_err(|e| JsError::new(&e))
}
