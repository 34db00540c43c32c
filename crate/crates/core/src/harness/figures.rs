//! Value grids for plotting the three bivariate functions externally.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorspace::Vector;
use crate::zoo::{ChannelInstance, Function, Spiral, Warga};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
}

impl std::str::FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(FigureId::Fig1),
            "fig2" => Ok(FigureId::Fig2),
            "fig3" => Ok(FigureId::Fig3),
            other => Err(Error::InvalidParameter(format!("unknown figure `{other}`"))),
        }
    }
}

/// Inclusive rectangle `[u_min, u_max] x [v_min, v_max]` sampled at
/// `resolution` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub resolution: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, resolution: usize) -> Self {
        GridSpec {
            u_min: -half_width,
            u_max: half_width,
            v_min: -half_width,
            v_max: half_width,
            resolution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.u_min, self.u_max, self.v_min, self.v_max].iter().all(|v| v.is_finite())
            && self.u_min <= self.u_max
            && self.v_min <= self.v_max
            && self.resolution >= 1;
        if !ok {
            return Err(Error::InvalidParameter(format!("bad grid {self:?}")));
        }
        if self.resolution == 1 && (self.u_min != self.u_max || self.v_min != self.v_max) {
            return Err(Error::InvalidParameter("a single-point grid needs a degenerate range".into()));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Default `delta` of the first figure and `w` of the second.
pub const FIG1_DELTA: f64 = 1.0;
pub const FIG2_W: [f64; 2] = [0.3, 0.0];

pub fn default_grid(fig: FigureId) -> GridSpec {
    match fig {
        FigureId::Fig1 => GridSpec::square(2.0 * FIG1_DELTA, 101),
        FigureId::Fig2 => GridSpec::square(1.5, 101),
        FigureId::Fig3 => GridSpec::square(1.0, 101),
    }
}

fn figure_function(fig: FigureId) -> Result<Box<dyn Function>> {
    Ok(match fig {
        FigureId::Fig1 => Box::new(Spiral::new(FIG1_DELTA, false)?),
        FigureId::Fig2 => Box::new(ChannelInstance::new(Vector::from_slice(&FIG2_W), Some(-1.0), None)?),
        FigureId::Fig3 => Box::new(Warga),
    })
}

/// `(u, v, value)` triples, `u` varying slowest.
pub fn figure_grid(fig: FigureId, grid: &GridSpec) -> Result<Vec<(f64, f64, f64)>> {
    grid.validate()?;
    let f = figure_function(fig)?;
    let us = GridSpec::axis(grid.u_min, grid.u_max, grid.resolution);
    let vs = GridSpec::axis(grid.v_min, grid.v_max, grid.resolution);
    let mut out = Vec::with_capacity(us.len() * vs.len());
    for &u in &us {
        for &v in &vs {
            out.push((u, v, f.eval(&Vector::from_slice(&[u, v]))?.value));
        }
    }
    Ok(out)
}

pub fn figure_csv(fig: FigureId, grid: &GridSpec) -> Result<String> {
    let mut s = String::from("u,v,value\n");
    for (u, v, z) in figure_grid(fig, grid)? {
        writeln!(s, "{u},{v},{z}").expect("string write");
    }
    Ok(s)
}
