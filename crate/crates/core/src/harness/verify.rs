//! Property suites over the function zoo, the chain quadratic and the
//! certifiers, each verdict carrying its measured margin.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::experiments::{chain_structure_verdicts, quad_lower_bound_run, rotation_run};
use super::report::{Relation, Report, Verdict};
use crate::error::Result;
use crate::rng::{role, RngStream};
use crate::solvers::{ball_average_gradient, ball_average_value, default_span_schedule, steepest_descent_exact,
    subgradient_method, DEFAULT_PROBE_STEP};
use crate::stationarity::{
    certify_delta_eps, min_norm_brute_oracle, min_norm_point, near_stationarity_distance_lb, subdiff_norm_lower_bound,
    Sampling, WOLFE_TOL,
};
use crate::vectorspace::{sample_ball, sample_sphere, Vector};
use crate::zoo::{ChannelInstance, Function, Spiral, Warga};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Prop1,
    Channel,
    Quadratic,
    Remark,
    Minnorm,
    Smoothing,
    All,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Prop1 => "prop1",
            Suite::Channel => "channel",
            Suite::Quadratic => "quadratic",
            Suite::Remark => "remark",
            Suite::Minnorm => "minnorm",
            Suite::Smoothing => "smoothing",
            Suite::All => "all",
        }
    }
}

/// Sample sizes; the defaults are the full-size suites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub ball_samples: usize,
    pub lipschitz_pairs: usize,
    pub channel_samples: usize,
    pub minnorm_instances: usize,
    pub smoothing_samples: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        SuiteSizes {
            ball_samples: 100_000,
            lipschitz_pairs: 100_000,
            channel_samples: 1_000_000,
            minnorm_instances: 1000,
            smoothing_samples: 200_000,
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64, sizes: &SuiteSizes) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new(suite.as_str());
    let mut rng = RngStream::derive(seed, role::CERTIFIER);
    let suites: &[Suite] = match suite {
        Suite::All => &[
            Suite::Prop1,
            Suite::Channel,
            Suite::Quadratic,
            Suite::Remark,
            Suite::Minnorm,
            Suite::Smoothing,
        ],
        _ => std::slice::from_ref(&suite),
    };
    for s in suites {
        let mut v = match s {
            Suite::Prop1 => prop1(sizes, &mut rng)?,
            Suite::Channel => channel(sizes, &mut rng)?,
            Suite::Quadratic => quadratic()?,
            Suite::Remark => remark(&mut rng)?,
            Suite::Minnorm => minnorm(sizes, &mut rng)?,
            Suite::Smoothing => smoothing(sizes, &mut rng)?,
            Suite::All => unreachable!(),
        };
        report.verdicts.append(&mut v);
    }
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn v2(a: f64, b: f64) -> Vector {
    Vector::from_slice(&[a, b])
}

fn prop1(sizes: &SuiteSizes, rng: &mut RngStream) -> Result<Vec<Verdict>> {
    let delta = 1.0;
    let mut f = Spiral::new(delta, false)?;
    let stencil = Sampling::Stencil(vec![v2(0.0, delta), v2(0.0, -delta)]);
    let cert = certify_delta_eps(&mut f, &Vector::zeros(2), delta, 1e-8, &stencil, rng)?;

    let mut min_inner = f64::INFINITY;
    let mut max_outer = 0.0f64;
    let ext = Spiral::new(delta, true)?;
    let mut ext_gap = 0.0f64;
    for _ in 0..sizes.ball_samples {
        let x = sample_ball(2, delta, rng)?;
        min_inner = min_inner.min(f.eval(&x)?.subgrad.norm());
        let y = sample_ball(2, 2.0 * delta, rng)?;
        let r = f.eval(&y)?;
        max_outer = max_outer.max(r.subgrad.norm());
        let e = ext.eval(&y)?;
        ext_gap = ext_gap.max((e.value - r.value).abs()).max((&e.subgrad - &r.subgrad).norm());
    }
    Ok(vec![
        Verdict::check(4, "stencil min-norm at the origin", cert.value, Relation::Le, 1e-8),
        Verdict::check(4, "min gradient norm in the delta-ball", min_inner, Relation::Ge, 1.0 - 1e-9),
        Verdict::check(4, "max gradient norm in the 2 delta-ball", max_outer, Relation::Le, 2.0 * PI + 1e-9),
        Verdict::check(4, "extension deviation in the 2 delta-ball", ext_gap, Relation::Le, 1e-12),
    ])
}

/// A point near one of the channel's nondifferentiable sets, or a generic one.
fn channel_sample(c: &ChannelInstance, rng: &mut RngStream) -> Result<Vector> {
    let d = c.w().dim();
    let wn = c.w().norm();
    let w_bar = c.w_bar();
    let jitter = |rng: &mut RngStream| -> Result<Vector> {
        let scale = 10f64.powf(-2.0 - 12.0 * rng.uniform());
        sample_ball(d, scale, rng)
    };
    Ok(match (rng.uniform() * 4.0) as usize {
        0 => sample_ball(d, 4.0 * wn.max(1.0), rng)?,
        1 => jitter(rng)?,
        2 => &c.w().scaled(-1.0) + &jitter(rng)?,
        _ => {
            // y + w = r (w_bar / 2 + (sqrt 3 / 2) p) with p orthogonal to w_bar.
            let mut p = sample_sphere(d, 1.0, rng)?;
            p.axpy(-p.dot(w_bar), w_bar);
            let p = p.scaled(1.0 / p.norm().max(f64::MIN_POSITIVE));
            let r = 3.0 * wn.max(0.5) * rng.uniform();
            let mut z = w_bar.scaled(0.5 * r);
            z.axpy(0.75f64.sqrt() * r, &p);
            &(&z - c.w()) + &jitter(rng)?
        }
    })
}

fn random_channel(rng: &mut RngStream) -> Result<ChannelInstance> {
    let d = 2 + (rng.uniform() * 4.0) as usize;
    let norm = 0.05 + 0.95 * rng.uniform();
    ChannelInstance::pure(sample_sphere(d, norm, rng)?)
}

fn channel(sizes: &SuiteSizes, rng: &mut RngStream) -> Result<Vec<Verdict>> {
    let instances: Vec<ChannelInstance> = (0..8).map(|_| random_channel(rng)).collect::<Result<_>>()?;
    let mut max_ratio = 0.0f64;
    for i in 0..sizes.lipschitz_pairs {
        let c = &instances[i % instances.len()];
        let x = channel_sample(c, rng)?;
        let r = 10f64.powf(-6.0 + 6.0 * rng.uniform());
        let y = &x + &sample_sphere(x.dim(), r, rng)?;
        let dist = x.distance(&y);
        if dist > 0.0 {
            max_ratio = max_ratio.max((c.eval(&x)?.value - c.eval(&y)?.value).abs() / dist);
        }
    }
    let mut min_norm = f64::INFINITY;
    let mut min_diff_norm = f64::INFINITY;
    let mut worst_slack = f64::INFINITY;
    for i in 0..sizes.channel_samples {
        let c = &instances[i % instances.len()];
        let x = channel_sample(c, rng)?;
        let r = c.eval(&x)?;
        let n = r.subgrad.norm();
        min_norm = min_norm.min(n);
        if r.differentiable {
            min_diff_norm = min_diff_norm.min(n);
        }
        let bound = subdiff_norm_lower_bound(c, &x)?.value;
        worst_slack = worst_slack.min(n - bound);
    }
    Ok(vec![
        Verdict::check(5, "max Lipschitz ratio over random pairs", max_ratio, Relation::Le, 7.0 + 1e-6),
        Verdict::check(5, "min subgradient norm", min_norm, Relation::Ge, FRAC_1_SQRT_2 - 1e-6),
        Verdict::check(5, "min gradient norm at differentiable points", min_diff_norm, Relation::Ge, 1.0 - 1e-9),
        Verdict::check(5, "min of (subgradient norm - analytic bound)", worst_slack, Relation::Ge, -1e-9),
    ])
}

fn quadratic() -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    for t in [2, 5, 10] {
        out.extend(chain_structure_verdicts(t, 2 * t)?);
    }
    let lb = |t: usize| (-(t as f64)).exp();
    for t in [2, 5, 10, 15] {
        let d = 2 * t;
        for desc in [subgradient_method(default_span_schedule()), steepest_descent_exact(DEFAULT_PROBE_STEP)] {
            let (hq, tr) = quad_lower_bound_run(&desc, t, d, 0)?;
            out.push(Verdict::check(
                1,
                format!("{} T={t}: min_t ||x_t - x*|| >= exp(-T)", desc.logic.name()),
                tr.min_distance_to(hq.x_star())?,
                Relation::Ge,
                lb(t),
            ));
        }
        let run = rotation_run(&subgradient_method(default_span_schedule()), t, d, 0)?;
        out.push(Verdict::check(
            2,
            format!("rotation T={t}: min_t ||x_t - U^T x*|| >= exp(-T)"),
            run.transcript.min_distance_to(&run.x_star)?,
            Relation::Ge,
            lb(t),
        ));
        out.push(Verdict::check(
            2,
            format!("rotation T={t}: materialized replies, max relative error"),
            run.max_relative_error,
            Relation::Le,
            1e-12,
        ));
    }
    Ok(out)
}

fn remark(rng: &mut RngStream) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    for delta in [0.05, 0.1] {
        for d in [2, 5] {
            let w = sample_sphere(d, delta / 2.0, rng)?;
            let mut c = ChannelInstance::remark(w)?;
            let w_bar = c.w_bar().clone();
            let mut pair_err = 0.0f64;
            let mut grad_err = 0.0f64;
            let mut last_v = None;
            for _ in 0..1000 {
                let mut v = sample_sphere(d, 1.0, rng)?;
                v.axpy(-v.dot(&w_bar), &w_bar);
                let v = v.scaled(delta / v.norm());
                let gp = c.eval(&v)?.subgrad;
                let gm = c.eval(&v.scaled(-1.0))?.subgrad;
                pair_err = pair_err.max((&gp + &gm).scaled(0.5).norm());
                grad_err = grad_err.max((&gp - &v.scaled(1.0 / delta)).norm());
                last_v = Some(v);
            }
            let v = last_v.expect("samples");
            let stencil = Sampling::Stencil(vec![v.clone(), v.scaled(-1.0)]);
            let cert = certify_delta_eps(&mut c, &Vector::zeros(d), delta, 1e-12, &stencil, rng)?;
            out.push(Verdict::check(
                8,
                format!("delta={delta} d={d}: |(grad(v) + grad(-v)) / 2|"),
                pair_err,
                Relation::Le,
                1e-12,
            ));
            out.push(Verdict::check(8, format!("delta={delta} d={d}: |grad(v) - v/|v||"), grad_err, Relation::Le, 1e-12));
            out.push(Verdict::check(8, format!("delta={delta} d={d}: witness at the origin"), cert.value, Relation::Le, 1e-12));

            let origin_lb = near_stationarity_distance_lb(&c, &Vector::zeros(d))?.value;
            out.push(Verdict::check(
                8,
                format!("delta={delta} d={d}: value-gap distance bound at the origin"),
                origin_lb,
                Relation::Ge,
                1.0 / 7.0 - 1e-9,
            ));
            let (found, min_dist) = small_subgradient_scan(&c, rng)?;
            out.push(Verdict::check(
                8,
                format!("delta={delta} d={d}: sampled points with subgradient norm < 1/sqrt 2"),
                found as f64,
                Relation::Ge,
                1.0,
            ));
            out.push(Verdict::check(
                8,
                format!("delta={delta} d={d}: min distance of those points to the origin"),
                min_dist,
                Relation::Ge,
                1.0 / 7.0 - 1e-9,
            ));
        }
    }
    Ok(out)
}

/// Samples along the channel and at random; returns how many points had a
/// subgradient of norm below `1/sqrt 2`, and their least distance to 0.
pub fn small_subgradient_scan(c: &ChannelInstance, rng: &mut RngStream) -> Result<(usize, f64)> {
    let d = c.w().dim();
    let mut found = 0;
    let mut min_dist = f64::INFINITY;
    for i in 0..20_000 {
        let x = if i % 2 == 0 {
            let s = 2.0 * rng.uniform();
            &c.w_bar().scaled(s) + &sample_ball(d, 0.05 * rng.uniform(), rng)?
        } else {
            sample_ball(d, 2.0, rng)?
        };
        if c.eval(&x)?.subgrad.norm() < FRAC_1_SQRT_2 {
            found += 1;
            min_dist = min_dist.min(x.norm());
        }
    }
    Ok((found, min_dist))
}

fn random_small_instance(rng: &mut RngStream) -> Result<Vec<Vector>> {
    let n = 1 + (rng.uniform() * 5.0) as usize;
    let d = 1 + (rng.uniform() * 4.0) as usize;
    (0..n)
        .map(|_| Vector::new((0..d).map(|_| 2.0 * rng.uniform() - 1.0).collect()))
        .collect()
}

fn minnorm(sizes: &SuiteSizes, rng: &mut RngStream) -> Result<Vec<Verdict>> {
    let mut worst = 0.0f64;
    for _ in 0..sizes.minnorm_instances {
        let pts = random_small_instance(rng)?;
        let a = min_norm_point(&pts, WOLFE_TOL)?.norm;
        let b = min_norm_brute_oracle(&pts)?;
        worst = worst.max((a - b).abs());
    }
    let pair = min_norm_point(&[v2(1.0, 0.0), v2(-1.0, 0.0)], WOLFE_TOL)?;
    let single = min_norm_point(&[v2(2.0, 0.0)], WOLFE_TOL)?;
    Ok(vec![
        Verdict::check(9, "max |Wolfe - enumeration| over random instances", worst, Relation::Le, 1e-6),
        Verdict::check(9, "hull of (1,0), (-1,0)", pair.norm, Relation::Eq, 0.0),
        Verdict::check(9, "hull of (2,0)", single.norm, Relation::Eq, 2.0),
    ])
}

/// Largest deviation between the ball-averaged gradient and central
/// differences of the ball-averaged value over the same draws.
pub fn smoothing_gap<F: Function + ?Sized>(f: &F, x: &Vector, delta: f64, us: &[Vector], h: f64) -> Result<f64> {
    let (mean, _) = ball_average_gradient(f, x, delta, us)?;
    let mut gap = 0.0f64;
    for j in 0..x.dim() {
        let e = Vector::basis(x.dim(), j).scaled(h);
        let fd = (ball_average_value(f, &(x + &e), delta, us)? - ball_average_value(f, &(x - &e), delta, us)?) / (2.0 * h);
        gap = gap.max((fd - mean[j]).abs());
    }
    Ok(gap)
}

fn smoothing(sizes: &SuiteSizes, rng: &mut RngStream) -> Result<Vec<Verdict>> {
    let n = sizes.smoothing_samples / 10;
    let us: Vec<Vector> = (0..n.max(2)).map(|_| sample_ball(2, 1.0, rng)).collect::<Result<_>>()?;
    let spiral = Spiral::new(1.0, false)?;
    let mut out = Vec::new();
    for (name, f) in [("spiral", &spiral as &dyn Function), ("warga", &Warga as &dyn Function)] {
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let x = sample_ball(2, 1.0, rng)?;
            worst = worst.max(smoothing_gap(f, &x, 0.1, &us, 1e-6)?);
        }
        out.push(Verdict::check(
            10,
            format!("{name}: |E grad - finite difference of E value|"),
            worst,
            Relation::Le,
            1e-3,
        ));
    }
    let big: Vec<Vector> = (0..sizes.smoothing_samples.max(2))
        .map(|_| sample_ball(2, 1.0, rng))
        .collect::<Result<_>>()?;
    let (mean, se) = ball_average_gradient(&spiral, &Vector::zeros(2), 1.0, &big)?;
    out.push(Verdict::check(
        10,
        "spiral origin: odd component of the averaged gradient in standard errors",
        mean[0].abs() / se[0],
        Relation::Le,
        3.0,
    ));
    Ok(out)
}
