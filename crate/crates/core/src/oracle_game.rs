//! The first-order oracle protocol: an algorithm issues numbered queries, an
//! oracle answers each with a value and a subgradient, and the exchange is
//! recorded in a [`Transcript`].

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::solvers::SolverLogic;
use crate::vectorspace::Vector;
use crate::zoo::{FirstOrderReply, Function};

/// Anything that answers first-order queries. Adversarial oracles keep
/// state between queries; plain functions do not.
pub trait Oracle {
    fn dim(&self) -> usize;

    fn query(&mut self, x: &Vector) -> Result<FirstOrderReply>;

    /// True when answers depend only on the query point.
    fn is_pure(&self) -> bool {
        false
    }
}

impl<F: Function> Oracle for F {
    fn dim(&self) -> usize {
        Function::dim(self)
    }

    fn query(&mut self, x: &Vector) -> Result<FirstOrderReply> {
        self.eval(x)
    }

    fn is_pure(&self) -> bool {
        true
    }
}

/// One query and its reply.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub query: Vector,
    pub reply: FirstOrderReply,
}

#[derive(Serialize, Deserialize)]
struct EntryLine {
    index: usize,
    query: Vector,
    value: f64,
    subgrad: Vector,
    differentiable: bool,
}

/// Append-only record of a game.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    budget: usize,
    dim: usize,
    entries: Vec<Entry>,
}

impl Transcript {
    pub fn new(budget: usize, dim: usize) -> Result<Self> {
        if budget == 0 || dim == 0 {
            return Err(Error::InvalidParameter("budget and dimension must be positive".into()));
        }
        Ok(Transcript {
            budget,
            dim,
            entries: Vec::with_capacity(budget),
        })
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn queries(&self) -> impl Iterator<Item = &Vector> {
        self.entries.iter().map(|e| &e.query)
    }

    pub fn push(&mut self, query: Vector, reply: FirstOrderReply) -> Result<()> {
        if self.entries.len() >= self.budget {
            return Err(Error::BudgetExhausted { budget: self.budget });
        }
        query.check_dim(self.dim)?;
        reply.subgrad.check_dim(self.dim)?;
        self.entries.push(Entry { query, reply });
        Ok(())
    }

    /// `min_t ||x_t - target||`.
    pub fn min_distance_to(&self, target: &Vector) -> Result<f64> {
        target.check_dim(self.dim)?;
        self.entries
            .iter()
            .map(|e| e.query.distance(target))
            .min_by(f64::total_cmp)
            .ok_or_else(|| Error::Degenerate("empty transcript".into()))
    }

    /// One JSON object per line: index (from 1), query, value, subgrad, differentiable.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            let line = EntryLine {
                index: i + 1,
                query: e.query.clone(),
                value: e.reply.value,
                subgrad: e.reply.subgrad.clone(),
                differentiable: e.reply.differentiable,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
    }

    /// Reads a transcript written by [`Transcript::write_jsonl`].
    pub fn read_jsonl<R: BufRead>(input: R, budget: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: EntryLine = serde_json::from_str(&line)?;
            if e.index != entries.len() + 1 {
                return Err(Error::InvalidParameter(format!(
                    "transcript line {} has index {}",
                    entries.len() + 1,
                    e.index
                )));
            }
            entries.push(Entry {
                query: e.query,
                reply: FirstOrderReply {
                    value: e.value,
                    subgrad: e.subgrad,
                    differentiable: e.differentiable,
                },
            });
        }
        let dim = entries.first().map(|e| e.query.dim()).unwrap_or(1);
        let mut t = Transcript::new(budget.max(entries.len()), dim)?;
        for e in entries {
            t.push(e.query, e.reply)?;
        }
        Ok(t)
    }
}

/// Declared algorithm class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmClass {
    Deterministic,
    LinearSpan,
    Randomized,
}

/// A serializable recipe for an algorithm: class tag, starting point and
/// step logic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmDescriptor {
    pub class: AlgorithmClass,
    /// Starting point; `None` means the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_point: Option<Vector>,
    pub logic: SolverLogic,
}

impl AlgorithmDescriptor {
    pub fn new(class: AlgorithmClass, logic: SolverLogic) -> Self {
        AlgorithmDescriptor {
            class,
            initial_point: None,
            logic,
        }
    }

    /// Same logic under a different class tag (e.g. a span method used as a
    /// plain deterministic algorithm).
    pub fn with_class(mut self, class: AlgorithmClass) -> Self {
        self.class = class;
        self
    }

    pub fn with_initial_point(mut self, x: Vector) -> Self {
        self.initial_point = Some(x);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.class == AlgorithmClass::LinearSpan {
            if let Some(x) = &self.initial_point {
                if !x.is_zero() {
                    return Err(Error::InvalidParameter("linear-span algorithms start at the origin".into()));
                }
            }
        }
        if self.class != AlgorithmClass::Randomized && self.logic.uses_randomness() {
            return Err(Error::InvalidParameter(format!(
                "{} logic draws random samples and must be tagged randomized",
                self.logic.name()
            )));
        }
        if self.class == AlgorithmClass::LinearSpan && !self.logic.is_span_method() {
            return Err(Error::InvalidParameter(format!(
                "{} logic is not a linear-span method",
                self.logic.name()
            )));
        }
        self.logic.validate()
    }

    pub fn instantiate(&self, dim: usize) -> Result<Box<dyn Algorithm>> {
        self.validate()?;
        let x1 = match &self.initial_point {
            Some(x) => {
                x.check_dim(dim)?;
                x.clone()
            }
            None => Vector::zeros(dim),
        };
        Ok(self.logic.instantiate(x1))
    }
}

/// What an algorithm does after seeing a reply.
#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Query(Vector),
    Stop,
}

/// A running algorithm. It sees only its own queries and the replies.
pub trait Algorithm {
    fn first_query(&mut self, rng: &mut RngStream) -> Result<Vector>;

    fn observe(&mut self, query: &Vector, reply: &FirstOrderReply, rng: &mut RngStream) -> Result<Step>;
}

/// Plays `algorithm` against `oracle` for at most `budget` queries.
///
/// The transcript has exactly `budget` entries unless the algorithm stops
/// early (a stationarity-based stopping rule).
pub fn play<O: Oracle + ?Sized>(
    algorithm: &AlgorithmDescriptor,
    oracle: &mut O,
    budget: usize,
    dim: usize,
    rng: &mut RngStream,
) -> Result<Transcript> {
    if oracle.dim() != dim {
        return Err(Error::dims(dim, oracle.dim()));
    }
    let mut transcript = Transcript::new(budget, dim)?;
    let mut alg = algorithm.instantiate(dim)?;
    let mut x = alg.first_query(rng)?;
    loop {
        let reply = oracle.query(&x).map_err(|e| Error::Oracle {
            index: transcript.len() + 1,
            query: x.as_slice().to_vec(),
            source: Box::new(e),
        })?;
        transcript.push(x.clone(), reply.clone())?;
        if transcript.len() == budget {
            break;
        }
        match alg.observe(&x, &reply, rng)? {
            Step::Query(next) => {
                next.check_dim(dim)?;
                x = next;
            }
            Step::Stop => break,
        }
    }
    Ok(transcript)
}

/// Outcome of a span-membership check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanCheck {
    pub valid: bool,
    /// 1-based index of the first query outside the span.
    pub first_violation: Option<usize>,
}

/// Default tolerance for [`validate_span`].
pub const SPAN_TOL: f64 = 1e-8;

/// Checks `x_1 = 0` and `x_t in span(g_1, ..., g_{t-1})` for each `t`, up to
/// a residual of `tol * max(1, ||x_t||)`.
pub fn validate_span(t: &Transcript, tol: f64) -> SpanCheck {
    let mut basis: Vec<Vector> = Vec::new();
    for (i, e) in t.entries().iter().enumerate() {
        let x = &e.query;
        let mut r = x.clone();
        crate::vectorspace::project_out(&mut r, &basis);
        let limit = if i == 0 { 0.0 } else { tol * x.norm().max(1.0) };
        if r.norm() > limit {
            return SpanCheck {
                valid: false,
                first_violation: Some(i + 1),
            };
        }
        let mut g = e.reply.subgrad.clone();
        let scale = g.norm();
        if scale > 0.0 {
            g = g.scaled(1.0 / scale);
            crate::vectorspace::project_out(&mut g, &basis);
            let gn = g.norm();
            if gn > 1e-12 {
                basis.push(g.scaled(1.0 / gn));
            }
        }
    }
    SpanCheck {
        valid: true,
        first_violation: None,
    }
}
